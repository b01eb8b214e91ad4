"""YAML experiment configs with strict validation.

A config is a flat mapping.  Only ``task`` is required; everything else has
a default, some of which depend on the task (see ``TASK_DEFAULTS``).
Unknown keys are rejected so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import yaml

from .core import is_power_of_two
from .experiments import NoiseSpec
from .training import Task, TrainConfig

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "ExperimentConfig",
    "TASK_DEFAULTS",
    "parse_config",
    "emit_config",
    "load_config",
]

TASK_DEFAULTS = {
    "parity": {"steps": 20_000, "beta": 0.0, "grad_tol": 0.0},
    "fft": {"steps": 200_000, "beta": 1e-3, "grad_tol": 1e-7},
}


class ConfigError(ValueError):
    """A config value failed validation; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ConfigParseError(ValueError):
    def __init__(self, line: Optional[int], message: str):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line


@dataclass
class ExperimentConfig:
    task: str
    n: int = 16
    scales: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0])
    seeds: list = field(default_factory=lambda: [0, 1, 2])
    masked: bool = False
    out: str = "runs"
    alpha: float = 10.0
    learning_rate: float = 1e-4
    steps: Optional[int] = None
    batch_size: int = 1000
    beta: Optional[float] = None
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    eval_every: int = 1000
    test_size: int = 10_000
    grad_tol: Optional[float] = None
    sizes: list = field(default_factory=lambda: [8, 16, 32])
    near_scale: float = 0.01
    far_scale: Optional[float] = None
    far_mode: str = "random"

    def __post_init__(self):
        if self.task not in TASK_DEFAULTS:
            raise ConfigError("task", f"must be one of {sorted(TASK_DEFAULTS)}, got {self.task!r}")
        for key, value in TASK_DEFAULTS[self.task].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        self._validate()

    def _validate(self):
        _int(self, "n")
        if not is_power_of_two(self.n) or self.n < 2:
            raise ConfigError("n", f"must be a power of two >= 2 for task {self.task}, got {self.n}")
        for name in ("steps", "batch_size", "eval_every", "test_size", "seed"):
            _int(self, name)
        for name in ("alpha", "learning_rate", "beta", "adam_beta1", "adam_beta2",
                     "adam_eps", "grad_tol", "near_scale"):
            _float(self, name)
        if self.far_scale is not None:
            _float(self, "far_scale")
        if not isinstance(self.masked, bool):
            raise ConfigError("masked", "must be true or false")
        if not isinstance(self.out, str) or not self.out:
            raise ConfigError("out", "must be a nonempty path")
        if not isinstance(self.scales, list) or not all(_is_num(s) for s in self.scales):
            raise ConfigError("scales", "must be a list of numbers")
        self.scales = [float(s) for s in self.scales]
        if not isinstance(self.seeds, list) or not all(_is_int(s) for s in self.seeds):
            raise ConfigError("seeds", "must be a list of integers")
        if not isinstance(self.sizes, list) or not all(_is_int(s) for s in self.sizes):
            raise ConfigError("sizes", "must be a list of integers")
        if any(not is_power_of_two(s) or s < 2 for s in self.sizes):
            raise ConfigError("sizes", "every size must be a power of two >= 2")
        if self.far_mode not in ("random", "perturb"):
            raise ConfigError("far_mode", "must be 'random' or 'perturb'")
        if self.far_mode == "perturb" and self.far_scale is None:
            raise ConfigError("far_scale", "is required when far_mode is 'perturb'")
        if not self.alpha > 0:
            raise ConfigError("alpha", "must be positive")
        if self.seed < 0 or any(s < 0 for s in self.seeds):
            raise ConfigError("seed", "seeds must be nonnegative")
        # delegate range checks to the owning types, naming the field on failure
        try:
            NoiseSpec(self.scales, self.seeds)
        except ValueError as exc:
            raise ConfigError("scales", str(exc)) from None
        for name in ("learning_rate", "steps", "batch_size", "beta", "adam_beta1",
                     "adam_beta2", "adam_eps", "eval_every", "test_size"):
            try:
                TrainConfig(**{name: getattr(self, name)})
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from None

    @property
    def task_spec(self) -> Task:
        return Task(self.task, self.n)

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.scales, self.seeds)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            steps=self.steps,
            batch_size=self.batch_size,
            beta=self.beta,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            seed=self.seed,
            eval_every=self.eval_every,
            test_size=self.test_size,
            grad_tol=self.grad_tol,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(cfg, name):
    if not _is_int(getattr(cfg, name)):
        raise ConfigError(name, f"must be an integer, got {getattr(cfg, name)!r}")


def _float(cfg, name):
    v = getattr(cfg, name)
    if not _is_num(v):
        raise ConfigError(name, f"must be a number, got {v!r}")
    setattr(cfg, name, float(v))


_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigParseError(line, exc.problem or str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigParseError(None, str(exc)) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigParseError(1, "config must be a mapping of key: value pairs")
    unknown = sorted(set(map(str, doc)) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if "task" not in doc:
        raise ConfigError("task", "is required")
    return ExperimentConfig(**doc)


def emit_config(cfg: ExperimentConfig) -> str:
    """YAML text that parses back to an equal config."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
