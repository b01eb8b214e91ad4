"""Command-line entry point: ``python -m basinlab <subcommand> ...``.

Subcommands: construct, train, basin-sweep, sparsify, scaling-study,
gradcheck.  Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ConfigParseError, ExperimentConfig, emit_config, load_config
from .constructions import build_fft_net, build_parity_net, complex_l0, dumps_params, loads_params
from .core import DomainError, ShapeError, derive_rng, make_rng
from .experiments import (
    basin_sweep,
    budgeted_sparsification,
    optimal_sparsification,
    train_cell,
    scaling_study,
    sparsify_curve,
)
from .gradcheck import check_linear, check_parity, random_linear
from .results import ensure_parent, write_curve_csv, write_run_dir
from .training import fft_target

log = logging.getLogger("basinlab")

# CLI flags that map straight onto ExperimentConfig keys
_CONFIG_FLAGS = ("task", "n", "scales", "seeds", "steps", "batch_size", "learning_rate",
                 "beta", "alpha", "eval_every", "sizes", "near_scale", "far_scale", "far_mode")

GRADCHECK_TOL = 1e-5


def _common(p: argparse.ArgumentParser, out_help: str = "output run directory") -> None:
    p.add_argument("--seed", type=int, default=None, help="root seed (default: config value, 0)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for sweep cells; 1 keeps runs bitwise reproducible")
    p.add_argument("--out", default=None, help=out_help)
    p.add_argument("-v", "--verbose", action="store_true")


def _experiment_flags(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", help="YAML config file; flags override its values")
    p.add_argument("--task", choices=["parity", "fft"])
    p.add_argument("--n", type=int, help="input size, a power of two (default 16)")
    p.add_argument("--steps", type=int, help="optimizer steps (parity 20000, fft 200000)")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="minibatch size (1000)")
    p.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float,
                   help="Adam learning rate (1e-4)")
    p.add_argument("--beta", type=float, help="squared-L1 weight (parity 0, fft 1e-3)")
    p.add_argument("--alpha", type=float, help="sigmoid inverse temperature (10)")
    p.add_argument("--eval-every", dest="eval_every", type=int, help="metric interval (1000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basinlab",
        description="Hand-coded parity/FFT networks, perturbed training and basin measurements.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    sub.required = True

    p = sub.add_parser("construct", help="write a hand-coded network to a file")
    p.add_argument("--task", choices=["parity", "fft"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=10.0)
    _common(p, out_help="output network file (default: stdout)")

    p = sub.add_parser("train", help="train one perturbed copy of the exact network")
    _experiment_flags(p)
    p.add_argument("--scale", type=float, default=None,
                   help="init noise scale (default: first of the config scales)")
    p.add_argument("--masked", action="store_true", default=None)
    _common(p)

    p = sub.add_parser("basin-sweep", help="noise-scale x seed sweep around the exact network")
    _experiment_flags(p)
    p.add_argument("--scales", type=float, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--masked", action="store_true", default=None,
                   help="enforce the exact sparsity pattern during training")
    _common(p)

    p = sub.add_parser("sparsify", help="magnitude-pruning curve of a saved linear network")
    p.add_argument("--net", required=True, help="network file written by construct/train")
    _common(p)

    p = sub.add_parser("scaling-study", help="L0/(n log2 n) for handcoded, near and far inits")
    _experiment_flags(p)
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--near-scale", dest="near_scale", type=float)
    p.add_argument("--far-scale", dest="far_scale", type=float)
    p.add_argument("--far-mode", dest="far_mode", choices=["random", "perturb"])
    _common(p)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--task", choices=["parity", "fft"], required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--beta", type=float, default=0.1, help="penalty weight for the fft check")
    _common(p)
    return parser


def _resolve_config(args, default_task: str | None = None) -> ExperimentConfig:
    if getattr(args, "config", None):
        base = load_config(args.config).to_dict()
    else:
        task = args.task or default_task
        if task is None:
            raise ConfigError("task", "is required (pass --task or --config)")
        base = {"task": task}
    task_changed = args.task is not None and args.task != base["task"]
    for key in _CONFIG_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    if task_changed:
        # task-dependent defaults must be recomputed for the new task
        for key in ("steps", "beta", "grad_tol"):
            if getattr(args, key, None) is None:
                base.pop(key, None)
    if getattr(args, "masked", None) is not None:
        base["masked"] = args.masked
    if args.seed is not None:
        base["seed"] = args.seed
    if args.out is not None:
        base["out"] = args.out
    return ExperimentConfig(**base)


def _cmd_construct(args) -> int:
    net = build_parity_net(args.n, args.alpha) if args.task == "parity" else build_fft_net(args.n)
    text = dumps_params(net)
    if args.out:
        ensure_parent(args.out)
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.task} network n={args.n} ({len(net.layers)} layers) to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    if args.scale is not None:
        cfg.scales = [args.scale]
    scale = cfg.scales[0]
    rec, trained = train_cell(cfg.task_spec, "perturb", scale, cfg.seed, cfg.train_config(),
                              cfg.masked, cfg.alpha)
    out = write_run_dir(cfg.out, emit_config(cfg), [rec])
    (out / "net.json").write_text(dumps_params(trained), encoding="utf-8")
    print(f"{cfg.task} n={cfg.n} scale={scale:g} seed={cfg.seed}: "
          f"final error {rec.final_error:.6g} -> {out}")
    return 0


def _cmd_basin_sweep(args) -> int:
    cfg = _resolve_config(args)
    records = basin_sweep(cfg.task_spec, cfg.noise, cfg.train_config(), cfg.masked,
                          cfg.alpha, workers=args.threads)
    out = write_run_dir(cfg.out, emit_config(cfg), records)
    for r in records:
        print(f"scale {r.scale:<8g} seed {r.seed:<4d} final error {r.final_error:.6g}")
    print(f"wrote {len(records)} records to {out}")
    return 0


def _cmd_sparsify(args) -> int:
    net = loads_params(Path(args.net).read_text(encoding="utf-8"))
    if net.in_dim % 2 or net.in_dim != net.out_dim:
        raise DomainError("sparsify expects a realified n-point transform network")
    target = fft_target(net.in_dim // 2)
    curve = sparsify_curve(net, target)
    l0, err = optimal_sparsification(curve)
    bl0, berr = budgeted_sparsification(curve)
    out = Path(args.out or "runs/sparsify")
    out.mkdir(parents=True, exist_ok=True)
    write_curve_csv(out / "sparsity_curve.csv", curve)
    print(f"unpruned: complex L0 {complex_l0(net)}, rel error {curve[0].rel_error:.6g}")
    print(f"minimum-error sparsification: L0 {l0}, rel error {err:.6g}")
    print(f"budgeted sparsification: L0 {bl0}, rel error {berr:.6g}")
    return 0


def _cmd_scaling_study(args) -> int:
    cfg = _resolve_config(args, default_task="fft")
    if cfg.task != "fft":
        raise ConfigError("task", "the scaling study is defined for the fft task")
    points, records = scaling_study(cfg.sizes, cfg.near_scale, cfg.far_scale,
                                    cfg.train_config(), seed=cfg.seed,
                                    far_mode=cfg.far_mode, workers=args.threads)
    out = write_run_dir(cfg.out, emit_config(cfg), records, points)
    for p in points:
        print(f"n {p.n:<4d} {p.condition:<10s} L0 {p.l0:<6d} factor {p.scaling_factor:.4f}")
    print(f"wrote scaling study to {out}")
    return 0


def _cmd_gradcheck(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rng = make_rng(seed)
    if args.task == "parity":
        worst = check_parity(args.n, rng)
    else:
        d = 2 * args.n
        params = random_linear([d] * (args.n.bit_length() + 1), derive_rng(seed, 1), bias_std=0.1)
        worst = check_linear(params, fft_target(args.n), args.beta)
    ok = worst < GRADCHECK_TOL
    print(f"gradcheck {args.task} n={args.n}: max relative error {worst:.3e} "
          f"({'ok' if ok else 'FAIL'}, tol {GRADCHECK_TOL:g})")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "gradcheck.txt").write_text(f"{args.task} {args.n} {worst!r}\n", encoding="utf-8")
    return 0 if ok else 1


_COMMANDS = {
    "construct": _cmd_construct,
    "train": _cmd_train,
    "basin-sweep": _cmd_basin_sweep,
    "sparsify": _cmd_sparsify,
    "scaling-study": _cmd_scaling_study,
    "gradcheck": _cmd_gradcheck,
}


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        from threadpoolctl import threadpool_limits

        # single-threaded BLAS inside each run keeps results reproducible
        with threadpool_limits(limits=1):
            return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
    except (ConfigError, ConfigParseError, DomainError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
