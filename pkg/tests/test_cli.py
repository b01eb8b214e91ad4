import csv
import json

import pytest

from basinlab.cli import run_command
from basinlab.config import parse_config
from basinlab.constructions import build_fft_net, loads_params


def test_construct_then_sparsify(tmp_path, capsys):
    net_path = tmp_path / "net.txt"
    assert run_command(["construct", "--task", "fft", "--n", "8", "--out", str(net_path)]) == 0
    assert loads_params(net_path.read_text()).equal(build_fft_net(8))
    out = tmp_path / "sp"
    assert run_command(["sparsify", "--net", str(net_path), "--out", str(out)]) == 0
    assert "minimum-error sparsification: L0 56," in capsys.readouterr().out
    with open(out / "sparsity_curve.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["threshold", "l0", "rel_error"]
    best = min(rows[1:], key=lambda r: (float(r[2]), int(r[1])))
    assert int(best[1]) == 56


def test_gradcheck_parity(capsys):
    assert run_command(["gradcheck", "--task", "parity", "--n", "8"]) == 0
    line = capsys.readouterr().out
    err = float(line.split("max relative error ")[1].split()[0])
    assert err < 1e-5


def test_gradcheck_fft(tmp_path):
    assert run_command(["gradcheck", "--task", "fft", "--n", "4", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "gradcheck.txt").exists()


def test_train_missing_config(tmp_path, capsys):
    code = run_command(["train", "--config", str(tmp_path / "missing.yaml")])
    assert code == 1
    assert "file not found" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert run_command(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_no_arguments():
    assert run_command([]) == 2


def test_bad_config_value_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("task: fft\nn: 12\n")
    assert run_command(["train", "--config", str(cfg)]) == 1
    assert "n:" in capsys.readouterr().err


def test_train_writes_reproducible_run_dir(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("task: parity\nn: 4\nsteps: 30\nbatch_size: 32\neval_every: 10\ntest_size: 200\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_command(["train", "--config", str(cfg), "--seed", "5", "--scale", "0.2",
                            "--out", str(out)]) == 0
        outs.append(out)
    for name in ("record.json", "metrics.csv", "net.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    echo = parse_config((outs[0] / "config.yaml").read_text())
    assert echo.out == str(outs[0])
    assert echo.seed == 5 and echo.scales == [0.2] and echo.steps == 30
    with open(outs[0] / "metrics.csv") as fh:
        assert next(csv.reader(fh)) == ["step", "loss", "test_error", "grad_norm"]


def test_trained_fft_net_can_be_sparsified(tmp_path, capsys):
    out = tmp_path / "t"
    assert run_command(["train", "--task", "fft", "--n", "4", "--steps", "50", "--scale", "0.01",
                        "--out", str(out)]) == 0
    assert run_command(["sparsify", "--net", str(out / "net.json"), "--out", str(tmp_path / "s")]) == 0
    assert "L0 20," in capsys.readouterr().out


def test_basin_sweep_command(tmp_path):
    out = tmp_path / "sweep"
    code = run_command(["basin-sweep", "--task", "parity", "--n", "4", "--scales", "0.01", "1.0",
                        "--seeds", "0", "1", "--steps", "20", "--batch-size", "16",
                        "--eval-every", "10", "--masked", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "record.json").read_text())
    assert [(r["scale"], r["seed"]) for r in doc["records"]] == [(0.01, 0), (0.01, 1), (1.0, 0), (1.0, 1)]
    assert all(r["config"]["masked"] for r in doc["records"])
    assert (out / "fig_basin.svg").exists()


def test_scaling_study_command(tmp_path):
    out = tmp_path / "scal"
    code = run_command(["scaling-study", "--sizes", "2", "4", "--steps", "5", "--eval-every", "5",
                        "--out", str(out)])
    assert code == 0
    with open(out / "scaling.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "condition", "l0", "scaling_factor"]
    assert len(rows) == 7
    assert (out / "fig_scaling.csv").exists() and (out / "fig_scaling.svg").exists()


def test_scaling_study_rejects_parity(tmp_path):
    assert run_command(["scaling-study", "--task", "parity", "--out", str(tmp_path)]) == 1


def test_threads_flag_validated():
    assert run_command(["gradcheck", "--task", "fft", "--n", "2", "--threads", "0"]) == 2


@pytest.mark.parametrize("cmd", ["construct", "train", "basin-sweep", "sparsify", "scaling-study",
                                 "gradcheck"])
def test_common_flags_everywhere(cmd, capsys):
    with pytest.raises(SystemExit):
        from basinlab.cli import build_parser
        build_parser().parse_args([cmd, "--help"])
    text = capsys.readouterr().out
    for flag in ("--seed", "--threads", "--out"):
        assert flag in text
