import csv
import subprocess
import sys

import numpy as np
import pytest

from nnlandscape.cli import build_config, main
from nnlandscape.data import GroundTruth, make_general_gt, make_orthogonal_gt
from nnlandscape.io import (
    FormatError,
    format_gt,
    format_weights,
    parse_config,
    parse_gt,
    parse_weights,
    read_gt,
    read_weights,
    write_gt,
    write_weights,
)
from nnlandscape.landscape import spurious_pprime_instance
from nnlandscape.optimize import Trajectory, Weights


# -- text formats -------------------------------------------------------------------


def test_gt_round_trip_exact():
    gt = make_general_gt(5, 3, 2.0, "uniform:1,2", noise_std=0.1, seed=4)
    assert parse_gt(format_gt(gt)) == gt


def test_weights_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    w = Weights(rng.standard_normal((3, 4)), rng.standard_normal(3))
    write_weights(tmp_path / "w.txt", w)
    back = read_weights(tmp_path / "w.txt")
    assert np.array_equal(back.B, w.B) and np.array_equal(back.a, w.a)
    nob = parse_weights(format_weights(Weights(w.B)))
    assert nob.a is None and np.array_equal(nob.B, w.B)


@pytest.mark.parametrize(
    "text",
    ["", "2 2\n1 1\n1 0\n0 1\n", "2 2 0\n1 1\n1 0\n", "2 2 0\n1 x\n1 0\n0 1\n", "2 2 0\n1 1 1\n1 0\n0 1\n"],
)
def test_gt_format_errors(text):
    with pytest.raises(FormatError):
        parse_gt(text)


def test_weights_format_errors():
    for text in ("", "2 2 5\n1 0\n0 1\n", "2 2 1\n1 0\n0 1\n", "a b c\n"):
        with pytest.raises(FormatError):
            parse_weights(text)


def test_parse_config():
    cfg = parse_config("# comment\nmode = G  # inline\n\nbatch-size=10\n")
    assert cfg == {"mode": "G", "batch_size": "10"}
    for bad in ("novalue\n", " = 3\n"):
        with pytest.raises(FormatError):
            parse_config(bad)


def test_build_config_validation():
    cfg = build_config({"mode": "G", "d": "4", "seeds": "0-2"})
    assert cfg.seeds == (0, 1, 2)
    assert build_config({"seeds": "0,2,5"}).seeds == (0, 2, 5)
    from nnlandscape.cli import UsageError

    for raw in (
        {"mode": "X"},
        {"colour": "red"},
        {"d": "four"},
        {"mode": "F", "d": "4", "m": "2"},
        {"mode": "F-under", "d": "4"},
        {"mode": "G", "cond": "2"},
        {"step0": "-1"},
        {"a_spec": "gauss:1"},
        {"batch_size": "1"},
        {"solver": "gd", "mode": "h2h4"},
    ):
        with pytest.raises(UsageError):
            build_config(raw)


# -- CLI ----------------------------------------------------------------------------


def test_gen_round_trip_and_force(tmp_path, capsys):
    out = tmp_path / "gt.txt"
    assert main(["gen", "--d", "8", "--orthogonal", "--a", "const:1", "--seed", "7", "-o", str(out)]) == 0
    gt = read_gt(out)
    assert gt == make_orthogonal_gt(8, 8, "const:1", seed=7)
    assert main(["gen", "--d", "8", "-o", str(out)]) == 2
    assert main(["gen", "--d", "8", "--seed", "1", "-o", str(out), "--force"]) == 0
    assert read_gt(out) != gt


def test_gen_undercomplete_general(tmp_path):
    out = tmp_path / "gt.txt"
    assert main(["gen", "--d", "4", "--m", "2", "--cond", "2", "-o", str(out)]) == 0
    gt = read_gt(out)
    assert (gt.m, gt.d) == (2, 4) and not gt.is_orthonormal()
    assert main(["gen", "--d", "4", "--cond", "2", "--identity", "-o", str(tmp_path / "x")]) == 2


def test_gen_missing_output_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--d", "4"])
    assert exc.value.code == 2


def test_unknown_command_and_suite():
    for argv in (["frobnicate"], ["verify", "nosuch"], ["gen", "--d", "4", "-o", "x", "--bogus", "1"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2


def test_console_script_usage_exit_code():
    proc = subprocess.run([sys.executable, "-m", "nnlandscape.cli", "verify"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_train_smoke_single_and_multi_seed(tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["train", "--mode", "G", "--d", "4", "--a_spec", "const:1", "--iters", "200", "--batch_size", "256"]
    assert main(argv + ["--seeds", "0", "--out", str(out)]) == 0
    tr = Trajectory.from_csv(out / "trajectory.csv")
    assert tr.iters == [0, 100, 200]
    assert read_weights(out / "weights.txt").B.shape == (4, 4)
    multi = tmp_path / "multi"
    assert main(argv + ["--seeds", "0-1", "--out", str(multi)]) == 0
    assert (multi / "seed1" / "trajectory.csv").exists()
    rows = _read_csv(multi / "summary.csv")
    assert [r[0] for r in rows[1:]] == ["0", "1"]
    # determinism: the same config gives byte-identical output
    assert (multi / "seed0" / "trajectory.csv").read_bytes() == (out / "trajectory.csv").read_bytes()


def test_train_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"mode = h2h4\nd = 4\nseeds = 0\niters = 100\nbatch_size = 64\nproject_rows = true\nout = {tmp_path / 'a'}\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "weights.txt").exists() and not (tmp_path / "a").exists()
    w = read_weights(tmp_path / "b" / "weights.txt")
    np.testing.assert_allclose(np.linalg.norm(w.B, axis=1), 1.0, atol=1e-12)
    assert w.a is not None


def test_train_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("mode G\n")
    assert main(["train", "--config", str(bad)]) == 2
    assert main(["train", "--mode", "G", "--iters"]) == 2
    assert main(["train", "--mode", "nope"]) == 2
    assert main(["train", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_train_F_gd(tmp_path):
    out = tmp_path / "f"
    assert main(["train", "--mode", "F", "--d", "3", "--cond", "1.5", "--solver", "gd", "--iters", "300", "--out", str(out)]) == 0
    tr = Trajectory.from_csv(out / "trajectory.csv")
    assert tr.values[-1] <= tr.values[0]


def test_train_divergence_exit_code(tmp_path, capsys):
    argv = ["train", "--mode", "G", "--d", "6", "--step0", "50", "--iters", "100", "--batch_size", "64", "--out", str(tmp_path)]
    assert main(argv) == 1
    assert "diverged" in capsys.readouterr().err


def test_landscape_identity_mu_zero(tmp_path, capsys):
    gt = GroundTruth(np.ones(4), np.eye(4))
    write_gt(tmp_path / "gt.txt", gt)
    write_weights(tmp_path / "w.txt", Weights(np.eye(4)))
    rc = main(["landscape", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt.txt"), "--mu", "0", "-o", str(tmp_path / "r.txt")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "verdict=global-min-class" in text
    assert (tmp_path / "r.txt").read_text() == text


def test_landscape_pprime_instance(tmp_path, capsys):
    gt, w = spurious_pprime_instance()
    write_gt(tmp_path / "gt.txt", gt)
    write_weights(tmp_path / "w.txt", w)
    assert main(["landscape", "--objective", "pprime", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt.txt")]) == 0
    text = capsys.readouterr().out
    fields = dict(line.split("=", 1) for line in text.splitlines())
    assert float(fields["pprime"]) == pytest.approx(1.0)
    assert fields["verdict"] == "non-global-local-min"


def test_landscape_corrupted_file(tmp_path, capsys):
    (tmp_path / "gt.txt").write_text("4 4 0\n1 1 1\n")
    write_weights(tmp_path / "w.txt", Weights(np.eye(4)))
    assert main(["landscape", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt.txt")]) == 1
    assert "error" in capsys.readouterr().err
    write_gt(tmp_path / "gt3.txt", GroundTruth(np.ones(3), np.eye(3)))
    assert main(["landscape", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt3.txt")]) == 1


def test_verify_hermite(capsys):
    assert main(["verify", "hermite"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "summary failed=0"
    assert all(line.startswith("check=") and "status=pass" in line for line in lines[:-1])


def test_verify_perturbation(capsys):
    assert main(["verify", "perturbation"]) == 0


def test_recover_cli(tmp_path, capsys):
    gt = make_orthogonal_gt(4, 4, "uniform:1,2", seed=3)
    write_gt(tmp_path / "gt.txt", gt)
    write_weights(tmp_path / "w.txt", Weights(-gt.B_star))
    assert main(["recover", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt.txt"), "--n", "200000", "-o", str(tmp_path / "a.csv")]) == 0
    a = np.array([float(r[0]) for r in _read_csv(tmp_path / "a.csv")[1:]])
    np.testing.assert_allclose(a, gt.a_star, atol=0.1)
    assert main(["recover", "--method", "general", "--weights", str(tmp_path / "w.txt"), "--gt", str(tmp_path / "gt.txt"), "--n", "1000"]) == 0


def test_e2e_cli(tmp_path, capsys):
    write_gt(tmp_path / "gt.txt", make_general_gt(3, 3, 1.5, "uniform:1,2", seed=1))
    assert main(["e2e", "--gt", str(tmp_path / "gt.txt"), "--mode", "nonorthogonal-F"]) == 0
    out = capsys.readouterr().out
    assert "row_err=" in out and "verdict=" in out


def test_repro_smoke(tmp_path, capsys):
    assert main(["repro", "fig2", "--seeds", "0,1", "--iters", "200", "--out", str(tmp_path)]) == 0
    loss = _read_csv(tmp_path / "fig2_loss.csv")
    err = _read_csv(tmp_path / "fig2_error.csv")
    assert loss[0] == ["iter", "seed0", "seed1"] == err[0]
    assert [r[0] for r in loss[1:]] == ["0", "100", "200"]
    summary = _read_csv(tmp_path / "fig2_summary.csv")
    assert len(summary) == 3
    assert (tmp_path / "fig2_loss.csv").read_bytes().count(b"\r") == 0


def test_help_documents_csv_schema(capsys):
    with pytest.raises(SystemExit):
        main(["repro", "--help"])
    assert "e_metric" in capsys.readouterr().out
