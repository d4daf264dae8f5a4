import csv
import io

import numpy as np
import pytest

from phdae.cli import RunConfig, UsageError, load_run_config, main
from phdae.compare import compare_runs
from phdae.io import read_frames
from phdae.simulation import integrate


def test_tableau_output(capsys):
    assert main(["tableau", "--stages", "2"]) == 0
    out = capsys.readouterr().out
    assert "2.1132486540518713e-01" in out and "5.3867513459481287e-01" in out


def test_verify_appendix(capsys):
    assert main(["verify-appendix", "--max-stages", "6"]) == 0
    out = capsys.readouterr().out
    assert len(out.strip().splitlines()) == 7 and "FAIL" not in out


@pytest.mark.parametrize("argv", [[], ["bogus"], ["tableau"], ["tableau", "--stages", "0"],
                                  ["verify-appendix", "--max-stages", "9"],
                                  ["simulate", "--t-end", "11"],
                                  ["simulate", "--method", "rk4"],
                                  ["simulate", "--h", "-1"],
                                  ["simulate", "--ics", "/no/such/file"],
                                  ["simulate", "--h", "3e-4", "--t-end", "0.001"]])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_numerical_failure_exit_code(tmp_path):
    # an absurd step drives the predictor-corrector electrical matrix past the condition limit
    assert main(["simulate", "--method", "pc1", "--h", "1e-12", "--t-end", "1e-11",
                 "--out", str(tmp_path / "x.csv")]) == 1


@pytest.mark.parametrize("stride, frames", [(1, 21), (5, 5), (7, 4)])
def test_simulate_frame_count(tmp_path, stride, frames):
    out = tmp_path / "run.csv"
    assert main(["simulate", "--method", "gauss:1", "--h", "1e-4", "--t-end", "0.002", "--stride", str(stride),
                 "--ics", "paper-ics", "--out", str(out)]) == 0
    with open(out) as fh:
        got = read_frames(fh)
    # ceil(n / stride) + 1 frames: the final step is always written
    assert len(got) == frames
    assert got[-1].t == pytest.approx(0.002)


def test_simulate_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["simulate", "--method", "gauss:2", "--t-end", "0.003", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_simulate_diagnostics(tmp_path, capsys):
    out, led = tmp_path / "r.csv", tmp_path / "l.csv"
    assert main(["simulate", "--method", "gauss:1", "--t-end", "0.002", "--diagnostics", "constraint,dirac",
                 "--ledger", str(led), "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "max constraint norm" in err and "Dirac" in err
    rows = list(csv.reader(open(led)))
    assert rows[0][-1] == "balance_residual" and len(rows) == 22


def test_pc_ledger_reports_energy(tmp_path, capsys):
    assert main(["simulate", "--method", "pc1", "--t-end", "0.002", "--ledger", "--out", str(tmp_path / "p.csv")]) == 0
    assert "energy residual" in capsys.readouterr().err


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = pc2\nh = 1e-4\nt_end = 0.001\nstride = 2\ndiagnostics = constraint\n")
    rc = load_run_config(str(cfg))
    assert rc == RunConfig("pc2", 1e-4, 0.001, 2, diagnostics=("constraint",))
    assert rc.n_steps == 10
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(read_frames(open(out))) == 6


@pytest.mark.parametrize("text", ["method=pc2,bogus=1", "h=abc", "stride=0", "garbage"])
def test_bad_inline_config(text):
    with pytest.raises((UsageError, ValueError)):
        load_run_config(text)


def test_compare_identical_is_zero(tmp_path, capsys):
    out = tmp_path / "c.csv"
    cfg = "method=gauss:1,h=1e-4,t_end=0.002"
    assert main(["compare", "--a", cfg, "--b", cfg, "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))[1:]
    assert len(rows) == 21 and all(float(r[1]) == 0.0 for r in rows)


def test_compare_schema_mismatch():
    assert main(["compare", "--a", "method=pc2,t_end=0.002", "--b", "method=pc2,t_end=0.001"]) == 2


def test_convergence_command(capsys):
    assert main(["convergence", "--method", "gauss:1", "--h-list", "5e-4,2.5e-4,1.25e-4", "--t-end", "0.005"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1].split(",")
    assert last[0] == "slope"
    assert all(abs(float(v) - 2.0) < 0.3 for v in last[1:])


def test_discrepancy_scales_with_h_squared(model, consistent_ics):
    """gauss(1) against gauss(3) on a shared frame grid: halving h quarters the gap."""
    _, red = consistent_ics
    gaps = []
    for h, stride in ((2e-4, 1), (1e-4, 2)):
        n = int(round(0.1 / h))
        a = integrate(red, h, n, "gauss:1", params=model, stride=stride)
        b = integrate(red, h, n, "gauss:3", params=model, stride=stride)
        gaps.append(compare_runs(a, b, "omega", model).max)
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.15)
