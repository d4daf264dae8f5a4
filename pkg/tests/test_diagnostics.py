import csv

import numpy as np
import pytest

from phdae.collocation import GaussStepper
from phdae.diagnostics import (
    MissingStageDataError,
    PCEnergyMonitor,
    PowerLedger,
    discrete_dissipation_check,
    dirac_membership_residual,
    energy_residual_stats,
    inequality_tolerance,
    power_terms,
    stage_dirac_residuals,
    stage_vectors,
    step_balance,
)
from phdae.model import GeneratorModel, ReducedState, make_consistent
from phdae.simulation import integrate
from phdae.tableau import gauss_tableau


def test_zero_state_power(model):
    z = np.zeros
    H, sup, dis = power_terms(ReducedState(z(4), z(4), z(6), z(6), 0.0), model)
    assert H == sup == dis == 0.0


def test_inequality_tolerance():
    assert inequality_tolerance(0.0) == 1e-8
    assert inequality_tolerance(-1e12) == pytest.approx(1e4)


@pytest.mark.parametrize("s", [1, 2])
def test_frozen_coupling_balance_is_exact(params, consistent_ics, s):
    _, red = consistent_ics
    m = GeneratorModel(params, coupling="frozen", frozen_angle=float(red.theta[4]))
    red = make_consistent(red, m)
    tr = integrate(red, 1e-4, 50, f"gauss:{s}", params=m, record_steps=True)
    rep = discrete_dissipation_check(tr)
    assert rep.max_rel < 1e-10
    assert rep.violations == 0 and rep.cumulative_violations == 0


@pytest.mark.parametrize("s, order", [(1, 3), (2, 5)])
def test_balance_residual_order(model, consistent_ics, s, order):
    """Per-step residual of the full (non-quadratic) model decays like h^(2s+1)."""
    _, red = consistent_ics
    tab = gauss_tableau(s)
    hs = np.array([4e-4, 2e-4, 1e-4])
    res = []
    for h in hs:
        new, _, stages = GaussStepper(model, tab, h).step(red)
        res.append(abs(step_balance(model, tab.b, h, red.x, new.x, stages)[0]))
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert abs(slope - order) < 0.3


def test_dirac_residual_along_run(model, consistent_ics):
    _, red = consistent_ics
    worst = []

    def hook(rec):
        worst.extend(r.relative for r in stage_dirac_residuals(rec.stages, model))
    integrate(red, 1e-4, 50, "gauss:2", params=model, on_step=hook)
    assert max(worst) < 10 * 1e-12


def test_dirac_residual_detects_perturbation(model, consistent_ics):
    _, red = consistent_ics
    _, _, stages = GaussStepper(model, gauss_tableau(1), 1e-4).step(red)
    x, k = stage_vectors(stages, 0)
    base = dirac_membership_residual(x, k, model)
    assert base.rows.shape == (84,)
    assert not np.any(base.rows[42:])
    k_bad = k.copy()
    k_bad[4] *= 1 + 1e-3  # flux derivative of the first stator winding
    assert dirac_membership_residual(x, k_bad, model).relative > 1e-6


def test_power_ledger_csv(tmp_path, model, consistent_ics):
    _, red = consistent_ics
    led = PowerLedger(model, gauss_tableau(1), 1e-4, stride=5)
    integrate(red, 1e-4, 20, "gauss:1", params=model, on_step=led)
    path = tmp_path / "ledger.csv"
    led.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "H", "supplied", "dissipated", "balance_residual"]
    assert len(rows) == 1 + 1 + 20 // 5
    assert float(rows[1][4]) == 0.0
    assert led.max_cumulative_excess < 0


def test_ledger_needs_stage_values(model, ics):
    full, _ = ics
    led = PowerLedger(model, gauss_tableau(1), 1e-4)
    with pytest.raises(Exception) as exc:
        integrate(full, 1e-4, 2, "pc1", params=model, on_step=led)
    assert isinstance(exc.value.__cause__, MissingStageDataError) or isinstance(exc.value, MissingStageDataError)


def test_dissipation_check_needs_records(model, consistent_ics):
    _, red = consistent_ics
    tr = integrate(red, 1e-4, 2, "gauss:1", params=model)
    with pytest.raises(MissingStageDataError):
        discrete_dissipation_check(tr)


def test_energy_monitor(model, ics):
    full, _ = ics
    mon = PCEnergyMonitor(model, 1e-4)
    integrate(full, 1e-4, 30, "pc2", params=model, on_step=mon)
    st = mon.stats()
    assert st["n"] == 30
    assert 0 < st["mean_abs"] <= st["rms"] <= st["max_abs"]
    # residuals are small against the stored energy
    assert st["max_abs"] < 1e-6 * model.hamiltonian_full(full)


def test_energy_stats_empty():
    assert energy_residual_stats([]) == {"mean_abs": 0.0, "rms": 0.0, "max_abs": 0.0, "n": 0}
