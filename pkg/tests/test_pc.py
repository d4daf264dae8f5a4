import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import pc_step
from phdae.model import GeneratorModel, reduced_to_full
from phdae.pc import (
    PCState,
    PCStepper,
    PCWorkspace,
    SingularStepError,
    assemble_pc_blocks,
    pc1_step,
    pc2_step,
)


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.mark.parametrize("step, corrected", [(pc1_step, False), (pc2_step, True)])
@pytest.mark.parametrize("h", [1e-4, 1e-5])
def test_single_step_matches_oracle(params, ics, step, corrected, h):
    full, _ = ics
    st = PCState.from_full(full)
    new = step(st, h, params)
    xE, xM, _ = pc_step(params, full.x_E, full.x_M, 0.0, h, corrected)
    assert _rel(new.x_E, xE) < 1e-10
    assert _rel(new.x_M, xM) < 1e-10
    assert new.t == pytest.approx(h)


def test_several_steps_match_oracle(params, ics):
    full, _ = ics
    st = PCState.from_full(full)
    xE, xM, t = full.x_E, full.x_M, 0.0
    h = 1e-4
    for _ in range(20):
        st = pc2_step(st, h, params)
        xE, xM, _ = pc_step(params, xE, xM, t, h, True)
        t += h
    assert _rel(st.x_E, xE) < 1e-9 and _rel(st.x_M, xM) < 1e-9


def test_angle_predictor(params, ics):
    full, _ = ics
    _, _, th_pred = pc_step(params, full.x_E, full.x_M, 0.0, 1e-4, False)
    np.testing.assert_allclose(th_pred - full.theta, 120 * np.pi * 1e-4, rtol=1e-14)
    assert round(120 * np.pi * 1e-4, 4) == 0.0377


def test_schemes_agree_without_coupling(params, consistent_ics):
    m = GeneratorModel(params, coupling="off")
    _, red = consistent_ics
    st = PCState.from_full(reduced_to_full(red, m))
    a = b = st
    for _ in range(10):
        a = pc1_step(a, 1e-4, m)
        b = pc2_step(b, 1e-4, m)
    np.testing.assert_array_equal(a.x_E, b.x_E)
    np.testing.assert_array_equal(a.x_M, b.x_M)


def test_trapezoid_closed_form_without_coupling(params, consistent_ics):
    """With coupling off and a frozen source both subsystems are linear with
    constant data, so one step is the trapezoidal rule in closed form."""
    m = GeneratorModel(params, coupling="off", frozen_time=0.0)
    _, red = consistent_ics
    st = PCState.from_full(reduced_to_full(red, m))
    blk = assemble_pc_blocks(m)
    h = 1e-4
    KE2 = blk.K_E2(st.theta)
    xE = np.linalg.solve(blk.K_E1 + h / 2 * KE2, (blk.K_E1 - h / 2 * KE2) @ st.x_E + h * blk.g_E(0.0))
    gm = blk.g_M(st.psi, st.theta)
    xM = np.linalg.solve(blk.K_M1 + h / 2 * blk.K_M2, (blk.K_M1 - h / 2 * blk.K_M2) @ st.x_M + h * gm)
    new = pc2_step(st, h, m)
    assert _rel(new.x_E, xE) < 1e-12
    assert _rel(new.x_M, xM) < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=1e-8, max_value=1e-6))  # below ~1e-9 the step matrix exceeds the condition limit
def test_small_step_continuity(ics, params, h):
    full, _ = ics
    st = PCState.from_full(full)
    new = pc2_step(st, h, params)
    # mechanical block moves by O(h) times the largest rate
    assert np.abs(new.x_M - st.x_M).max() <= 1e3 * h * np.abs(st.x_M).max() + 1e-9


def test_report_fields(params, ics):
    full, _ = ics
    stepper = PCStepper(params, 1e-4, trapezoid=True)
    new, rep = stepper.step(PCState.from_full(full), 0)
    assert 1.0 < rep.cond_E < 1e14
    assert rep.residual_E < 1e-12 and rep.residual_M < 1e-12


def test_workspace_rejects_other_step(params):
    ws = PCWorkspace(params, 1e-4)
    with pytest.raises(ValueError):
        PCStepper(params, 2e-4, trapezoid=False, workspace=ws)


def test_ill_conditioned_step_raises(params, ics):
    full, _ = ics
    with pytest.raises(SingularStepError):
        pc1_step(PCState.from_full(full), 1e-30, params)


def test_accepts_full_state(params, ics):
    full, _ = ics
    a = pc1_step(full, 1e-4, params)
    b = pc1_step(PCState.from_full(full), 1e-4, params)
    np.testing.assert_array_equal(a.x_E, b.x_E)
