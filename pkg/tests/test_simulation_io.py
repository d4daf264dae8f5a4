import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phdae.compare import SchemaMismatchError, compare_runs, error_trend_slope, shared_coordinates
from phdae.io import frame_columns, read_frames, write_frames
from phdae.simulation import (
    IntegrationError,
    Method,
    TrajectoryFrame,
    integrate,
    parse_method,
    steps_for,
)
from phdae.tableau import UnsupportedStagesError


@pytest.mark.parametrize("text, expected", [("pc1", Method("pc1")), ("PC2", Method("pc2")),
                                            ("gauss:3", Method("gauss", 3)), ("gauss(2)", Method("gauss", 2))])
def test_parse_method(text, expected):
    assert parse_method(text) == expected


@pytest.mark.parametrize("text", ["rk4", "gauss:", "gauss:x"])
def test_parse_method_rejects(text):
    with pytest.raises(ValueError):
        parse_method(text)


def test_parse_method_stage_range():
    with pytest.raises(UnsupportedStagesError):
        parse_method("gauss:99")


def test_steps_for():
    assert steps_for(10.0, 1e-4) == 100000
    with pytest.raises(ValueError):
        steps_for(0.005, 4e-4)


@pytest.mark.parametrize("n, stride, frames", [(10, 1, 11), (10, 3, 5), (10, 10, 2), (10, 20, 2)])
def test_frame_count(model, ics, n, stride, frames):
    _, red = ics
    tr = integrate(red, 1e-4, n, "gauss:1", params=model, stride=stride)
    assert len(tr.frames) == frames
    assert tr.frames[-1].t == pytest.approx(n * 1e-4, rel=1e-15)
    assert np.all(np.diff(tr.times()) > 0)


def test_reduced_and_full_frames(model, ics):
    full, red = ics
    a = integrate(red, 1e-4, 3, "gauss:1", params=model)
    b = integrate(full, 1e-4, 3, "pc2", params=model)
    assert a.frames[0].psi.shape == (4,) and b.frames[0].psi.shape == (6,)
    np.testing.assert_allclose(a.frames[0].omega_err, full.theta_dot - 120 * np.pi, atol=0)


def test_state_coercion(model, ics):
    full, red = ics
    # a full state is reduced for collocation and a reduced one embedded for P-C
    integrate(full, 1e-4, 2, "gauss:1", params=model)
    integrate(red, 1e-4, 2, "pc1", params=model)


def test_failure_carries_step(model, ics):
    _, red = ics

    def boom(rec):
        if rec.n == 2:
            raise FloatingPointError("forced")
    with pytest.raises(FloatingPointError):
        integrate(red, 1e-4, 5, "gauss:1", params=model, on_step=boom)
    with pytest.raises(IntegrationError) as exc:
        integrate(red, 1e-4, 5, "gauss:1", params=model, opts=_tight())
    assert exc.value.step == 0


def _tight():
    from phdae.collocation import GaussOptions

    return GaussOptions(max_iter=1, newton_tol=1e-30)


@pytest.mark.parametrize("method", ["gauss:1", "pc2"])
def test_csv_round_trip(model, ics, method):
    full, red = ics
    tr = integrate(red if method.startswith("gauss") else full, 1e-4, 7, method, params=model, stride=2)
    buf = io.StringIO()
    write_frames(tr.frames, buf)
    buf.seek(0)
    back = read_frames(buf)
    assert len(back) == len(tr.frames)
    for a, b in zip(tr.frames, back):
        assert a.t == b.t and a.H == b.H and a.constraint_norm == b.constraint_norm
        for f in ("omega", "omega_err", "theta", "psi"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=26, max_size=26))
def test_csv_round_trip_property(vals):
    v = np.array(vals)
    fr = TrajectoryFrame(v[0], v[1:7], v[7:13], v[13:19], v[19:23], v[23], v[24])
    buf = io.StringIO()
    write_frames([fr], buf)
    buf.seek(0)
    (back,) = read_frames(buf)
    np.testing.assert_array_equal(back.psi, fr.psi)
    assert back.H == fr.H and back.t == fr.t


def test_columns():
    assert len(frame_columns(True)) == 1 + 18 + 4 + 2
    assert "psi_2a" in frame_columns(False)


def test_run_is_bit_identical(model, ics):
    _, red = ics
    out = []
    for _ in range(2):
        buf = io.StringIO()
        write_frames(integrate(red, 1e-4, 20, "gauss:2", params=model).frames, buf)
        out.append(buf.getvalue())
    assert out[0] == out[1]


class TestCompare:
    def test_self_comparison_is_zero(self, model, ics):
        _, red = ics
        tr = integrate(red, 1e-4, 10, "gauss:1", params=model)
        cmp = compare_runs(tr, tr, "state", model)
        assert cmp.max == 0.0 and cmp.mean == 0.0

    def test_reduced_vs_full(self, model, ics):
        full, red = ics
        a = integrate(red, 1e-4, 10, "gauss:1", params=model)
        b = integrate(full, 1e-4, 10, "pc2", params=model)
        cmp = compare_runs(a, b, "omega", model)
        assert cmp.discrepancy[0] == 0.0
        assert 0 < cmp.max < 1e-2
        flux = compare_runs(a, b, "flux", model)
        # node-2 fluxes are reconstructed for the reduced run
        assert flux.discrepancy[0] < 1e-3 * np.abs(full.psi).max()
        assert shared_coordinates(a.frames[0], model)["psi"].shape == (6,)

    def test_mismatch(self, model, ics):
        _, red = ics
        a = integrate(red, 1e-4, 10, "gauss:1", params=model)
        b = integrate(red, 1e-4, 5, "gauss:1", params=model)
        with pytest.raises(SchemaMismatchError):
            compare_runs(a, b)
        with pytest.raises(ValueError):
            compare_runs(a, a, "bogus")

    def test_trend_slope(self):
        t = np.linspace(0, 10, 2001)
        decay = np.exp(-0.3 * t) * np.abs(np.sin(40 * t))
        assert error_trend_slope(t, decay) == pytest.approx(-0.3, abs=0.02)
        grow = np.exp(0.2 * t) * np.abs(np.sin(40 * t))
        assert error_trend_slope(t, grow) == pytest.approx(0.2, abs=0.02)
