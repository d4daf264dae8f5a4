"""Observed convergence orders against a fine collocation reference."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import FullState, GeneratorModel, ReducedState, as_model
from .pc import PCState
from .simulation import integrate, parse_method, steps_for

__all__ = [
    "GROUPS",
    "ReferenceSpec",
    "ConvergenceResult",
    "ReferenceError",
    "reference_solution",
    "group_errors",
    "fit_slope",
    "convergence_study",
    "max_workers",
]

GROUPS = ("psi_t", "theta_dot", "theta", "psi_t_dot")


class ReferenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReferenceSpec:
    stages: int = 3
    h: float = 2.5e-6


@dataclass(frozen=True)
class ConvergenceResult:
    method: str
    h: np.ndarray
    errors: dict  # group -> array over h
    slopes: dict  # group -> least-squares slope of log(error) vs log(h)
    reference_h: float
    t_end: float


def max_workers(n_jobs: int) -> int:
    """Worker count for independent runs, capped by ``PHDAE_THREADS`` (default 1)."""
    raw = os.environ.get("PHDAE_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        cap = 1
    return max(1, min(cap, n_jobs))


def _reduced_view(state, model: GeneratorModel) -> dict:
    """Group values at the final time; the flux derivative is taken from the
    state itself for every method (its own algebraic error is measured)."""
    if isinstance(state, PCState):
        state = state.to_full()
    if isinstance(state, FullState):
        idx = [0, 1, 4, 5]
        return {"psi_t": np.asarray(state.psi)[idx], "theta_dot": np.asarray(state.theta_dot),
                "theta": np.asarray(state.theta), "psi_t_dot": np.asarray(state.psi_dot)[idx]}
    return {"psi_t": state.psi_t, "theta_dot": state.theta_dot, "theta": state.theta,
            "psi_t_dot": state.psi_t_dot}


def reference_solution(state0: ReducedState, t_end: float, ref: ReferenceSpec = ReferenceSpec(),
                       params=None) -> dict:
    """Group values of the reference run at ``t_end``.

    The flux derivative is the constraint-consistent value at the reference
    end point, which is what the exact solution satisfies.
    """
    model = as_model(params)
    try:
        n = steps_for(t_end, ref.h, state0.t)
        traj = integrate(state0, ref.h, n, f"gauss:{ref.stages}", params=model, keep_frames=False)
    except Exception as exc:
        raise ReferenceError(f"reference run failed: {exc}") from exc
    fin = traj.final_state
    out = _reduced_view(fin, model)
    out["psi_t_dot"] = model.consistent_ydot(fin.t, fin.x)
    return out


def group_errors(state, reference: dict, model: GeneratorModel) -> dict:
    """Infinity-norm error per variable group."""
    view = _reduced_view(state, model)
    return {g: float(np.abs(np.asarray(view[g]) - reference[g]).max()) for g in GROUPS}


def fit_slope(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    if np.any(err <= 0) or not np.all(np.isfinite(err)):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def _check_h_list(h_list, ref: ReferenceSpec) -> np.ndarray:
    h = np.asarray(sorted(set(float(v) for v in h_list), reverse=True))
    if len(h) < 3 or len(h) != len(list(h_list)):
        raise ValueError("h_list needs at least three distinct step sizes")
    if np.any(h <= 0):
        raise ValueError("step sizes must be positive")
    if not ref.h <= h.min() / 4 * (1 + 1e-12):
        raise ValueError(f"reference step {ref.h!r} must be at most a quarter of the smallest step")
    return h


def convergence_study(method: str, h_list, t_end: float, reference: ReferenceSpec = ReferenceSpec(),
                      state0: ReducedState | None = None, params=None,
                      reference_values: dict | None = None) -> ConvergenceResult:
    """Errors at ``t_end`` for each step size and the fitted slope per group.

    ``state0`` is a consistent reduced state; predictor-corrector runs start
    from its embedding into the full model. ``reference_values`` may carry a
    precomputed :func:`reference_solution` to share between studies.
    """
    from .ics import load_initial_state

    meth = parse_method(method)
    model = as_model(params)
    h = _check_h_list(h_list, reference)
    if state0 is None:
        _, state0 = load_initial_state("paper-ics", model, consistent=True)
    ref = reference_values if reference_values is not None else reference_solution(state0, t_end, reference, model)

    def run(hk):
        n = steps_for(t_end, hk, state0.t)
        traj = integrate(state0, hk, n, meth, params=model, keep_frames=False)
        return group_errors(traj.final_state, ref, model)

    workers = max_workers(len(h))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run, h))
    else:
        rows = [run(hk) for hk in h]
    errors = {g: np.array([r[g] for r in rows]) for g in GROUPS}
    slopes = {g: fit_slope(h, errors[g]) for g in GROUPS}
    return ConvergenceResult(str(meth), h, errors, slopes, reference.h, float(t_end))
