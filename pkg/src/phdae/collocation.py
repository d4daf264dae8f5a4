"""Gauss collocation for the reduced index-1 generator DAE (direct approach).

Stage unknowns are the differential stage derivatives ``K_i`` (16 per
stage); the collocation points are ``X_i = x_n + h sum_j a_ij K_j``. The
algebraic stage values follow in closed form from the constraint,
``Y_i = K~_R^-1 (I_s(t_i) - (K~_L + Gamma~(theta_i)) Psi~_i)``, because the
constraint is linear in ``y~`` with a diagonal positive Jacobian. The
algebraic variable advances as

    y_{n+1} = rho * y_n + (b^T A^-1) Y

which is the Runge-Kutta update of ``y~`` with the stage derivatives
eliminated; ``rho = 1 - b^T A^-1 e``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import _kernels
from .model import GeneratorModel, ReducedState, as_model
from .tableau import ButcherTableau, gauss_tableau

__all__ = [
    "GaussOptions",
    "GaussStepReport",
    "StageData",
    "GaussStepper",
    "NewtonConvergenceError",
    "InconsistentStateError",
    "gauss_dae_step",
    "constraint_scale",
]

_EPS = np.finfo(float).eps
# scaled increment below which a stalled iteration is accepted as converged
_STALL = 1e-9


class NewtonConvergenceError(RuntimeError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InconsistentStateError(ValueError):
    pass


@dataclass(frozen=True)
class GaussOptions:
    newton_tol: float = 1e-12
    max_iter: int = 50
    contraction_refresh: float = 0.5
    check_consistency: bool = True
    consistency_rtol: float = 1e-6


@dataclass(frozen=True)
class GaussStepReport:
    newton_iterations: int
    stage_residual: float
    constraint_residual: float
    jacobian_updates: int = 1


@dataclass(frozen=True)
class StageData:
    """Converged stage values of one step, kept for post-hoc diagnostics."""

    t: np.ndarray  # (s,)
    X: np.ndarray  # (s, 16) collocation points
    Y: np.ndarray  # (s, 4) algebraic stage values
    K: np.ndarray  # (s, 16) stage derivatives
    Ydot: np.ndarray  # (s, 4) algebraic stage derivatives, A^-1 (Y - y_n) / h


def constraint_scale(model: GeneratorModel, t, x, y) -> float:
    """Magnitude of the individual terms of g~, used to make residuals relative."""
    terms = (np.abs(model.KR_t * y), np.abs(model.magnetic_coupling_product(x[..., 0:4], x[..., 14])),
             np.abs(model.source_reduced(t)))
    return float(max(np.max(v) for v in terms))


class GaussStepper:
    """Fixed-step s-stage collocation stepper for one trajectory.

    Holds the step size and reusable buffers; not safe to share between
    concurrently advancing trajectories.
    """

    def __init__(self, model: GeneratorModel, tableau: ButcherTableau, h: float,
                 opts: GaussOptions | None = None):
        if not h > 0:
            raise ValueError(f"step size must be positive, got {h!r}")
        self.model = model
        self.tab = tableau
        self.h = float(h)
        self.opts = opts or GaussOptions()
        s = tableau.s
        self._hA = self.h * tableau.A
        self._hb = self.h * tableau.b
        self._bAinv = tableau.b_A_inv
        self._rho = tableau.rho
        self._nm = np.empty((16 * s, 16 * s))
        self._scales = np.empty(6)
        self.report_constraint = True

    # -- pieces ------------------------------------------------------------

    def _weights(self, t: float, x: np.ndarray, y: np.ndarray, f0: np.ndarray) -> np.ndarray:
        """Per-component scale of the stage derivatives at the step start.

        The acceleration scale is widened by the rounding floor of the
        spring forces so that the tolerance stays attainable as the
        unwrapped angles grow.
        """
        sc = self.model.step_scales(t, x, y, self._scales)
        w = np.empty(16)
        w[0:4], w[4:10], w[10:16] = sc[0], sc[1] + 16.0 * sc[5] / self.opts.newton_tol, sc[2]
        floor = max(np.max(w), np.max(np.abs(f0)), 1.0)
        w[w == 0] = floor
        return w

    def _newton_matrix(self, x: np.ndarray):
        jac = self.model.ode_jacobian_fast(x)
        _kernels.newton_matrix(self._hA, jac, self._nm)
        return lu_factor(self._nm, overwrite_a=True, check_finite=False)

    # -- step ----------------------------------------------------------------

    def step(self, state: ReducedState, check_consistency: bool | None = None,
             carry: np.ndarray | None = None):
        """Advance one step; returns ``(new_state, report, stages)``.

        ``carry`` (16,) enables compensated summation of the differential
        update: it holds the low-order part lost in the previous addition
        and is updated in place. Over many steps this keeps the rounding
        error of the large, steadily growing angles and speeds from
        swamping the discretisation error.
        """
        m, tab, opts = self.model, self.tab, self.opts
        s = tab.s
        t0 = state.t
        x0 = state.x
        y0 = state.y
        if check_consistency is None:
            check_consistency = opts.check_consistency
        if check_consistency:
            g = m.dae_constraint(t0, x0, y0)
            scale = constraint_scale(m, t0, x0, y0)
            if np.max(np.abs(g)) > opts.consistency_rtol * scale:
                raise InconsistentStateError(
                    f"inconsistent state at t={t0}: |g|={np.max(np.abs(g)):.3e}, scale={scale:.3e}")

        ts = t0 + tab.c * self.h
        F = np.empty((s, 16))
        Y = np.empty((s, 4))
        m.ode_rhs_into(np.array([t0]), x0[None, :], F[:1], Y[:1])
        f0 = F[0].copy()
        inv_w = 1.0 / self._weights(t0, x0, y0, f0)
        K = np.tile(f0, (s, 1))
        lu = self._newton_matrix(x0)
        updates = 1
        fresh = True
        prev = np.inf
        it = 0
        while True:
            it += 1
            X = x0 + self._hA @ K
            m.ode_rhs_into(ts, X, F, Y)
            dK = lu_solve(lu, (F - K).ravel(), check_finite=False).reshape(s, 16)
            norm = float(np.abs(dK * inv_w).max())
            if not np.isfinite(norm):
                raise NewtonConvergenceError(f"non-finite Newton increment at t={t0}", it, norm)
            K += dK
            if norm <= opts.newton_tol:
                break
            if norm > opts.contraction_refresh * prev:
                if fresh and norm < _STALL:
                    break  # no progress even with a fresh Jacobian: rounding level
                lu = self._newton_matrix((x0 + self._hA @ K).mean(axis=0))
                updates += 1
                fresh = True
            else:
                fresh = False
            prev = norm
            if it >= opts.max_iter:
                raise NewtonConvergenceError(
                    f"simplified Newton did not converge at t={t0} after {it} iterations "
                    f"(last scaled increment {norm:.3e})", it, norm)

        X = x0 + self._hA @ K
        m.ode_rhs_into(ts, X, F, Y)
        stage_res = float(np.abs((K - F) * inv_w).max())
        inc = self._hb @ K
        if carry is not None:
            inc += carry
            x1 = x0 + inc
            carry[:] = inc - (x1 - x0)
        else:
            x1 = x0 + inc
        y1 = self._rho * y0 + self._bAinv @ Y
        t1 = t0 + self.h
        new = ReducedState(y1, x1[0:4], x1[4:10], x1[10:16], t1)
        if self.report_constraint:
            sc = m.step_scales(t1, x1, y1, self._scales)
            con = float(sc[4] / max(sc[3], np.finfo(float).tiny))
        else:
            con = float("nan")
        report = GaussStepReport(it, stage_res, con, updates)
        return new, report, StageData(ts, X, Y.copy(), K, (tab.A_inv @ (Y - y0)) / self.h)


def gauss_dae_step(state: ReducedState, h: float, tableau: ButcherTableau | int = 1,
                   params=None, opts: GaussOptions | None = None):
    """One collocation step of the reduced DAE; returns ``(state, report)``."""
    tab = gauss_tableau(tableau) if isinstance(tableau, int) else tableau
    stepper = GaussStepper(as_model(params), tab, h, opts)
    new, report, _ = stepper.step(state)
    return new, report
