"""Predictor-corrector schemes on the full 24-dimensional generator model.

Both schemes predict the rotor angles with a forward Euler step, advance
the electrical block ``x_E = (Psi_dot; Psi)`` with the trapezoidal rule at
the predicted angle, and then advance the mechanical block
``x_M = (theta_dot; theta)`` with the trapezoidal rule. They differ only in
how the electromagnetic torque at the new time level is approximated:

* ``pc1`` uses the left end point, ``h * g_M(Psi_n, theta_n)``;
* ``pc2`` averages ``g_M(Psi_n, theta_n)`` and ``g_M(Psi_{n+1}, theta_pred)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .model import FullState, GeneratorModel, as_model

__all__ = [
    "PCState",
    "PCBlocks",
    "PCWorkspace",
    "PCStepReport",
    "PCStepper",
    "SingularStepError",
    "LinearSolveError",
    "assemble_pc_blocks",
    "pc1_step",
    "pc2_step",
    "COND_LIMIT",
]

COND_LIMIT = 1e14
RESIDUAL_LIMIT = 1e-10


class SingularStepError(np.linalg.LinAlgError):
    """A step matrix is singular or too ill-conditioned to trust."""

    def __init__(self, message: str, step: int | None = None, cond: float = np.inf):
        super().__init__(message)
        self.step = step
        self.cond = cond


class LinearSolveError(np.linalg.LinAlgError):
    """Relative residual of a linear solve exceeded its limit."""

    def __init__(self, message: str, step: int | None = None, residual: float = np.nan):
        super().__init__(message)
        self.step = step
        self.residual = residual


@dataclass(frozen=True)
class PCState:
    """``x_E = (Psi_dot; Psi)`` and ``x_M = (theta_dot; theta)`` at time ``t``."""

    x_E: np.ndarray
    x_M: np.ndarray
    t: float = 0.0

    @property
    def psi_dot(self) -> np.ndarray:
        return self.x_E[0:6]

    @property
    def psi(self) -> np.ndarray:
        return self.x_E[6:12]

    @property
    def theta_dot(self) -> np.ndarray:
        return self.x_M[0:6]

    @property
    def theta(self) -> np.ndarray:
        return self.x_M[6:12]

    @classmethod
    def from_full(cls, state: FullState) -> PCState:
        return cls(np.asarray(state.x_E, dtype=float).copy(), np.asarray(state.x_M, dtype=float).copy(),
                   float(state.t))

    def to_full(self) -> FullState:
        return FullState.from_blocks(self.t, self.x_E, self.x_M)


class PCBlocks(NamedTuple):
    K_E1: np.ndarray
    K_E2: Callable[[np.ndarray], np.ndarray]
    g_E: Callable[[float], np.ndarray]
    K_M1: np.ndarray
    K_M2: np.ndarray
    g_M: Callable[[np.ndarray, np.ndarray], np.ndarray]


def assemble_pc_blocks(params=None) -> PCBlocks:
    """Block matrices of ``K_E1 x_E' = -K_E2(theta) x_E + g_E(t)`` and
    ``K_M1 x_M' = -K_M2 x_M + g_M(Psi, theta)``."""
    m = as_model(params)
    I6 = np.eye(6)
    K_E1 = np.zeros((12, 12))
    K_E1[0:6, 0:6] = m.K_C
    K_E1[6:12, 6:12] = I6
    K_M1 = np.zeros((12, 12))
    K_M1[0:6, 0:6] = m.J
    K_M1[6:12, 6:12] = I6
    K_M2 = np.zeros((12, 12))
    K_M2[0:6, 0:6] = m.D
    K_M2[0:6, 6:12] = m.K
    K_M2[6:12, 0:6] = -I6

    def K_E2(theta):
        out = np.zeros((12, 12))
        out[0:6, 0:6] = m.K_R
        out[0:6, 6:12] = m.K_L + m.gamma_full(theta[4])
        out[6:12, 0:6] = -I6
        return out

    def g_E(t):
        out = np.zeros(12)
        out[0:6] = m.source_full(t)
        return out

    def g_M(psi, theta):
        out = np.zeros(12)
        out[0:6] = m.T6
        out[4] -= m.torque_full(psi, theta[4])
        return out

    return PCBlocks(K_E1, K_E2, g_E, K_M1, K_M2, g_M)


class PCWorkspace:
    """Constant blocks and the mechanical factorisation for one step size."""

    def __init__(self, params, h: float):
        if not h > 0:
            raise ValueError(f"step size must be positive, got {h!r}")
        self.model = as_model(params)
        self.h = float(h)
        self.blocks = assemble_pc_blocks(self.model)
        b = self.blocks
        half = 0.5 * self.h
        self.A_M = b.K_M1 + half * b.K_M2
        self.B_M = b.K_M1 - half * b.K_M2
        self.lu_M = lu_factor(self.A_M, check_finite=False)
        self.cond_M = _cond_estimate(self.A_M, self.lu_M)
        if self.cond_M > COND_LIMIT:
            raise SingularStepError(f"mechanical step matrix ill-conditioned (cond ~ {self.cond_M:.3e})",
                                    cond=self.cond_M)
        # constant part of K_E1 +- h/2 K_E2; the coupling block is added per step
        self._E_plus = b.K_E1.copy()
        self._E_plus[0:6, 0:6] += half * self.model.K_R
        self._E_plus[6:12, 0:6] -= half * np.eye(6)
        self._E_minus = b.K_E1.copy()
        self._E_minus[0:6, 0:6] -= half * self.model.K_R
        self._E_minus[6:12, 0:6] += half * np.eye(6)
        self._KL = self.model.K_L

    def check_h(self, h: float) -> None:
        if float(h) != self.h:
            raise ValueError(f"workspace was built for h={self.h!r}, got h={h!r}")

    def electrical_matrices(self, theta5_new: float, theta5_old: float):
        """``(K_E1 + h/2 K_E2(theta_new), K_E1 - h/2 K_E2(theta_old))``."""
        half = 0.5 * self.h
        m = self.model
        A = self._E_plus.copy()
        A[0:6, 6:12] = half * (self._KL + m.gamma_full(theta5_new))
        B = self._E_minus.copy()
        B[0:6, 6:12] = -half * (self._KL + m.gamma_full(theta5_old))
        return A, B

    def g_M(self, psi: np.ndarray, theta5: float) -> np.ndarray:
        out = np.zeros(12)
        out[0:6] = self.model.T6
        out[4] -= self.model.torque_full(psi, theta5)
        return out


def _cond_estimate(A: np.ndarray, lu) -> float:
    anorm = float(np.abs(A).sum(axis=0).max())
    rcond, info = lapack.dgecon(lu[0], anorm, norm="1")
    if info != 0 or rcond <= 0.0 or not np.isfinite(rcond):
        return np.inf
    return 1.0 / rcond


def _rel_residual(A: np.ndarray, x: np.ndarray, b: np.ndarray) -> float:
    nb = float(np.abs(b).max())
    r = float(np.abs(A @ x - b).max())
    return r / nb if nb > 0 else r


@dataclass(frozen=True)
class PCStepReport:
    step: int | None
    cond_E: float
    residual_E: float
    residual_M: float


class PCStepper:
    """Fixed-step driver for ``pc1`` (``trapezoid=False``) or ``pc2``."""

    def __init__(self, params, h: float, trapezoid: bool, workspace: PCWorkspace | None = None):
        self.ws = workspace if workspace is not None else PCWorkspace(params, h)
        self.ws.check_h(h)
        self.h = self.ws.h
        self.trapezoid = bool(trapezoid)

    @property
    def model(self) -> GeneratorModel:
        return self.ws.model

    def step(self, state: PCState, step_index: int | None = None) -> tuple[PCState, PCStepReport]:
        ws, h = self.ws, self.h
        m = ws.model
        xE, xM = np.asarray(state.x_E, dtype=float), np.asarray(state.x_M, dtype=float)
        t0 = float(state.t)
        t1 = t0 + h
        om, th = xM[0:6], xM[6:12]
        where = f" at step {step_index}" if step_index is not None else ""

        # (i) angle predictor
        th_pred = th + h * om

        # (ii) trapezoidal electrical step at the predicted angle
        A, B = ws.electrical_matrices(th_pred[4], th[4])
        rhs = B @ xE
        rhs[0:6] += 0.5 * h * (m.source_full(t0) + m.source_full(t1))
        try:
            lu = lu_factor(A, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularStepError(f"electrical step matrix singular{where}", step_index) from exc
        cond = _cond_estimate(A, lu)
        if cond > COND_LIMIT:
            raise SingularStepError(f"electrical step matrix ill-conditioned{where} (cond ~ {cond:.3e})",
                                    step_index, cond)
        xE1 = lu_solve(lu, rhs, check_finite=False)
        res_E = _rel_residual(A, xE1, rhs)

        # (iii) trapezoidal mechanical step; both schemes build gm first so
        # they agree bitwise when the torque does not depend on the state
        gm = ws.g_M(xE[6:12], th[4])
        if self.trapezoid:
            gm = 0.5 * (gm + ws.g_M(xE1[6:12], th_pred[4]))
        rhs_M = ws.B_M @ xM + h * gm
        xM1 = lu_solve(ws.lu_M, rhs_M, check_finite=False)
        res_M = _rel_residual(ws.A_M, xM1, rhs_M)

        worst = max(res_E, res_M)
        if not worst < RESIDUAL_LIMIT:
            raise LinearSolveError(f"linear solve residual {worst:.3e}{where} exceeds {RESIDUAL_LIMIT:g}",
                                   step_index, worst)
        return PCState(xE1, xM1, t1), PCStepReport(step_index, cond, res_E, res_M)


def _step(state, h, params, ws, trapezoid, step_index):
    if isinstance(state, FullState):
        state = PCState.from_full(state)
    model = ws.model if ws is not None and params is None else as_model(params)
    if ws is None:
        ws = PCWorkspace(model, h)
    new, _ = PCStepper(model, h, trapezoid, ws).step(state, step_index)
    return new


def pc1_step(state: PCState, h: float, params=None, ws: PCWorkspace | None = None,
             step_index: int | None = None) -> PCState:
    """One step of the scheme with left-endpoint torque."""
    return _step(state, h, params, ws, False, step_index)


def pc2_step(state: PCState, h: float, params=None, ws: PCWorkspace | None = None,
             step_index: int | None = None) -> PCState:
    """One step of the scheme with trapezoidal torque correction."""
    return _step(state, h, params, ws, True, step_index)
