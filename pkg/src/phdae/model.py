"""Full and reduced generator models.

The full model carries the six flux linkages
``(Psi_1a, Psi_1b, Psi_2a, Psi_2b, Psi_f, Psi_q)`` and is used by the
predictor-corrector schemes. The reduced model eliminates node 2 and is an
index-1 DAE in port-Hamiltonian descriptor form

    x = (psi_t_dot; psi_t; theta_dot; theta; t)   in R^21

with differential part ``x~ = (psi_t; theta_dot; theta)`` (16) and algebraic
part ``y~ = psi_t_dot`` (4).

The stiffness matrix K has zero row sums, so the effort vector ``z`` is never
formed on its own; only the inverse-free combinations ``M^T z`` and the
dissipative blocks are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .params import PhysicalParams, fbm_ssr

__all__ = [
    "FullState",
    "ReducedState",
    "FullMatrices",
    "StructureMatrices",
    "GeneratorModel",
    "as_model",
    "assemble_full_matrices",
    "stiffness_matrix",
    "coupling_matrix_full",
    "coupling_matrix_full_d5",
    "coupling_matrix_reduced",
    "coupling_matrix_reduced_d5",
    "source_current_full",
    "source_current_reduced",
    "elimination_coefficients",
    "reconstruct_eliminated_flux",
    "hamiltonian",
    "effort_image",
    "dae_rhs",
    "dae_constraint",
    "consistent_ydot",
    "structure_matrices",
    "full_consistency_residual",
    "reduced_to_full",
    "full_to_reduced",
    "make_consistent",
]

COUPLING_MODES = ("full", "frozen", "off")


# --- states -----------------------------------------------------------------

@dataclass(frozen=True)
class ReducedState:
    """State of the reduced pH-DAE.

    ``psi_t`` is ordered (Psi_1a, Psi_1b, Psi_f, Psi_q).
    """

    psi_t_dot: np.ndarray
    psi_t: np.ndarray
    theta_dot: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    @property
    def x(self) -> np.ndarray:
        """Differential variables (psi_t; theta_dot; theta)."""
        return np.concatenate([self.psi_t, self.theta_dot, self.theta])

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.psi_t_dot, dtype=float)

    @classmethod
    def from_xy(cls, t: float, x: np.ndarray, y: np.ndarray) -> ReducedState:
        x = np.asarray(x, dtype=float)
        return cls(np.array(y, dtype=float), x[0:4].copy(), x[4:10].copy(), x[10:16].copy(), float(t))

    def as_vector(self) -> np.ndarray:
        """The 21-vector (psi_t_dot; psi_t; theta_dot; theta; t)."""
        return np.concatenate([self.psi_t_dot, self.psi_t, self.theta_dot, self.theta, [self.t]])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> ReducedState:
        v = np.asarray(v, dtype=float)
        return cls(v[0:4].copy(), v[4:8].copy(), v[8:14].copy(), v[14:20].copy(), float(v[20]))


@dataclass(frozen=True)
class FullState:
    """State of the full 24-dimensional model used by the P-C schemes."""

    psi_dot: np.ndarray
    psi: np.ndarray
    theta_dot: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    @property
    def x_E(self) -> np.ndarray:
        return np.concatenate([self.psi_dot, self.psi])

    @property
    def x_M(self) -> np.ndarray:
        return np.concatenate([self.theta_dot, self.theta])

    @classmethod
    def from_blocks(cls, t: float, x_E: np.ndarray, x_M: np.ndarray) -> FullState:
        return cls(x_E[:6].copy(), x_E[6:].copy(), x_M[:6].copy(), x_M[6:].copy(), float(t))


class FullMatrices(NamedTuple):
    J: np.ndarray
    K: np.ndarray
    K_L: np.ndarray
    K_R: np.ndarray
    K_C: np.ndarray
    T: np.ndarray
    D: np.ndarray


class StructureMatrices(NamedTuple):
    M_desc: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    N: np.ndarray
    V: np.ndarray
    S: np.ndarray
    W: np.ndarray
    Xi: np.ndarray
    Lambda: np.ndarray


# --- assembly helpers -------------------------------------------------------

def stiffness_matrix(K: tuple[float, ...]) -> np.ndarray:
    """Tridiagonal shaft stiffness matrix with zero row sums."""
    n = len(K) + 1
    out = np.zeros((n, n))
    for i, k in enumerate(K):
        out[i, i] += k
        out[i + 1, i + 1] += k
        out[i, i + 1] -= k
        out[i + 1, i] -= k
    return out


def _rotation(theta5, derivative: int = 0):
    """Entries (c, s) of the rotation block and its derivatives."""
    c, s = np.cos(theta5), np.sin(theta5)
    # d/dθ (c, s) = (-s, c); applying it k times rotates by k*90 degrees
    for _ in range(derivative % 4):
        c, s = -s, c
    return c, s


class GeneratorModel:
    """Cached matrices plus the right-hand sides of both model forms.

    ``coupling`` selects a test variant:

    * ``"full"``   -- the physical model;
    * ``"frozen"`` -- rotor-angle coupling evaluated at ``frozen_angle`` and
      treated as constant (zero torque derivative), which makes the reduced
      Hamiltonian quadratic;
    * ``"off"``    -- the angle-dependent coupling entries are removed.

    ``frozen_time`` freezes the injected source current at that instant.
    """

    def __init__(self, params: PhysicalParams | None = None, coupling: str = "full",
                 frozen_angle: float = 0.0, frozen_time: float | None = None):
        if coupling not in COUPLING_MODES:
            raise ValueError(f"coupling must be one of {COUPLING_MODES}, got {coupling!r}")
        p = fbm_ssr() if params is None else params
        self.params = p
        self.coupling = coupling
        self.frozen_angle = float(frozen_angle)
        self.frozen_time = frozen_time

        self.J = np.diag(p.J)
        self.J_diag = np.array(p.J)
        self.J_inv_diag = 1.0 / self.J_diag
        self.K = stiffness_matrix(p.K)
        self.D = np.array(p.D)
        self.has_friction = bool(np.any(self.D))
        self.T6 = np.array([*p.T, 0.0, 0.0])

        inv_L = 1.0 / p.L
        K_L = np.zeros((6, 6))
        for i, j in ((0, 2), (1, 3)):
            K_L[i, i] = K_L[j, j] = inv_L
            K_L[i, j] = K_L[j, i] = -inv_L
        self.K_L = K_L
        self.K_R = np.diag([1 / p.R, 1 / p.R, 0.0, 0.0, 1 / p.R_f, 1 / p.R_q])
        self.K_C = np.zeros((6, 6))

        m = math.sqrt(1.5) * p.M
        self._m = m
        d0 = p.full_denominator
        d1 = p.reduced_denominator
        self._d0, self._d1 = d0, d1
        self.full_prefactor = m / d0
        self.reduced_prefactor = m / d1
        self.gamma_full_const = np.diag([0, 0, -p.L_r, -p.L_r, -(p.L_s + p.M_s), -(p.L_s + p.M_s)]) / d0

        self.KR_t = np.array([1 / p.R, 1 / p.R, 1 / p.R_f, 1 / p.R_q])
        self.KR_t_inv = np.array([p.R, p.R, p.R_f, p.R_q])
        self.KL_t = np.array([-p.L_r, -p.L_r, -(p.L_s + p.M_s + p.L), -(p.L_s + p.M_s + p.L)]) / d1
        self.lambda1 = d0 / d1
        self.lambda2 = m * p.L / d1
        self._Is_amp = p.U_s / p.R
        self._If = p.U_f / p.R_f
        self._coef = np.array([
            self._coupling_scale(False) * self.reduced_prefactor,
            self._coupling_scale(True) * self.reduced_prefactor,
            self._Is_amp, self._If, float(self.has_friction), p.omega_s,
            float(coupling == "frozen"), self.frozen_angle,
            float(frozen_time is not None), 0.0 if frozen_time is None else float(frozen_time),
        ])

    # -- variants --------------------------------------------------------

    def variant(self, **changes) -> GeneratorModel:
        kw = dict(coupling=self.coupling, frozen_angle=self.frozen_angle, frozen_time=self.frozen_time)
        kw.update(changes)
        return GeneratorModel(self.params, **kw)

    def _angle(self, theta5):
        return self.frozen_angle if self.coupling == "frozen" else theta5

    def _coupling_scale(self, derivative: bool) -> float:
        if self.coupling == "off" or (derivative and self.coupling == "frozen"):
            return 0.0
        return 1.0

    # -- sources ---------------------------------------------------------

    def source_reduced(self, t):
        """Injected currents (U_s/R cos, U_s/R sin, U_f/R_f, 0); vectorised in t."""
        if self.frozen_time is not None:
            t = np.full(np.shape(t), self.frozen_time) if np.ndim(t) else self.frozen_time
        wt = self.params.omega_s * np.asarray(t, dtype=float)
        out = np.zeros(np.shape(wt) + (4,))
        out[..., 0] = self._Is_amp * np.cos(wt)
        out[..., 1] = self._Is_amp * np.sin(wt)
        out[..., 2] = self._If
        return out

    def source_full(self, t) -> np.ndarray:
        r = self.source_reduced(t)
        out = np.zeros(np.shape(t) + (6,))
        out[..., 0:2] = r[..., 0:2]
        out[..., 4] = r[..., 2]
        return out

    # -- coupling matrices -----------------------------------------------

    def gamma_reduced(self, theta5, derivative: int = 0) -> np.ndarray:
        """Reduced coupling matrix (or its ``derivative``-th theta5 derivative)."""
        scale = self._coupling_scale(derivative > 0) * self.reduced_prefactor
        c, s = _rotation(self._angle(theta5), derivative)
        G = np.zeros((4, 4))
        G[0, 2] = G[2, 0] = scale * c
        G[0, 3] = G[3, 0] = -scale * s
        G[1, 2] = G[2, 1] = scale * s
        G[1, 3] = G[3, 1] = scale * c
        return G

    def gamma_full(self, theta5, derivative: int = 0) -> np.ndarray:
        scale = self._coupling_scale(derivative > 0) * self.full_prefactor
        c, s = _rotation(self._angle(theta5), derivative)
        G = self.gamma_full_const.copy() if derivative == 0 else np.zeros((6, 6))
        G[2, 4] = G[4, 2] = scale * c
        G[2, 5] = G[5, 2] = -scale * s
        G[3, 4] = G[4, 3] = scale * s
        G[3, 5] = G[5, 3] = scale * c
        return G

    def _rotor_products(self, psi_t, theta5, derivative: int = 0):
        """a . R^(k)(theta5) b for a = (Psi_1a, Psi_1b), b = (Psi_f, Psi_q); vectorised.

        Psi~^T Gamma~^(k) Psi~ = 2 * prefactor * this.
        """
        c, s = _rotation(self._angle(theta5), derivative)
        a0, a1, b0, b1 = psi_t[..., 0], psi_t[..., 1], psi_t[..., 2], psi_t[..., 3]
        return a0 * (c * b0 - s * b1) + a1 * (s * b0 + c * b1)

    def torque_reduced(self, psi_t, theta5):
        """Electrical torque 1/2 Psi~^T dGamma~/dtheta5 Psi~ acting on mass 5."""
        return self._coupling_scale(True) * self.reduced_prefactor * self._rotor_products(psi_t, theta5, 1)

    def torque_full(self, psi, theta5) -> float:
        psi = np.asarray(psi, dtype=float)
        return 0.5 * psi @ self.gamma_full(theta5, 1) @ psi

    def magnetic_coupling_product(self, psi_t, theta5):
        """(K~_L + Gamma~) Psi~, vectorised over leading axes."""
        k = self._coupling_scale(False) * self.reduced_prefactor
        c, s = _rotation(self._angle(theta5), 0)
        a0, a1, b0, b1 = psi_t[..., 0], psi_t[..., 1], psi_t[..., 2], psi_t[..., 3]
        rot = np.stack([c * b0 - s * b1, s * b0 + c * b1, c * a0 + s * a1, c * a1 - s * a0], axis=-1)
        return psi_t * self.KL_t + k * rot

    # -- reduced DAE -----------------------------------------------------

    def consistent_ydot(self, t, x):
        """The unique y~ with g~(t, x~, y~) = 0 (K~_R is diagonal positive)."""
        x = np.asarray(x, dtype=float)
        return (self.source_reduced(t) - self.magnetic_coupling_product(x[..., 0:4], x[..., 14])) * self.KR_t_inv

    def dae_constraint(self, t, x, y):
        x = np.asarray(x, dtype=float)
        return self.KR_t * y + self.magnetic_coupling_product(x[..., 0:4], x[..., 14]) - self.source_reduced(t)

    def dae_rhs(self, t, x, y):
        """f~(t, x~, y~) = (y~; J^-1 (T - D theta_dot - K theta - tau e5); theta_dot)."""
        x = np.asarray(x, dtype=float)
        psi_t, om, th = x[..., 0:4], x[..., 4:10], x[..., 10:16]
        force = self.T6 - th @ self.K
        if self.has_friction:
            force = force - om @ self.D.T
        force[..., 4] -= self.torque_reduced(psi_t, th[..., 4])
        out = np.empty(x.shape)
        out[..., 0:4] = y
        out[..., 4:10] = force * self.J_inv_diag
        out[..., 10:16] = om
        return out

    def ode_rhs(self, t, x):
        """State-space right-hand side with y~ eliminated; returns (f, y).

        Same result as ``dae_rhs(t, x, consistent_ydot(t, x))`` in one pass;
        this is the stepper hot path.
        """
        x = np.asarray(x, dtype=float)
        psi_t, om, th = x[..., 0:4], x[..., 4:10], x[..., 10:16]
        c, s = _rotation(self._angle(th[..., 4]), 0)
        a0, a1, b0, b1 = psi_t[..., 0], psi_t[..., 1], psi_t[..., 2], psi_t[..., 3]
        k = self._coupling_scale(False) * self.reduced_prefactor
        kd = self._coupling_scale(True) * self.reduced_prefactor
        rb0 = c * b0 - s * b1
        rb1 = s * b0 + c * b1
        rot = np.stack([rb0, rb1, c * a0 + s * a1, c * a1 - s * a0], axis=-1)
        y = (self.source_reduced(t) - psi_t * self.KL_t - k * rot) * self.KR_t_inv
        force = self.T6 - th @ self.K
        if self.has_friction:
            force = force - om @ self.D.T
        # a . R'(theta5) b with R' = d/dtheta5 of the rotation block
        force[..., 4] -= kd * (a1 * rb0 - a0 * rb1)
        out = np.empty(x.shape)
        out[..., 0:4] = y
        out[..., 4:10] = force * self.J_inv_diag
        out[..., 10:16] = om
        return out, y

    def ode_rhs_into(self, ts: np.ndarray, X: np.ndarray, F: np.ndarray, Y: np.ndarray) -> None:
        """Compiled ``ode_rhs`` over stacked stages, writing into F and Y."""
        _kernels.reduced_rhs(ts, X, self.KL_t, self.KR_t_inv, self.K, self.J_inv_diag,
                             self.T6, self.D, self._coef, F, Y)

    def ode_jacobian_fast(self, x: np.ndarray) -> np.ndarray:
        """Compiled ``ode_jacobian`` (the Jacobian does not depend on t)."""
        out = np.empty((16, 16))
        _kernels.reduced_jacobian(np.ascontiguousarray(x, dtype=float), self.KL_t, self.KR_t_inv,
                                  self.K, self.J_inv_diag, self.D, self._coef, out)
        return out

    def step_scales(self, t: float, x: np.ndarray, y: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Compiled magnitudes for step control, see ``_kernels.step_scales``."""
        if out is None:
            out = np.empty(6)
        _kernels.step_scales(float(t), x, y, self.KL_t, self.KR_t, self.KR_t_inv, self.K,
                             self.J_inv_diag, self.T6, self.D, self._coef, out)
        return out

    def ode_jacobian(self, t, x) -> np.ndarray:
        """d/dx~ of the state-space right-hand side (16x16)."""
        x = np.asarray(x, dtype=float)
        psi_t, th5 = x[0:4], x[14]
        G1 = self.gamma_reduced(th5, 1)
        Jac = np.zeros((16, 16))
        # psi_t rows: y = K~_R^-1 (I_s - (K~_L + Gamma~) psi_t)
        Jac[0:4, 0:4] = -self.KR_t_inv[:, None] * (np.diag(self.KL_t) + self.gamma_reduced(th5))
        Jac[0:4, 14] = -self.KR_t_inv * (G1 @ psi_t)
        # theta_dot rows
        Jac[4:10, 4:10] = -self.J_inv_diag[:, None] * self.D
        Jac[4:10, 10:16] = -self.J_inv_diag[:, None] * self.K
        Jac[8, 0:4] -= self.J_inv_diag[4] * (G1 @ psi_t)
        Jac[8, 14] -= self.J_inv_diag[4] * 0.5 * psi_t @ self.gamma_reduced(th5, 2) @ psi_t
        Jac[10:16, 4:10] = np.eye(6)
        return Jac

    # -- energy ----------------------------------------------------------

    def hamiltonian(self, state: ReducedState) -> float:
        psi_t = np.asarray(state.psi_t, dtype=float)
        om, th = state.theta_dot, state.theta
        return float(0.5 * om @ (self.J_diag * om)
                     + 0.5 * psi_t @ self.magnetic_coupling_product(psi_t, th[4])
                     + 0.5 * th @ self.K @ th)

    def hamiltonian_x(self, x) -> np.ndarray:
        """Hamiltonian as a function of x~, vectorised over leading axes."""
        x = np.asarray(x, dtype=float)
        psi_t, om, th = x[..., 0:4], x[..., 4:10], x[..., 10:16]
        return (0.5 * np.sum(om * om * self.J_diag, axis=-1)
                + 0.5 * np.sum(psi_t * self.magnetic_coupling_product(psi_t, th[..., 4]), axis=-1)
                + 0.5 * np.sum(th * (th @ self.K), axis=-1))

    def effort_image(self, state: ReducedState) -> np.ndarray:
        """M^T z = grad_x H, assembled without inverting K or K~_L (21-vector)."""
        psi_t = np.asarray(state.psi_t, dtype=float)
        th = np.asarray(state.theta, dtype=float)
        out = np.zeros(21)
        out[4:8] = self.magnetic_coupling_product(psi_t, th[4])
        out[8:14] = self.J_diag * state.theta_dot
        out[14:20] = self.K @ th
        out[18] += self.torque_reduced(psi_t, th[4])
        return out

    def hamiltonian_full(self, state: FullState) -> float:
        psi, om, th = state.psi, state.theta_dot, state.theta
        return float(0.5 * om @ (self.J_diag * om)
                     + 0.5 * psi @ (self.K_L + self.gamma_full(th[4])) @ psi
                     + 0.5 * th @ self.K @ th)

    # -- full model --------------------------------------------------------

    def full_consistency_residual(self, state: FullState) -> np.ndarray:
        """K_R Psi_dot + (K_L + Gamma) Psi - I_s; rows 3-4 are the eliminated ones."""
        return (self.K_R @ state.psi_dot + (self.K_L + self.gamma_full(state.theta[4])) @ state.psi
                - self.source_full(state.t))

    def reconstruct_eliminated_flux(self, psi_t, theta5) -> tuple[float, float]:
        psi_t = np.asarray(psi_t, dtype=float)
        c, s = _rotation(self._angle(theta5))
        if self.coupling == "off":
            # without rotor coupling node 2 simply follows node 1
            return (float(self._decoupled_lambda() * psi_t[0]), float(self._decoupled_lambda() * psi_t[1]))
        p1a, p1b, pf, pq = psi_t
        l1, l2 = self.lambda1, self.lambda2
        return (float(l1 * p1a + l2 * (-pf * c + pq * s)),
                float(l1 * p1b + l2 * (-pf * s - pq * c)))

    def _decoupled_lambda(self) -> float:
        # rows 3-4 with the angle terms removed: (1/L - L_r/d0) Psi_2 = Psi_1 / L
        p = self.params
        return (1 / p.L) / (1 / p.L - p.L_r / self._d0)


def as_model(params: PhysicalParams | GeneratorModel | None) -> GeneratorModel:
    if isinstance(params, GeneratorModel):
        return params
    return GeneratorModel(params)


# --- functional interface ---------------------------------------------------

def assemble_full_matrices(params: PhysicalParams | GeneratorModel | None = None) -> FullMatrices:
    m = as_model(params)
    return FullMatrices(m.J.copy(), m.K.copy(), m.K_L.copy(), m.K_R.copy(), m.K_C.copy(), m.T6.copy(), m.D.copy())


def coupling_matrix_full(theta5: float, params=None) -> np.ndarray:
    return as_model(params).gamma_full(theta5)


def coupling_matrix_full_d5(theta5: float, params=None) -> np.ndarray:
    return as_model(params).gamma_full(theta5, 1)


def coupling_matrix_reduced(theta5: float, params=None) -> np.ndarray:
    return as_model(params).gamma_reduced(theta5)


def coupling_matrix_reduced_d5(theta5: float, params=None) -> np.ndarray:
    return as_model(params).gamma_reduced(theta5, 1)


def source_current_full(t, params=None) -> np.ndarray:
    return as_model(params).source_full(t)


def source_current_reduced(t, params=None) -> np.ndarray:
    return as_model(params).source_reduced(t)


def elimination_coefficients(params=None) -> tuple[float, float]:
    """(lambda_1, lambda_2) expressing node-2 fluxes through the remaining ones."""
    m = as_model(params)
    return m.lambda1, m.lambda2


def reconstruct_eliminated_flux(psi_t, theta5: float, params=None) -> tuple[float, float]:
    return as_model(params).reconstruct_eliminated_flux(psi_t, theta5)


def hamiltonian(state: ReducedState, params=None) -> float:
    return as_model(params).hamiltonian(state)


def effort_image(state: ReducedState, params=None) -> np.ndarray:
    return as_model(params).effort_image(state)


def dae_rhs(t, x, y, params=None) -> np.ndarray:
    return as_model(params).dae_rhs(t, x, y)


def dae_constraint(t, x, y, params=None) -> np.ndarray:
    return as_model(params).dae_constraint(t, x, y)


def consistent_ydot(t, x, params=None) -> np.ndarray:
    return as_model(params).consistent_ydot(t, x)


def full_consistency_residual(state: FullState, params=None) -> np.ndarray:
    return as_model(params).full_consistency_residual(state)


def structure_matrices(params=None) -> StructureMatrices:
    """Descriptor matrices of the reduced pH-DAE and the pairings Xi, Lambda."""
    m = as_model(params)
    n = 21
    i_yd, i_ps, i_om, i_th, i_t = slice(0, 4), slice(4, 8), slice(8, 14), slice(14, 20), 20
    KL = np.diag(m.KL_t)

    M_desc = np.zeros((n, n))
    M_desc[i_ps, i_ps] = KL
    M_desc[i_om, i_om] = m.J
    M_desc[i_th, i_th] = m.K
    M_desc[i_t, i_t] = 1.0

    P = np.zeros((n, n))
    P[i_yd, i_ps] = -KL
    P[i_ps, i_yd] = KL
    P[i_om, i_th] = -m.K
    P[i_th, i_om] = m.K

    Q = np.zeros((n, n))
    Q[i_yd, i_yd] = np.diag(m.KR_t)
    Q[i_om, i_om] = m.D

    N = np.zeros((n, n))
    N[i_yd, i_yd] = np.eye(4)
    N[i_om, i_om] = np.eye(6)
    N[i_t, i_t] = 1.0

    V = np.zeros((n, n))
    S = np.zeros((n, n))
    W = np.zeros((n, n))
    Xi = np.block([[P, N], [-N.T, W]])
    Lam = np.block([[Q, V], [V.T, S]])
    return StructureMatrices(M_desc, P, Q, N, V, S, W, Xi, Lam)


def reduced_to_full(state: ReducedState, params=None) -> FullState:
    """Embed a reduced state into the full model.

    Node-2 fluxes follow from the algebraic elimination; their derivatives
    from differentiating it along the reduced state (hidden constraint).
    """
    m = as_model(params)
    pt, pd = np.asarray(state.psi_t, dtype=float), np.asarray(state.psi_t_dot, dtype=float)
    th5, om5 = state.theta[4], state.theta_dot[4]
    p2a, p2b = m.reconstruct_eliminated_flux(pt, th5)
    if m.coupling == "off":
        lam = m._decoupled_lambda()
        d2a, d2b = lam * pd[0], lam * pd[1]
    else:
        c, s = _rotation(m._angle(th5))
        w = om5 if m.coupling == "full" else 0.0
        l1, l2 = m.lambda1, m.lambda2
        d2a = l1 * pd[0] + l2 * (-pd[2] * c + pd[3] * s + w * (pt[2] * s + pt[3] * c))
        d2b = l1 * pd[1] + l2 * (-pd[2] * s - pd[3] * c + w * (-pt[2] * c + pt[3] * s))
    psi = np.array([pt[0], pt[1], p2a, p2b, pt[2], pt[3]])
    psi_dot = np.array([pd[0], pd[1], d2a, d2b, pd[2], pd[3]])
    return FullState(psi_dot, psi, np.array(state.theta_dot, dtype=float), np.array(state.theta, dtype=float), state.t)


def full_to_reduced(state: FullState) -> ReducedState:
    idx = [0, 1, 4, 5]
    return ReducedState(np.asarray(state.psi_dot)[idx].copy(), np.asarray(state.psi)[idx].copy(),
                        np.array(state.theta_dot, dtype=float), np.array(state.theta, dtype=float), state.t)


def make_consistent(state: ReducedState, params=None) -> ReducedState:
    """Replace the algebraic block by the value solving the constraint."""
    m = as_model(params)
    y = m.consistent_ydot(state.t, state.x)
    return ReducedState.from_xy(state.t, state.x, y)
