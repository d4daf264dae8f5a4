"""Numerical checks of the Legendre/Gauss identities behind the
``rho = (-1)^s`` classification of Gauss methods."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import lu_factor

from .tableau import (
    UnsupportedStagesError,
    gauss_tableau,
    shifted_legendre,
    shifted_legendre_binomial,
    shifted_legendre_roots,
)

__all__ = [
    "AppendixReport",
    "TOLERANCES",
    "xi",
    "matrix_G",
    "matrix_XG",
    "det_closed_form",
    "det_lu",
    "quadrature_exactness_error",
    "integration_recurrence_error",
    "legendre_integral_error",
    "binomial_crosscheck_error",
    "verify_appendix",
    "format_report",
]

MAX_G_STAGES = 10
MAX_VERIFY_STAGES = 8

TOLERANCES = {
    "det_rel": 1e-10,
    "rho": 1e-10,
    "bAinv_e": 1e-10,
    "gbg": 1e-11,
    "similarity": 1e-11,
}


def _check(s: int, smax: int) -> int:
    if int(s) != s or not 1 <= s <= smax:
        raise UnsupportedStagesError(f"stage count must be an integer in [1, {smax}], got {s!r}")
    return int(s)


def xi(k: int) -> float:
    """Off-diagonal entries 1 / (2 sqrt(4k^2 - 1)) of the tridiagonal form."""
    return 1.0 / (2.0 * math.sqrt(4 * k * k - 1))


def matrix_G(s: int) -> np.ndarray:
    """G[i, j] = P_j(gamma_i) with P normalised to unit L2 norm on [0, 1]."""
    s = _check(s, MAX_G_STAGES)
    gam = shifted_legendre_roots(s)
    return np.column_stack([shifted_legendre(j, gam) for j in range(s)])


def matrix_XG(s: int) -> np.ndarray:
    """Tridiagonal matrix similar to the Gauss coefficient matrix A."""
    s = _check(s, MAX_G_STAGES)
    X = np.zeros((s, s))
    X[0, 0] = 0.5
    for k in range(1, s):
        X[k, k - 1] = xi(k)
        X[k - 1, k] = -xi(k)
    return X


def det_closed_form(s: int) -> float:
    """s! / (2s)! from exact integers."""
    return float(Fraction(math.factorial(s), math.factorial(2 * s)))


def det_lu(A: np.ndarray) -> float:
    """Determinant from the LU factors (pivot product with permutation sign)."""
    lu, piv = lu_factor(A)
    sign = (-1.0) ** int(np.sum(piv != np.arange(len(piv))))
    return float(sign * np.prod(np.diag(lu)))


def quadrature_exactness_error(s: int) -> float:
    """max |sum_i b_i P_k(c_i) P_l(c_i) - delta_kl| over k + l <= 2s - 2."""
    tab = gauss_tableau(s)
    P = [shifted_legendre(k, tab.c) for k in range(2 * s - 1)]
    err = 0.0
    for k in range(2 * s - 1):
        for l in range(2 * s - 1 - k):
            val = float(tab.b @ (P[k] * P[l]))
            err = max(err, abs(val - (1.0 if k == l else 0.0)))
    return err


def integration_recurrence_error(k: int, lam=None, n_quad: int = 64) -> float:
    """Max deviation of int_0^lam P_k from its three-term closed form.

    The integral is evaluated by a high-order Gauss-Legendre rule on
    [0, lam], exact for these polynomial degrees.
    """
    lam = np.linspace(0.0, 1.0, 20) if lam is None else np.asarray(lam, dtype=float)
    qx, qw = np.polynomial.legendre.leggauss(n_quad)
    err = 0.0
    for l in lam:
        tau = 0.5 * l * (qx + 1.0)
        integral = float(0.5 * l * qw @ shifted_legendre(k, tau))
        if k == 0:
            closed = xi(1) * shifted_legendre(1, l) + 0.5 * shifted_legendre(0, l)
        else:
            closed = xi(k + 1) * shifted_legendre(k + 1, l) - xi(k) * shifted_legendre(k - 1, l)
        err = max(err, abs(integral - float(closed)))
    return err


def legendre_integral_error(k: int, n_quad: int = 64) -> float:
    """|int_0^1 P_k - delta_k0|."""
    qx, qw = np.polynomial.legendre.leggauss(n_quad)
    val = float(0.5 * qw @ shifted_legendre(k, 0.5 * (qx + 1.0)))
    return abs(val - (1.0 if k == 0 else 0.0))


def binomial_crosscheck_error(k: int, lam=None) -> float:
    """Recurrence vs explicit binomial sum; meaningful for small k only."""
    lam = np.linspace(0.0, 1.0, 21) if lam is None else np.asarray(lam, dtype=float)
    return float(np.abs(shifted_legendre(k, lam) - shifted_legendre_binomial(k, lam)).max())


@dataclass(frozen=True)
class AppendixReport:
    s: int
    gbg_error: float
    similarity_error: float
    det_A: float
    det_closed_form: float
    rho_numeric: float
    rho_closed_form: float
    bAinv_e: float

    @property
    def det_rel_error(self) -> float:
        return abs(self.det_A - self.det_closed_form) / self.det_closed_form

    @property
    def rho_error(self) -> float:
        return abs(self.rho_numeric - self.rho_closed_form)

    @property
    def bAinv_e_error(self) -> float:
        return abs(self.bAinv_e - (2.0 if self.s % 2 else 0.0))

    def failures(self) -> list[str]:
        checks = {
            "det_rel": self.det_rel_error,
            "rho": self.rho_error,
            "bAinv_e": self.bAinv_e_error,
            "gbg": self.gbg_error,
            "similarity": self.similarity_error,
        }
        # NaN compares false, so it is reported as a failure too
        return [name for name, v in checks.items() if not v < TOLERANCES[name]]

    @property
    def passed(self) -> bool:
        return not self.failures()


def verify_appendix(s: int) -> AppendixReport:
    """Numeric vs closed-form values for the s-stage Gauss method."""
    s = _check(s, MAX_VERIFY_STAGES)
    tab = gauss_tableau(s)
    G = matrix_G(s)
    gbg = float(np.abs(G.T @ np.diag(tab.b) @ G - np.eye(s)).max())
    sim = float(np.abs(np.linalg.solve(G, tab.A @ G) - matrix_XG(s)).max())
    bAe = float(tab.b @ np.linalg.solve(tab.A, np.ones(s)))
    return AppendixReport(
        s=s,
        gbg_error=gbg,
        similarity_error=sim,
        det_A=det_lu(tab.A),
        det_closed_form=det_closed_form(s),
        rho_numeric=1.0 - bAe,
        rho_closed_form=float((-1) ** s),
        bAinv_e=bAe,
    )


def format_report(reports) -> str:
    head = (f"{'s':>2} {'det_A':>24} {'s!/(2s)!':>24} {'det_rel_err':>11} {'rho':>24} "
            f"{'rho_err':>9} {'bAinv_e':>24} {'GtBG_err':>9} {'sim_err':>9} status")
    lines = [head]
    for r in reports:
        status = "ok" if r.passed else "FAIL(" + ",".join(r.failures()) + ")"
        lines.append(
            f"{r.s:>2} {r.det_A:>24.17g} {r.det_closed_form:>24.17g} {r.det_rel_error:>11.3e} "
            f"{r.rho_numeric:>24.17g} {r.rho_error:>9.2e} {r.bAinv_e:>24.17g} {r.gbg_error:>9.2e} "
            f"{r.similarity_error:>9.2e} {status}"
        )
    return "\n".join(lines)
