"""Shifted Legendre polynomials and collocation Butcher tableaus."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_STAGES",
    "ButcherTableau",
    "UnsupportedStagesError",
    "shifted_legendre",
    "shifted_legendre_binomial",
    "shifted_legendre_roots",
    "collocation_tableau",
    "gauss_tableau",
    "format_tableau",
]

MAX_STAGES = 12


class UnsupportedStagesError(ValueError):
    pass


def _check_stages(s: int, smax: int = MAX_STAGES) -> int:
    if int(s) != s or not 1 <= s <= smax:
        raise UnsupportedStagesError(f"stage count must be an integer in [1, {smax}], got {s!r}")
    return int(s)


def shifted_legendre(k: int, lam, derivative: bool = False):
    """Normalised shifted Legendre polynomial P_k on [0, 1].

    Normalised so that the integral of P_k^2 over [0, 1] is one. Evaluated
    with the three-term recurrence of the standard Legendre polynomials at
    ``x = 2*lam - 1``. With ``derivative=True`` returns ``(P_k, dP_k/dlam)``.
    """
    x = 2.0 * np.asarray(lam, dtype=float) - 1.0
    p_prev, p = np.zeros_like(x), np.ones_like(x)
    dp_prev, dp = np.zeros_like(x), np.zeros_like(x)
    for n in range(k):
        p_next = ((2 * n + 1) * x * p - n * p_prev) / (n + 1)
        # P'_{n+1} = P'_{n-1} + (2n+1) P_n
        dp_next = dp_prev + (2 * n + 1) * p
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    norm = math.sqrt(2 * k + 1)
    if derivative:
        return norm * p, 2.0 * norm * dp
    return norm * p


def shifted_legendre_binomial(k: int, lam):
    """Explicit binomial-sum form of P_k; cancels badly for large k."""
    lam = np.asarray(lam, dtype=float)
    total = np.zeros_like(lam)
    for m in range(k + 1):
        total = total + (-1) ** (m + k) * math.comb(k, m) * math.comb(m + k, m) * lam**m
    return math.sqrt(2 * k + 1) * total


def shifted_legendre_roots(s: int) -> np.ndarray:
    """Zeros of the s-th shifted Legendre polynomial, ascending in (0, 1).

    Eigenvalues of the symmetric Jacobi matrix of the Legendre recurrence,
    mapped to [0, 1], then one Newton correction on P_s.
    """
    s = _check_stages(s)
    k = np.arange(1, s)
    beta = k / np.sqrt(4.0 * k**2 - 1.0)
    jacobi = np.diag(beta, 1) + np.diag(beta, -1)
    x = np.linalg.eigvalsh(jacobi)
    gamma = 0.5 * (x + 1.0)
    p, dp = shifted_legendre(s, gamma, derivative=True)
    gamma = gamma - p / dp
    # restore exact symmetry about 1/2
    gamma = 0.5 * (gamma + (1.0 - gamma[::-1]))
    return np.sort(gamma)


def _lagrange_integrals(nodes: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """out[i, j] = integral of the j-th Lagrange basis polynomial over [0, upper[i]]."""
    s = len(nodes)
    # Gauss-Legendre rule from numpy integrates degree s-1 exactly
    qx, qw = np.polynomial.legendre.leggauss(max(s, 1))
    out = np.empty((len(upper), s))
    for i, u in enumerate(upper):
        tau = 0.5 * u * (qx + 1.0)
        w = 0.5 * u * qw
        for j in range(s):
            ell = np.ones_like(tau)
            for m in range(s):
                if m != j:
                    ell *= (tau - nodes[m]) / (nodes[j] - nodes[m])
            out[i, j] = w @ ell
    return out


@dataclass(frozen=True)
class ButcherTableau:
    s: int
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    A_inv: np.ndarray
    rho: float
    order: int
    name: str = "collocation"

    @property
    def b_A_inv(self) -> np.ndarray:
        """Row vector b^T A^-1, used to update the algebraic variables."""
        return self.b @ self.A_inv

    @property
    def b_A_inv_e(self) -> float:
        return float(self.b @ self.A_inv @ np.ones(self.s))


def collocation_tableau(nodes, order: int | None = None, name: str = "collocation") -> ButcherTableau:
    """Collocation method for distinct nodes in [0, 1]:
    a_ij = int_0^{c_i} l_j,  b_i = int_0^1 l_i."""
    c = np.asarray(nodes, dtype=float)
    s = len(c)
    if s == 0 or len(np.unique(c)) != s:
        raise ValueError("collocation nodes must be distinct and non-empty")
    A = _lagrange_integrals(c, c)
    b = _lagrange_integrals(c, np.array([1.0]))[0]
    A_inv = np.linalg.inv(A)
    rho = 1.0 - float(b @ A_inv @ np.ones(s))
    for arr in (c, A, b, A_inv):
        arr.setflags(write=False)
    return ButcherTableau(s, c, A, b, A_inv, rho, s if order is None else order, name)


def gauss_tableau(s: int) -> ButcherTableau:
    """s-stage Gauss method (order 2s)."""
    s = _check_stages(s)
    return collocation_tableau(shifted_legendre_roots(s), order=2 * s, name=f"gauss{s}")


def format_tableau(tab: ButcherTableau, digits: int = 17) -> str:
    """Plain-text tableau: one ``c_i | a_i1 ... a_is`` row per stage, then ``| b``."""
    fmt = f"{{:+.{digits - 1}e}}"
    lines = [f"# {tab.name}: s={tab.s} order={tab.order} rho={fmt.format(tab.rho)}"]
    for i in range(tab.s):
        row = " ".join(fmt.format(v) for v in tab.A[i])
        lines.append(f"{fmt.format(tab.c[i])} | {row}")
    pad = " " * len(fmt.format(0.0))
    lines.append(f"{pad} | " + " ".join(fmt.format(v) for v in tab.b))
    return "\n".join(lines)
