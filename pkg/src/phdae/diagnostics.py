"""Power balance, dissipation and Dirac-structure residuals.

All checks are post-hoc over recorded steps (or run as ``on_step`` hooks
of :func:`phdae.simulation.integrate`), so the stepping loop stays lean.
The effort vector is never formed on its own: the stiffness matrix has a
constant null vector, so only the products ``K z4 = K theta + tau e5`` and
``K~_L z2 = (K~_L + Gamma~) Psi~`` enter the residuals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .collocation import StageData
from .model import FullState, GeneratorModel, ReducedState, as_model
from .pc import PCState

__all__ = [
    "PowerLedgerEntry",
    "MissingStageDataError",
    "power_terms",
    "power_terms_full",
    "stage_power",
    "step_balance",
    "discrete_dissipation_check",
    "DissipationReport",
    "PowerLedger",
    "write_ledger_csv",
    "DiracResidual",
    "dirac_membership_residual",
    "stage_vectors",
    "stage_dirac_residuals",
    "PCEnergyMonitor",
    "energy_residual_stats",
    "inequality_tolerance",
]

LEDGER_COLUMNS = ("t", "H", "supplied", "dissipated", "balance_residual")


class MissingStageDataError(ValueError):
    pass


def inequality_tolerance(H: float) -> float:
    """Per-step slack for energy inequalities."""
    return 1e-8 * max(1.0, abs(H))


@dataclass(frozen=True)
class PowerLedgerEntry:
    t: float
    H: float
    supplied: float
    dissipated: float
    balance_residual: float


# --- continuous power terms -------------------------------------------------

def power_terms(state: ReducedState, params=None) -> tuple[float, float, float]:
    """``(H, y^T u, dissipated)`` at a reduced state."""
    m = as_model(params)
    yd = np.asarray(state.psi_t_dot, dtype=float)
    om = np.asarray(state.theta_dot, dtype=float)
    supplied = float(yd @ m.source_reduced(state.t) + om @ m.T6)
    dissipated = float(yd @ (m.KR_t * yd) + om @ m.D @ om)
    return m.hamiltonian(state), supplied, dissipated


def power_terms_full(state: FullState | PCState, params=None) -> tuple[float, float, float]:
    """Same terms for the full model."""
    m = as_model(params)
    if isinstance(state, PCState):
        state = state.to_full()
    pd = np.asarray(state.psi_dot, dtype=float)
    om = np.asarray(state.theta_dot, dtype=float)
    supplied = float(pd @ m.source_full(state.t) + om @ m.T6)
    dissipated = float(pd @ m.K_R @ pd + om @ m.D @ om)
    return m.hamiltonian_full(state), supplied, dissipated


def stage_power(model: GeneratorModel, stages: StageData) -> tuple[np.ndarray, np.ndarray]:
    """Supplied and dissipated power at each collocation point."""
    Y = stages.Y
    om = stages.X[:, 4:10]
    src = model.source_reduced(stages.t)
    supplied = np.sum(Y * src, axis=1) + om @ model.T6
    dissipated = np.sum(Y * Y * model.KR_t, axis=1) + np.einsum("ij,jk,ik->i", om, model.D, om)
    return supplied, dissipated


def step_balance(model: GeneratorModel, b: np.ndarray, h: float, x0: np.ndarray, x1: np.ndarray,
                 stages: StageData) -> tuple[float, float, float, float]:
    """One step of the discrete balance.

    Returns ``(residual, dH, quad_supplied, quad_dissipated)`` where
    ``residual = dH - (quad_supplied - quad_dissipated)`` and the
    quadratures use the method's own weights.
    """
    sup, dis = stage_power(model, stages)
    qs = float(h * (b @ sup))
    qd = float(h * (b @ dis))
    H0, H1 = model.hamiltonian_x(np.stack([x0, x1]))
    dH = float(H1 - H0)
    return dH - (qs - qd), dH, qs, qd


@dataclass(frozen=True)
class DissipationReport:
    residuals: np.ndarray  # per step
    scales: np.ndarray  # per step, max(|H|, h * sum b |power|)
    max_abs: float
    max_rel: float
    violations: int  # steps with dH > quad(y^T u) + tol
    cumulative_violations: int  # frames where H - H0 > cumulative quad(y^T u) + tol


def discrete_dissipation_check(trajectory, tableau=None, h: float | None = None,
                               params=None) -> DissipationReport:
    """Per-step balance residuals of a collocation run with stage values retained."""
    recs = getattr(trajectory, "records", trajectory)
    if not recs or any(r.stages is None for r in recs):
        raise MissingStageDataError("collocation stage values were not recorded (use record_steps=True)")
    model = as_model(params if params is not None else getattr(trajectory, "model", None))
    tab = tableau if tableau is not None else trajectory.tableau
    h = float(h if h is not None else trajectory.h)
    res, scales = [], []
    viol = cviol = 0
    H0 = model.hamiltonian_x(recs[0].old.x)
    cum_sup = 0.0
    for r in recs:
        resid, dH, qs, qd = step_balance(model, tab.b, h, r.old.x, r.new.x, r.stages)
        sup, dis = stage_power(model, r.stages)
        H1 = float(model.hamiltonian_x(r.new.x))
        res.append(resid)
        scales.append(max(abs(H1), h * float(tab.b @ (np.abs(sup) + np.abs(dis)))))
        if dH > qs + inequality_tolerance(H1):
            viol += 1
        cum_sup += qs
        if H1 - H0 > cum_sup + inequality_tolerance(H1):
            cviol += 1
    res = np.array(res)
    scales = np.array(scales)
    return DissipationReport(res, scales, float(np.abs(res).max()), float(np.max(np.abs(res) / scales)),
                             viol, cviol)


class PowerLedger:
    """``on_step`` hook collecting ledger entries for a collocation run.

    ``balance_residual`` is cumulative: ``H(t) - H(t0)`` minus the
    quadrature of supplied minus dissipated power up to ``t``.
    """

    def __init__(self, model: GeneratorModel, tableau, h: float, stride: int = 1):
        self.model = model
        self.b = tableau.b
        self.h = float(h)
        self.stride = int(stride)
        self.entries: list[PowerLedgerEntry] = []
        self._acc = 0.0
        self._cum_supplied = 0.0
        self.max_cumulative_excess = -np.inf  # max of H - H0 - cumulative supplied

    def _entry(self, state: ReducedState) -> PowerLedgerEntry:
        H, sup, dis = power_terms(state, self.model)
        return PowerLedgerEntry(float(state.t), H, sup, dis, self._acc)

    def __call__(self, rec) -> None:
        if rec.stages is None:
            raise MissingStageDataError("power ledger needs collocation stage values")
        if not self.entries:
            self.entries.append(self._entry(rec.old))
            self._H0 = self.entries[0].H
        resid, dH, qs, qd = step_balance(self.model, self.b, self.h, rec.old.x, rec.new.x, rec.stages)
        self._acc += resid
        self._cum_supplied += qs
        H1 = float(self.model.hamiltonian_x(rec.new.x))
        self.max_cumulative_excess = max(self.max_cumulative_excess, H1 - self._H0 - self._cum_supplied)
        if (rec.n + 1) % self.stride == 0:
            self.entries.append(self._entry(rec.new))

    def write_csv(self, path) -> None:
        write_ledger_csv(self.entries, path)


def write_ledger_csv(entries, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LEDGER_COLUMNS)
        for e in entries:
            w.writerow([f"{getattr(e, c):.17g}" for c in LEDGER_COLUMNS])


# --- Dirac structure ----------------------------------------------------------

@dataclass(frozen=True)
class DiracResidual:
    absolute: float  # infinity norm of the 84-component kernel residual
    relative: float  # each row over the largest term size in its equation block
    rows: np.ndarray  # the 84 residual components


def _default_input(model: GeneratorModel, t: float) -> np.ndarray:
    u = np.zeros(21)
    u[0:4] = model.source_reduced(t)
    u[8:14] = model.T6
    u[20] = 1.0
    return u


_BLOCKS = ((0, 4), (4, 8), (8, 14), (14, 20), (20, 21), (21, 42))


def dirac_membership_residual(x, k, params=None, u=None) -> DiracResidual:
    """Kernel-representation residual at one collocation point.

    ``x`` is the 21-component point ``(Psi~_dot, Psi~, theta_dot, theta, t)``
    and ``k`` the matching stage derivative. The flow/effort pair is
    ``v_f = (-M k, y, (z; u))`` and ``v_e = (z, u, -Lambda (z; u))``; the
    rows reduce to ``-M k + (P - Q) z + (N - V) u``, ``y - N^T z`` and an
    identically vanishing last block. ``u`` overrides the port input.
    """
    m = as_model(params)
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    t = float(x[20])
    u = _default_input(m, t) if u is None else np.asarray(u, dtype=float)
    yd, ps, om, th = x[0:4], x[4:8], x[8:14], x[14:20]
    k2, k3, k4, k5 = k[4:8], k[8:14], k[14:20], k[20]
    KL = m.KL_t

    kl_z2 = m.magnetic_coupling_product(ps, th[4])  # K~_L z2
    tau = m.torque_reduced(ps, th[4])
    k_z4 = m.K @ th
    k_z4[4] += tau  # K z4
    absK = np.abs(m.K)

    rows = np.zeros(84)
    scale = np.zeros(84)
    # storage/port rows: -M k + (P - Q) z + (N - V) u
    rows[0:4] = -kl_z2 - m.KR_t * yd + u[0:4]
    scale[0:4] = np.abs(kl_z2) + np.abs(m.KR_t * yd) + np.abs(u[0:4])
    rows[4:8] = KL * (yd - k2) + u[4:8] * 0.0
    scale[4:8] = np.abs(KL * yd) + np.abs(KL * k2)
    rows[8:14] = -m.J_diag * k3 - k_z4 - m.D @ om + u[8:14]
    scale[8:14] = np.abs(m.J_diag * k3) + absK @ np.abs(th) + np.abs(m.D) @ np.abs(om) + np.abs(u[8:14])
    scale[12] += abs(tau)
    rows[14:20] = m.K @ (om - k4)
    scale[14:20] = absK @ np.abs(om) + absK @ np.abs(k4)
    rows[20] = u[20] - k5
    scale[20] = abs(u[20]) + abs(k5)
    # output rows y - (N + V)^T z - (S - W) u; y and N^T z share their blocks
    y = np.concatenate([yd, np.zeros(4), om, np.zeros(6), [0.0]])
    NTz = np.concatenate([yd, np.zeros(4), om, np.zeros(6), [0.0]])
    rows[21:42] = y - NTz
    scale[21:42] = np.abs(y) + np.abs(NTz)
    # rows 42:84 compare (z; u) with itself and vanish identically

    # one scale per equation block, the norm the stage solver converges in
    for lo, hi in _BLOCKS:
        scale[lo:hi] = scale[lo:hi].max()
    absr = np.abs(rows)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(absr > 0, absr / np.where(scale > 0, scale, 1.0), 0.0)
    return DiracResidual(float(absr.max()), float(rel.max()), rows)


def stage_vectors(stages: StageData, i: int) -> tuple[np.ndarray, np.ndarray]:
    """21-component collocation point and stage derivative of stage ``i``."""
    x = np.concatenate([stages.Y[i], stages.X[i], [stages.t[i]]])
    k = np.concatenate([stages.Ydot[i], stages.K[i], [1.0]])
    return x, k


def stage_dirac_residuals(stages: StageData, params=None) -> list[DiracResidual]:
    return [dirac_membership_residual(*stage_vectors(stages, i), params) for i in range(len(stages.t))]


# --- predictor-corrector energy residuals ------------------------------------

class PCEnergyMonitor:
    """``on_step`` hook: per-step energy residual of a full-model run,
    ``H_{n+1} - H_n - h/2 [(sup - dis)_n + (sup - dis)_{n+1}]``."""

    def __init__(self, model: GeneratorModel, h: float):
        self.model = model
        self.h = float(h)
        self.residuals: list[float] = []
        self.scales: list[float] = []
        self._last = None

    def _terms(self, state):
        return power_terms_full(state, self.model)

    def __call__(self, rec) -> None:
        if self._last is None or self._last[0] is not rec.old:
            self._last = (rec.old, self._terms(rec.old))
        H0, s0, d0 = self._last[1]
        terms1 = self._terms(rec.new)
        H1, s1, d1 = terms1
        self.residuals.append(H1 - H0 - 0.5 * self.h * ((s0 - d0) + (s1 - d1)))
        self.scales.append(max(abs(H1), 0.5 * self.h * (abs(s0) + abs(d0) + abs(s1) + abs(d1))))
        self._last = (rec.new, terms1)

    def stats(self) -> dict:
        return energy_residual_stats(self.residuals)


def energy_residual_stats(residuals) -> dict:
    r = np.abs(np.asarray(residuals, dtype=float))
    if r.size == 0:
        return {"mean_abs": 0.0, "rms": 0.0, "max_abs": 0.0, "n": 0}
    return {"mean_abs": float(r.mean()), "rms": float(np.sqrt(np.mean(r * r))),
            "max_abs": float(r.max()), "n": int(r.size)}
