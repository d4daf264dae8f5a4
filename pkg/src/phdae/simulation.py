"""Fixed-step trajectory driver shared by all integrators."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .collocation import GaussOptions, GaussStepper, constraint_scale
from .model import FullState, GeneratorModel, ReducedState, as_model, full_to_reduced, reduced_to_full
from .pc import PCState, PCStepper
from .tableau import MAX_STAGES, ButcherTableau, UnsupportedStagesError, gauss_tableau

__all__ = [
    "Method",
    "parse_method",
    "TrajectoryFrame",
    "StepRecord",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "steps_for",
    "make_frame",
]

OMEGA_SYNC = 120 * math.pi


class IntegrationError(RuntimeError):
    """A stepper failed; carries the step index and time of the failure."""

    def __init__(self, message: str, step: int, t: float):
        super().__init__(message)
        self.step = step
        self.t = t


@dataclass(frozen=True)
class Method:
    kind: str  # "pc1", "pc2" or "gauss"
    stages: int = 0

    @property
    def reduced(self) -> bool:
        return self.kind == "gauss"

    def __str__(self) -> str:
        return f"gauss:{self.stages}" if self.kind == "gauss" else self.kind


_GAUSS = re.compile(r"^gauss[:(]?\s*(\d+)\s*\)?$")


def parse_method(spec: str | Method) -> Method:
    """``pc1``, ``pc2``, ``gauss:S`` or ``gauss(S)``."""
    if isinstance(spec, Method):
        return spec
    text = str(spec).strip().lower()
    if text in ("pc1", "pc2"):
        return Method(text)
    m = _GAUSS.match(text)
    if not m:
        raise ValueError(f"unknown method {spec!r}; expected pc1, pc2 or gauss:S")
    s = int(m.group(1))
    if not 1 <= s <= MAX_STAGES:
        raise UnsupportedStagesError(f"stage count must be in [1, {MAX_STAGES}], got {s}")
    return Method("gauss", s)


@dataclass(frozen=True)
class TrajectoryFrame:
    """One output record.

    ``psi`` holds the four reduced fluxes for collocation runs and all six
    fluxes for predictor-corrector runs. ``constraint_norm`` is the largest
    algebraic-constraint residual relative to its largest term.
    """

    t: float
    omega: np.ndarray
    omega_err: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    H: float
    constraint_norm: float

    @property
    def reduced(self) -> bool:
        return self.psi.shape[0] == 4


@dataclass(frozen=True)
class StepRecord:
    """Both end points of one step plus solver details."""

    n: int
    old: object
    new: object
    info: object  # GaussStepReport or PCStepReport
    stages: object = None  # StageData for collocation steps


@dataclass
class Trajectory:
    method: Method
    h: float
    model: GeneratorModel
    frames: list = field(default_factory=list)
    records: list = field(default_factory=list)
    final_state: object = None
    n_steps: int = 0
    max_constraint: float = 0.0
    newton_iterations: int = 0
    tableau: ButcherTableau | None = None

    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.frames])

    def omega_err(self) -> np.ndarray:
        return np.array([f.omega_err for f in self.frames])


def steps_for(t_end: float, h: float, t0: float = 0.0) -> int:
    """Number of steps of size h covering [t0, t_end]; h must divide the span."""
    span = t_end - t0
    if not (h > 0 and span > 0):
        raise ValueError(f"need h > 0 and t_end > t0, got h={float(h):g}, span={float(span):g}")
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > 1e-9 * span:
        raise ValueError(f"step size {float(h):g} does not divide the interval length {float(span):g}")
    return n


def _full_constraint_norm(model: GeneratorModel, state: FullState) -> float:
    r = model.full_consistency_residual(state)
    terms = np.concatenate([np.abs(model.K_R @ state.psi_dot),
                            np.abs((model.K_L + model.gamma_full(state.theta[4])) @ state.psi),
                            np.abs(model.source_full(state.t))])
    return float(np.abs(r).max() / max(terms.max(), np.finfo(float).tiny))


def make_frame(model: GeneratorModel, state, constraint: float | None = None) -> TrajectoryFrame:
    if isinstance(state, PCState):
        state = state.to_full()
    om = np.array(state.theta_dot, dtype=float)
    th = np.array(state.theta, dtype=float)
    if isinstance(state, ReducedState):
        psi = np.array(state.psi_t, dtype=float)
        H = model.hamiltonian(state)
        if constraint is None:
            g = model.dae_constraint(state.t, state.x, state.y)
            constraint = float(np.abs(g).max() / max(constraint_scale(model, state.t, state.x, state.y),
                                                     np.finfo(float).tiny))
    else:
        psi = np.array(state.psi, dtype=float)
        H = model.hamiltonian_full(state)
        if constraint is None:
            constraint = _full_constraint_norm(model, state)
    return TrajectoryFrame(float(state.t), om, om - OMEGA_SYNC, th, psi, float(H), float(constraint))


def _coerce_state(state0, method: Method, model: GeneratorModel):
    if method.reduced:
        if isinstance(state0, PCState):
            state0 = state0.to_full()
        if isinstance(state0, FullState):
            state0 = full_to_reduced(state0)
        if not isinstance(state0, ReducedState):
            raise TypeError(f"cannot start {method} from {type(state0).__name__}")
        return state0
    if isinstance(state0, ReducedState):
        state0 = reduced_to_full(state0, model)
    if isinstance(state0, FullState):
        state0 = PCState.from_full(state0)
    if not isinstance(state0, PCState):
        raise TypeError(f"cannot start {method} from {type(state0).__name__}")
    return state0


def integrate(state0, h: float, n_steps: int, method: str | Method = "gauss:1", sink: Callable | None = None,
              stride: int = 1, params=None, opts: GaussOptions | None = None, record_steps: bool = False,
              on_step: Callable | Iterable[Callable] | None = None, keep_frames: bool = True) -> Trajectory:
    """Advance ``state0`` by ``n_steps`` fixed steps of size ``h``.

    A frame is emitted for the initial state, after every ``stride`` steps
    and after the final step. Frames go to ``sink(frame)`` when given and
    are also kept on the returned trajectory unless ``keep_frames=False``.
    ``on_step(record)`` hooks see every step; ``record_steps`` keeps them.

    Collocation runs check consistency of the initial state only; later
    states carry the method's own algebraic error by design.
    """
    method = parse_method(method)
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps!r}")
    if int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride!r}")
    model = as_model(params)
    state = _coerce_state(state0, method, model)
    t0 = float(state.t)
    hooks = [] if on_step is None else ([on_step] if callable(on_step) else list(on_step))

    traj = Trajectory(method, float(h), model)
    if method.reduced:
        tab = gauss_tableau(method.stages)
        traj.tableau = tab
        stepper = GaussStepper(model, tab, h, opts)
        carry = np.zeros(16)

        def advance(st, n):
            new, rep, stages = stepper.step(st, check_consistency=(n == 0 and stepper.opts.check_consistency),
                                            carry=carry)
            return new, rep, stages
    else:
        stepper = PCStepper(model, h, trapezoid=(method.kind == "pc2"))

        def advance(st, n):
            new, rep = stepper.step(st, n)
            return new, rep, None

    def emit(st, constraint=None):
        frame = make_frame(model, st, constraint)
        if sink is not None:
            sink(frame)
        if keep_frames:
            traj.frames.append(frame)
        return frame

    first = emit(state)
    traj.max_constraint = first.constraint_norm
    for n in range(int(n_steps)):
        try:
            new, rep, stages = advance(state, n)
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise IntegrationError(f"{method} failed at step {n} (t={state.t:.9g}): {exc}", n, state.t) from exc
        # exact time stamps avoid drift from repeated addition
        new = replace(new, t=t0 + (n + 1) * h)
        arr = new.as_vector() if isinstance(new, ReducedState) else np.concatenate([new.x_E, new.x_M])
        if not np.all(np.isfinite(arr)):
            raise IntegrationError(f"{method} produced a non-finite state at step {n}", n, new.t)
        if method.reduced:
            traj.newton_iterations += rep.newton_iterations
            traj.max_constraint = max(traj.max_constraint, rep.constraint_residual)
        if hooks or record_steps:
            rec = StepRecord(n, state, new, rep, stages)
            for hook in hooks:
                hook(rec)
            if record_steps:
                traj.records.append(rec)
        state = new
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            fr = emit(state, rep.constraint_residual if method.reduced else None)
            if not method.reduced:
                traj.max_constraint = max(traj.max_constraint, fr.constraint_norm)
    traj.final_state = state
    traj.n_steps = int(n_steps)
    return traj
