"""Initial states: the published benchmark values and key-value files.

The published values are rounded to four decimals, so they satisfy the
algebraic constraints only to about 1e-8 relative. ``consistent=True``
replaces the derivative blocks by the values the constraints imply.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

import numpy as np

from .model import FullState, ReducedState, as_model, make_consistent, reduced_to_full

__all__ = [
    "InitialStateError",
    "benchmark_full_state",
    "benchmark_reduced_state",
    "load_initial_state",
    "BUILTIN_ICS",
]

BUILTIN_ICS = ("paper-ics",)

_PSI_DOT0 = (26014.5269, 1.9571, 25102.2884, 6773.1172, 0.0, 0.0)
_PSI0 = (0.0052, -69.0057, 17.9663, -66.5859, 645.4103, -624.0651)
_THETA0 = (-0.3629, -0.3761, -0.3897, -0.4024, -0.4143, -0.4143)
_PSI_T_DOT0 = (26014.5269, 1.9571, 0.0, 0.0)
_PSI_T0 = (0.0052, -69.0057, 645.4103, -624.0651)


class InitialStateError(ValueError):
    pass


def _omega0() -> np.ndarray:
    return np.full(6, 120 * math.pi)


def benchmark_full_state() -> FullState:
    """The published 24-component initial state at t = 0."""
    return FullState(np.array(_PSI_DOT0), np.array(_PSI0), _omega0(), np.array(_THETA0), 0.0)


def benchmark_reduced_state() -> ReducedState:
    """The published reduced initial state at t = 0."""
    return ReducedState(np.array(_PSI_T_DOT0), np.array(_PSI_T0), _omega0(), np.array(_THETA0), 0.0)


def _vector(cp: configparser.ConfigParser, key: str, n: int, path) -> np.ndarray | None:
    if not cp.has_option("state", key):
        return None
    raw = cp.get("state", key).replace(",", " ").split()
    try:
        vals = np.array([float(eval_token(v)) for v in raw])
    except ValueError as exc:
        raise InitialStateError(f"{path}: cannot parse {key}: {exc}") from exc
    if vals.shape != (n,):
        raise InitialStateError(f"{path}: {key} needs {n} values, got {vals.size}")
    return vals


def eval_token(tok: str) -> float:
    """Float, or a multiple of pi such as ``120pi``."""
    tok = tok.strip()
    if tok.lower().endswith("pi"):
        coef = tok[:-2].rstrip("*")
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(tok)


def load_initial_state(source: str | Path = "paper-ics", params=None, consistent: bool = False):
    """Return ``(FullState, ReducedState)``.

    ``source`` is ``paper-ics`` or an INI file with a ``[state]`` section
    holding ``t``, ``theta_dot`` (6), ``theta`` (6) and either the reduced
    pair ``psi_t_dot``/``psi_t`` (4 each) or the full pair
    ``psi_dot``/``psi`` (6 each). A missing form is derived from the other.
    With ``consistent=True`` the derivative blocks are recomputed from the
    constraints and the full state is the embedding of the reduced one.
    """
    model = as_model(params)
    if str(source) == "paper-ics":
        full, red = benchmark_full_state(), benchmark_reduced_state()
    else:
        path = Path(source)
        if not path.is_file():
            raise InitialStateError(f"unknown initial state or missing file: {source}")
        cp = configparser.ConfigParser()
        try:
            cp.read_string(path.read_text())
        except configparser.Error as exc:
            raise InitialStateError(f"{path}: {exc}") from exc
        if not cp.has_section("state"):
            raise InitialStateError(f"{path}: missing [state] section")
        t = float(cp.get("state", "t", fallback="0"))
        om = _vector(cp, "theta_dot", 6, path)
        th = _vector(cp, "theta", 6, path)
        if om is None or th is None:
            raise InitialStateError(f"{path}: theta_dot and theta are required")
        pd, ps = _vector(cp, "psi_dot", 6, path), _vector(cp, "psi", 6, path)
        ptd, pt = _vector(cp, "psi_t_dot", 4, path), _vector(cp, "psi_t", 4, path)
        if (pd is None) != (ps is None) or (ptd is None) != (pt is None):
            raise InitialStateError(f"{path}: flux values and their derivatives come in pairs")
        if pd is None and ptd is None:
            raise InitialStateError(f"{path}: no flux values given")
        red = ReducedState(ptd, pt, om, th, t) if pt is not None else None
        full = FullState(pd, ps, om, th, t) if ps is not None else None
        if red is None:
            idx = [0, 1, 4, 5]
            red = ReducedState(pd[idx], ps[idx], om, th, t)
        if full is None:
            full = reduced_to_full(red, model)
    if consistent:
        red = make_consistent(red, model)
        full = reduced_to_full(red, model)
    return full, red
