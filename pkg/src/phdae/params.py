"""Physical parameters of the first-benchmark-model generator system.

All values are stored in SI base units (Ohm, H, V, A, rad/s, kg m^2,
N m/rad, N m). Files may carry engineering prefixes (``0.5 mOhm``,
``26 kV``); they are converted once, at load time.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

__all__ = [
    "PhysicalParams",
    "ParameterError",
    "SingularDenominatorError",
    "fbm_ssr",
    "load_params",
    "PRESETS",
]


class ParameterError(ValueError):
    """Raised for invalid or unparsable parameter sets."""


class SingularDenominatorError(ZeroDivisionError):
    """Raised when a coupling prefactor denominator vanishes."""


# threshold relative to the size of the individual terms
_DENOM_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PhysicalParams:
    R: float
    L: float
    U_s: float
    omega_s: float
    M: float
    L_r: float
    L_s: float
    M_s: float
    R_f: float
    R_q: float
    U_f: float
    J: tuple[float, ...]
    K: tuple[float, ...]
    T: tuple[float, ...]
    D: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))

    def __post_init__(self):
        object.__setattr__(self, "J", tuple(float(v) for v in self.J))
        object.__setattr__(self, "K", tuple(float(v) for v in self.K))
        object.__setattr__(self, "T", tuple(float(v) for v in self.T))
        D = np.array(self.D, dtype=float)
        D.setflags(write=False)
        object.__setattr__(self, "D", D)
        self.validate()

    def validate(self) -> None:
        if len(self.J) != 6 or len(self.K) != 5 or len(self.T) != 4:
            raise ParameterError("expected 6 inertias, 5 stiffnesses and 4 torques")
        if self.D.shape != (6, 6):
            raise ParameterError(f"friction matrix must be 6x6, got {self.D.shape}")
        positive = {
            "R": self.R, "L": self.L, "M": self.M, "L_r": self.L_r,
            "L_s": self.L_s, "M_s": self.M_s, "R_f": self.R_f, "R_q": self.R_q,
            "omega_s": self.omega_s,
        }
        positive.update({f"J_{i + 1}": v for i, v in enumerate(self.J)})
        positive.update({f"K_{i + 1}": v for i, v in enumerate(self.K)})
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value!r}")
        self.reduced_denominator  # raises if singular

    @property
    def I_f(self) -> float:
        """Constant excitation current U_f / R_f."""
        return self.U_f / self.R_f

    @property
    def full_denominator(self) -> float:
        """(3/2) M^2 - L_r (L_s + M_s), prefactor of the full coupling matrix."""
        return _checked_denominator(1.5 * self.M**2, self.L_r * (self.L_s + self.M_s))

    @property
    def reduced_denominator(self) -> float:
        """(3/2) M^2 - L_r (L_s + M_s + L), prefactor after eliminating node 2."""
        return _checked_denominator(1.5 * self.M**2, self.L_r * (self.L_s + self.M_s + self.L))

    def replace(self, **changes) -> PhysicalParams:
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _checked_denominator(a: float, b: float) -> float:
    d = a - b
    if abs(d) <= _DENOM_RTOL * max(abs(a), abs(b)):
        raise SingularDenominatorError(f"coupling denominator {a} - {b} is numerically zero")
    return d


def fbm_ssr() -> PhysicalParams:
    """The first-benchmark-model parameter set, SI units."""
    R_f = 0.1597
    return PhysicalParams(
        R=0.5e-3,
        L=0.6182e-3,
        U_s=26e3,
        omega_s=120 * math.pi,
        M=33.35e-3,
        L_r=519e-3,
        L_s=3e-3,
        M_s=0.516e-3,
        R_f=R_f,
        R_q=0.1597,
        # only I_f = U_f / R_f is published
        U_f=3212.64 * R_f,
        J=(1166.56, 1953.83, 10782.84, 11103.62, 10906.22, 429.68),
        K=(45692300.27, 82680741.64, 123179605.30, 167728592.0, 6679980.902),
        T=(601469.26, 521273.35, 441077.45, 441077.45),
    )


PRESETS = {"fbm-ssr": fbm_ssr}


# --- key-value file loading -------------------------------------------------

_UNITS = {
    "": 1.0,
    "ohm": 1.0, "mohm": 1e-3, "kohm": 1e3,
    "h": 1.0, "mh": 1e-3, "uh": 1e-6,
    "v": 1.0, "kv": 1e3, "mv": 1e-3,
    "a": 1.0, "ka": 1e3,
    "rad/s": 1.0, "hz": 2 * math.pi,
    "s": 1.0, "ms": 1e-3,
    "kg*m^2": 1.0, "kgm2": 1.0,
    "n*m/rad": 1.0, "nm/rad": 1.0,
    "n*m": 1.0, "nm": 1.0,
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")

# section -> accepted keys
_SCHEMA = {
    "electrical": {"R", "L", "M", "L_r", "L_s", "M_s", "R_f", "R_q"},
    "mechanical": {f"J_{i}" for i in range(1, 7)}
    | {f"K_{i}" for i in range(1, 6)}
    | {f"T_{i}" for i in range(1, 5)}
    | {f"D_{i}" for i in range(1, 7)},
    "source": {"U_s", "omega_s", "U_f", "I_f"},
}


def parse_quantity(text: str) -> float:
    """Parse ``"0.6182 mH"`` style values into SI floats.

    ``pi`` multiples such as ``120pi`` are accepted for angular frequencies.
    """
    s = text.strip()
    m = re.fullmatch(r"([-+]?[\d.eE+-]*)\s*\*?\s*pi\s*(rad/s)?", s, flags=re.IGNORECASE)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    m = _NUMBER.match(s)
    if not m:
        raise ParameterError(f"cannot parse quantity {text!r}")
    unit = m.group(2).lower().replace(" ", "")
    if unit not in _UNITS:
        raise ParameterError(f"unknown unit {m.group(2)!r} in {text!r}")
    return float(m.group(1)) * _UNITS[unit]


def load_params(source: str | Path) -> PhysicalParams:
    """Load a preset name or an INI-style file with ``[electrical]``,
    ``[mechanical]`` and ``[source]`` sections.

    Keys missing from the file fall back to the ``fbm-ssr`` preset, so a file
    may override only a handful of values. The friction matrix is diagonal
    when given through ``D_1..D_6``.
    """
    if str(source) in PRESETS:
        return PRESETS[str(source)]()
    path = Path(source)
    if not path.is_file():
        raise ParameterError(f"unknown preset or missing file: {source}")

    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep key case
    try:
        cp.read_string(path.read_text())
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc}") from exc

    base = fbm_ssr()
    values: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ParameterError(f"{path}: unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ParameterError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = parse_quantity(raw)

    J = [values.pop(f"J_{i}", base.J[i - 1]) for i in range(1, 7)]
    K = [values.pop(f"K_{i}", base.K[i - 1]) for i in range(1, 6)]
    T = [values.pop(f"T_{i}", base.T[i - 1]) for i in range(1, 5)]
    d = [values.pop(f"D_{i}", 0.0) for i in range(1, 7)]
    I_f = values.pop("I_f", None)
    kwargs = {k: values.get(k, getattr(base, k)) for k in (
        "R", "L", "U_s", "omega_s", "M", "L_r", "L_s", "M_s", "R_f", "R_q", "U_f")}
    if I_f is not None:
        if "U_f" in values:
            raise ParameterError(f"{path}: give either U_f or I_f, not both")
        kwargs["U_f"] = I_f * kwargs["R_f"]
    return PhysicalParams(J=J, K=K, T=T, D=np.diag(d), **kwargs)
