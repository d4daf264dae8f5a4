"""CSV emission and parsing of trajectory frames.

Numbers are written with 17 significant digits, which round-trips every
double exactly.
"""

from __future__ import annotations

import csv
from typing import IO, Iterable

import numpy as np

from .simulation import TrajectoryFrame

__all__ = ["frame_columns", "write_frames", "read_frames", "FrameWriter", "fmt"]


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def frame_columns(reduced: bool) -> list[str]:
    cols = ["t"]
    cols += [f"omega_{i}" for i in range(1, 7)]
    cols += [f"omega_err_{i}" for i in range(1, 7)]
    cols += [f"theta_{i}" for i in range(1, 7)]
    if reduced:
        cols += ["psi_1a", "psi_1b", "psi_f", "psi_q"]
    else:
        cols += ["psi_1a", "psi_1b", "psi_2a", "psi_2b", "psi_f", "psi_q"]
    cols += ["H", "constraint_norm"]
    return cols


def _row(fr: TrajectoryFrame) -> list[str]:
    vals = [fr.t, *fr.omega, *fr.omega_err, *fr.theta, *fr.psi, fr.H, fr.constraint_norm]
    return [fmt(v) for v in vals]


class FrameWriter:
    """Streaming sink: writes the header on the first frame."""

    def __init__(self, fh: IO[str]):
        self._w = csv.writer(fh, lineterminator="\n")
        self._cols: list[str] | None = None

    def __call__(self, frame: TrajectoryFrame) -> None:
        cols = frame_columns(frame.reduced)
        if self._cols is None:
            self._cols = cols
            self._w.writerow(cols)
        elif cols != self._cols:
            raise ValueError("frame schema changed within one run")
        self._w.writerow(_row(frame))


def write_frames(frames: Iterable[TrajectoryFrame], fh: IO[str]) -> None:
    w = FrameWriter(fh)
    for fr in frames:
        w(fr)


def read_frames(fh: IO[str]) -> list[TrajectoryFrame]:
    reader = csv.reader(fh)
    header = next(reader)
    reduced = "psi_2a" not in header
    if header != frame_columns(reduced):
        raise ValueError(f"unexpected CSV header: {header}")
    npsi = 4 if reduced else 6
    out = []
    for row in reader:
        v = np.array([float(x) for x in row])
        o = 1
        om, err, th = v[o:o + 6], v[o + 6:o + 12], v[o + 12:o + 18]
        psi = v[o + 18:o + 18 + npsi]
        out.append(TrajectoryFrame(float(v[0]), om.copy(), err.copy(), th.copy(), psi.copy(),
                                   float(v[-2]), float(v[-1])))
    return out
