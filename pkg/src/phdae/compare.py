"""Frame-by-frame discrepancies between two runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import as_model
from .simulation import TrajectoryFrame

__all__ = ["SchemaMismatchError", "Comparison", "compare_runs", "shared_coordinates", "METRICS",
           "error_trend_slope"]

METRICS = ("omega", "state", "flux")


class SchemaMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Comparison:
    t: np.ndarray
    discrepancy: np.ndarray
    metric: str

    @property
    def max(self) -> float:
        return float(self.discrepancy.max()) if self.discrepancy.size else 0.0

    @property
    def mean(self) -> float:
        return float(self.discrepancy.mean()) if self.discrepancy.size else 0.0


def shared_coordinates(frame: TrajectoryFrame, params=None) -> dict:
    """omega, theta and the six fluxes; node-2 fluxes of reduced frames are
    reconstructed from the elimination formula."""
    if frame.reduced:
        p2a, p2b = as_model(params).reconstruct_eliminated_flux(frame.psi, frame.theta[4])
        pt = frame.psi
        psi = np.array([pt[0], pt[1], p2a, p2b, pt[2], pt[3]])
    else:
        psi = frame.psi
    return {"omega": frame.omega, "theta": frame.theta, "psi": psi}


def compare_runs(frames_a, frames_b, metric: str = "omega", params=None) -> Comparison:
    """Infinity-norm discrepancy per frame on the shared coordinates."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    frames_a = getattr(frames_a, "frames", frames_a)
    frames_b = getattr(frames_b, "frames", frames_b)
    if len(frames_a) != len(frames_b):
        raise SchemaMismatchError(f"runs have {len(frames_a)} and {len(frames_b)} frames")
    t = np.array([f.t for f in frames_a])
    tb = np.array([f.t for f in frames_b])
    if not np.allclose(t, tb, rtol=1e-12, atol=1e-12):
        raise SchemaMismatchError("frame times differ between the runs")
    model = as_model(params)
    out = np.empty(len(t))
    for i, (fa, fb) in enumerate(zip(frames_a, frames_b)):
        ca, cb = shared_coordinates(fa, model), shared_coordinates(fb, model)
        if metric == "omega":
            d = np.abs(ca["omega"] - cb["omega"]).max()
        elif metric == "flux":
            d = np.abs(ca["psi"] - cb["psi"]).max()
        else:
            d = max(np.abs(ca[k] - cb[k]).max() for k in ca)
        out[i] = d
    return Comparison(t, out, metric)


def error_trend_slope(t, err, t_min: float = 5.0, window: float = 0.5) -> float:
    """Slope of log(window maximum of err) against t for t > t_min.

    The envelope (window maxima) is fitted rather than raw samples so that
    zero crossings of an oscillating error do not dominate the fit.
    """
    t = np.asarray(t, dtype=float)
    err = np.asarray(err, dtype=float)
    if err.ndim > 1:
        err = np.abs(err).max(axis=1)
    sel = t > t_min
    t, err = t[sel], np.abs(err[sel])
    if t.size < 2:
        raise ValueError("not enough samples after t_min")
    edges = np.arange(t_min, t.max() + window, window)
    mids, peaks = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t > lo) & (t <= hi)
        if m.any() and err[m].max() > 0:
            mids.append(0.5 * (lo + hi))
            peaks.append(err[m].max())
    if len(mids) < 2:
        raise ValueError("not enough windows to fit a trend")
    return float(np.polyfit(mids, np.log(peaks), 1)[0])
