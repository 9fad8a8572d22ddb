"""Scaling fits: logarithmic slopes, exponential relaxation tails, and
finite-size collapse scans over the dynamical exponent z.

Conventions: temporal log fits exclude t < 4 and the final quarter of the
recorded window (transient and saturation); spatial fits use the chord
length x = (L/pi) sin(l pi / L) on l in [4, L/2]. These windows are
defaults, overridable per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError


@dataclass
class FitResult:
    slope: float
    intercept: float
    residual: float  # RMS of fit residuals
    window: tuple

    def __iter__(self):
        return iter((self.slope, self.intercept))


def chord_length(ell, L: int):
    """Conformal scaling variable for a cut at l in a chain of length L."""
    ell = np.asarray(ell, dtype=float)
    return (L / np.pi) * np.sin(ell * np.pi / L)


def _apply_window(x, y, window):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (x >= lo) & (x <= hi)
        x, y = x[keep], y[keep]
    return x, y


def fit_log_slope(x, y, window=None) -> FitResult:
    """Least squares y = slope * log(x) + intercept over the window."""
    x, y = _apply_window(x, y, window)
    keep = x > 0
    x, y = x[keep], y[keep]
    if x.size < 4:
        raise FitError(f"need >= 4 positive-x points, have {x.size}")
    lx = np.log(x)
    if np.ptp(lx) < 1e-12:
        raise FitError("all x equal; slope undetermined")
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    win = (float(x.min()), float(x.max()))
    return FitResult(float(coef[0]), float(coef[1]),
                     float(np.sqrt(np.mean(resid**2))), win)


def fit_linear(x, y, window=None) -> FitResult:
    """Plain least squares y = slope * x + intercept (comparison baseline)."""
    x, y = _apply_window(x, y, window)
    if x.size < 4:
        raise FitError(f"need >= 4 points, have {x.size}")
    if np.ptp(x) < 1e-12:
        raise FitError("all x equal; slope undetermined")
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult(float(coef[0]), float(coef[1]),
                     float(np.sqrt(np.mean(resid**2))),
                     (float(x.min()), float(x.max())))


def fit_exponential_tail(tau, delta, window=None) -> FitResult:
    """Fit log(delta) = -slope * tau + intercept; slope is the decay rate.

    Nonpositive delta points are dropped before fitting.
    """
    tau, delta = _apply_window(tau, delta, window)
    keep = delta > 0
    tau, delta = tau[keep], delta[keep]
    if tau.size < 4:
        raise FitError(f"need >= 4 positive points, have {tau.size}")
    if np.ptp(tau) < 1e-12:
        raise FitError("all tau equal; slope undetermined")
    design = np.column_stack([tau, np.ones_like(tau)])
    coef, *_ = np.linalg.lstsq(design, np.log(delta), rcond=None)
    resid = np.log(delta) - design @ coef
    return FitResult(float(-coef[0]), float(coef[1]),
                     float(np.sqrt(np.mean(resid**2))),
                     (float(tau.min()), float(tau.max())))


@dataclass
class RelaxationCurve:
    tau: np.ndarray
    delta: np.ndarray
    s_inf: float
    warn: bool  # set when the "auto" plateau estimate looks unstable


def _extract_series(table, observable, cut=None, L=None):
    pts = {}
    for row in table:
        if row["observable"] != observable:
            continue
        if cut is not None and row["cut"] != cut:
            continue
        if L is not None and row["L"] != L:
            continue
        pts[row["t"]] = row["value"]
    ts = np.array(sorted(pts))
    return ts, np.array([pts[t] for t in ts])


def relaxation_curve(table, observable, L: int, z: float, s_inf="auto",
                     cut=None) -> RelaxationCurve:
    """delta S(tau) = |S(t) - S(inf)| against tau = t / L^z.

    s_inf = "auto" estimates the plateau as the mean over the final 10%
    of recorded times and flags the curve when that tail is not flat
    (relative spread above 10%).
    """
    ts, vals = _extract_series(table, observable, cut=cut, L=L)
    if ts.size == 0:
        raise FitError(f"no rows for observable {observable!r}")
    warn = False
    if s_inf == "auto":
        tail = vals[ts >= ts[-1] - 0.1 * (ts[-1] - ts[0])]
        s_inf = float(np.mean(tail))
        spread = np.ptp(tail)
        if s_inf != 0 and spread / abs(s_inf) > 0.1:
            warn = True
    delta = np.abs(vals - float(s_inf))
    tau = ts / float(L) ** z
    return RelaxationCurve(tau, delta, float(s_inf), warn)


def drop_plateau_window(tau, delta, fraction: float = 0.1):
    """Remove the final `fraction` of the time range.

    The auto plateau estimate averages over this window, so its points
    measure only the subtraction residual, not the relaxation."""
    tau = np.asarray(tau, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if tau.size == 0:
        return tau, delta
    keep = tau < tau[-1] - fraction * (tau[-1] - tau[0])
    return tau[keep], delta[keep]


def trim_saturated(tau, delta, floor: float = 1e-2):
    """Drop the saturated tail of a relaxation curve.

    Points with delta below floor * max(delta) carry only plateau noise
    and would dominate log-space fits and collapse distances.
    """
    tau = np.asarray(tau, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if delta.size == 0:
        return tau, delta
    keep = delta > floor * delta.max()
    return tau[keep], delta[keep]


def scan_collapse_z(curves, z_grid) -> dict:
    """Collapse quality over a grid of dynamical exponents.

    curves: {L: (t, delta)} relaxation data per system size. For each z
    the curves are rescaled to tau = t / L^z and the quality is the mean
    squared vertical log-log distance between each pair of curves,
    interpolated on their overlapping tau range. Returns
    {"best_z": argmin, "quality": {z: value}}.
    """
    if len(curves) < 2:
        raise FitError("collapse needs at least two system sizes")
    quality = {}
    for z in z_grid:
        z = float(z)
        logs = {}
        for L, (ts, ds) in curves.items():
            ts = np.asarray(ts, dtype=float)
            ds = np.asarray(ds, dtype=float)
            keep = (ts > 0) & (ds > 0)
            tau = np.log(ts[keep] / float(L) ** z)
            logs[L] = (tau, np.log(ds[keep]))
        sizes = sorted(logs)
        sq, cnt = 0.0, 0
        for i, la in enumerate(sizes):
            for lb in sizes[i + 1:]:
                xa, ya = logs[la]
                xb, yb = logs[lb]
                if xa.size < 2 or xb.size < 2:
                    continue
                lo = max(xa.min(), xb.min())
                hi = min(xa.max(), xb.max())
                grid = xa[(xa >= lo) & (xa <= hi)]
                if grid.size < 2:
                    continue
                ya_g = np.interp(grid, xa, ya)
                yb_g = np.interp(grid, xb, yb)
                sq += float(np.sum((ya_g - yb_g) ** 2))
                cnt += grid.size
        quality[z] = sq / cnt if cnt else float("inf")
    if all(q == float("inf") for q in quality.values()):
        raise FitError("no overlapping data between curves on the z grid")
    best_z = min(quality, key=lambda z: quality[z])
    return {"best_z": best_z, "quality": quality}
