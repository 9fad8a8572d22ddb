"""Figure renderers for simulation result tables.

Each figure kind is a pure function of (table rows, job params): the same
input bytes and parameters always produce the same image.  No fitting
happens here — guide lines use slopes passed in by the caller, and the
only numerics are the coordinate transforms needed for display (chord
abscissa, t / L^z rescaling, plateau subtraction using the last recorded
time per size).

Slopes of log-axis guide lines are in nats per natural-log unit of the
abscissa, matching the units of the simulation CSVs and of the fit CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi, sin

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .schema import SchemaError, read_table, select  # noqa: E402

FIGURE_KINDS = (
    "spatial_log",
    "temporal_log",
    "collapse_loglog",
    "collapse_semilog",
    "phase_scan",
)

# Deterministic output: fixed style, fixed SVG id salt, no embedded dates.
_STYLE = {
    "figure.figsize": (5.2, 3.9),
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 4,
    "legend.fontsize": 8,
    "svg.hashsalt": "analysis-plots",
}

_OBSERVABLE_LABELS = {
    "ee": "entanglement entropy",
    "sre1": "stabilizer Renyi entropy (n=1)",
    "sre2": "stabilizer Renyi entropy (n=2)",
    "pe": "participation entropy",
    "bsmi": "bipartite magic mutual information",
    "bpmi": "bipartite participation mutual information",
}


@dataclass
class PlotJob:
    input_csv: str
    figure_kind: str
    output: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.figure_kind!r}; "
                f"choose from {', '.join(FIGURE_KINDS)}")


def chord_length(ell: int, L: int) -> float:
    """Chord abscissa (L/pi) sin(pi ell / L) for spatial scaling plots."""
    return L / pi * sin(pi * ell / L)


def _label(observable):
    return _OBSERVABLE_LABELS.get(observable, observable)


def _group_by_size(rows):
    sizes = {}
    for r in rows:
        sizes.setdefault(r["L"], []).append(r)
    return dict(sorted(sizes.items()))


def _time_series(rows):
    """(t, value, stderr) arrays sorted by time, averaging duplicate times."""
    by_t = {}
    for r in rows:
        by_t.setdefault(r["t"], []).append(r)
    ts = np.array(sorted(by_t))
    val = np.array([np.mean([r["value"] for r in by_t[t]]) for t in ts])
    err = np.array([np.mean([r["stderr"] for r in by_t[t]]) for t in ts])
    return ts, val, err


def _guide_line(ax, slope, x, y, logy):
    """Draw a dotted guide of the given slope anchored at the data median."""
    if x.size == 0:
        return
    x0, y0 = np.median(x), np.median(y)
    span = np.array([x.min(), x.max()], dtype=float)
    if logy:
        yy = y0 * (span / x0) ** slope
    else:
        yy = y0 + slope * np.log(span / x0)
    ax.plot(span, yy, "k:", linewidth=1,
            label=f"guide slope {slope:g}")


def _finish(fig, ax, title, output):
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    kind = output.rsplit(".", 1)[-1].lower()
    metadata = {"Date": None} if kind == "svg" else None
    fig.savefig(output, metadata=metadata)
    plt.close(fig)


def _render_temporal_log(ax, rows, params):
    all_t, all_v = [], []
    for L, group in _group_by_size(rows).items():
        t, val, err = _time_series(group)
        keep = t > 0
        ax.errorbar(t[keep], val[keep], yerr=err[keep], fmt="o-",
                    label=f"L = {L}")
        all_t.append(t[keep])
        all_v.append(val[keep])
    if params.get("guide") is not None and all_t:
        _guide_line(ax, float(params["guide"]), np.concatenate(all_t),
                    np.concatenate(all_v), logy=False)
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(_label(params.get("observable", "value")))


def _render_spatial_log(ax, rows, params):
    all_x, all_y = [], []
    for L, group in _group_by_size(rows).items():
        by_cut = {}
        for r in group:
            if r["cut"] is None:
                continue
            by_cut.setdefault(r["cut"], []).append(r["value"])
        cuts = sorted(by_cut)
        x = np.array([chord_length(c, L) for c in cuts])
        y = np.array([np.mean(by_cut[c]) for c in cuts])
        ax.plot(x, y, "o-", label=f"L = {L}")
        all_x.append(x)
        all_y.append(y)
    if params.get("guide") is not None and all_x:
        _guide_line(ax, float(params["guide"]), np.concatenate(all_x),
                    np.concatenate(all_y), logy=False)
    ax.set_xscale("log")
    ax.set_xlabel(r"$(L/\pi)\,\sin(\pi \ell / L)$")
    ax.set_ylabel(_label(params.get("observable", "value")))


def _collapse_curves(rows, params):
    """Per-size (tau, delta) with delta = plateau - value, tau = t / L^z.

    The plateau is the value at the last recorded time for that size
    unless the caller supplies s_inf explicitly.
    """
    z = float(params.get("z", 1.0))
    s_inf = params.get("s_inf")
    out = {}
    for L, group in _group_by_size(rows).items():
        t, val, _ = _time_series(group)
        plateau = float(val[-1]) if s_inf is None else float(s_inf)
        delta = plateau - val
        tau = t / float(L) ** z
        keep = (tau > 0) & (delta > 0)
        out[L] = (tau[keep], delta[keep])
    return out, z


def _render_collapse(ax, rows, params, logx):
    curves, z = _collapse_curves(rows, params)
    for L, (tau, delta) in curves.items():
        ax.plot(tau, delta, "o-", label=f"L = {L}")
    if params.get("guide") is not None and curves:
        tau = np.concatenate([c[0] for c in curves.values()])
        delta = np.concatenate([c[1] for c in curves.values()])
        if tau.size:
            slope = float(params["guide"])
            if logx:
                _guide_line(ax, slope, tau, delta, logy=True)
            else:
                # exponential guide on semi-log axes: delta ~ exp(slope tau)
                span = np.array([tau.min(), tau.max()])
                t0, d0 = np.median(tau), np.median(delta)
                ax.plot(span, d0 * np.exp(slope * (span - t0)), "k:",
                        linewidth=1, label=f"guide rate {slope:g}")
    if logx:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(rf"$t / L^{{{z:g}}}$")
    name = _label(params.get("observable", "value"))
    ax.set_ylabel(rf"plateau $-$ {name}")


def _render_phase_scan(ax, rows, params):
    for L, group in _group_by_size(rows).items():
        by_p = {}
        for r in group:
            by_p.setdefault(r["p"], []).append(r)
        ps = sorted(by_p)
        # steady-state proxy: the latest recorded time at each p
        ys = []
        for p in ps:
            t_max = max(r["t"] for r in by_p[p])
            ys.append(np.mean([r["value"] for r in by_p[p]
                               if r["t"] == t_max]))
        ax.plot(ps, ys, "o-", label=f"L = {L}")
    ax.set_xlabel("p")
    ax.set_ylabel(_label(params.get("observable", "value")))


_RENDERERS = {
    "temporal_log": lambda ax, rows, params: _render_temporal_log(ax, rows, params),
    "spatial_log": lambda ax, rows, params: _render_spatial_log(ax, rows, params),
    "collapse_loglog": lambda ax, rows, params: _render_collapse(ax, rows, params, logx=True),
    "collapse_semilog": lambda ax, rows, params: _render_collapse(ax, rows, params, logx=False),
    "phase_scan": lambda ax, rows, params: _render_phase_scan(ax, rows, params),
}


def render(job: PlotJob) -> str:
    """Render the figure described by the job and return the output path."""
    table = read_table(job.input_csv)
    params = dict(job.params)
    observable = params.get("observable")
    cut = params.get("cut", "any")
    rows = select(table, observable=observable, cut=cut)
    if observable is not None and table and not select(table, observable=observable):
        present = sorted({r["observable"] for r in table})
        raise SchemaError(
            f"observable {observable!r} not present in input "
            f"(found: {', '.join(present)})")
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        _RENDERERS[job.figure_kind](ax, rows, params)
        _finish(fig, ax, params.get("title"), job.output)
    return job.output
