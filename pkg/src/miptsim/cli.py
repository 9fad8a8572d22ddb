"""Command line front end.

Subcommands:
  simulate  run a trajectory ensemble and write the aggregated table
  fit       extract scaling quantities from a results CSV
  oracle    print exact entropies of small reference states as JSON

Flags can be preloaded from a JSON config file via --config; flags given
on the command line override the file. Worker count comes from the
MIPT_THREADS environment variable (default 1).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import ConfigError, FitError
from .fits import (fit_exponential_tail, fit_log_slope, relaxation_curve,
                   scan_collapse_z, trim_saturated, drop_plateau_window)
from .harness import ObservableSchedule, emit_results, read_results, run_ensemble
from .models import CircuitSpec
from .oracle import (DenseState, exact_bpmi, exact_bsmi,
                     exact_entanglement_entropy, exact_pe, exact_sre,
                     statevector_apply)
from .paulis import HADAMARD

MODEL_NAMES = {
    "selfdual": "SelfDualHybrid",
    "clifford-dual": "CliffordDual",
    "random-clifford": "RandomClifford",
    "qa": "QuantumAutomaton",
}


def _parse_cuts(text: str, L: int) -> tuple:
    if text == "half":
        return (L // 2,)
    if text == "all":
        return tuple(range(1, L))
    return tuple(int(c) for c in text.split(","))


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid {text!r} must look like a:b:step")
    if step <= 0 or hi < lo:
        raise ConfigError(f"bad grid {text!r}")
    return np.arange(lo, hi + step / 2, step)


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run an ensemble of trajectories")
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--model", choices=sorted(MODEL_NAMES))
    p.add_argument("--L", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--chi", type=int, default=64)
    p.add_argument("--t-max", type=int)
    p.add_argument("--t-eq", type=int, default=0)
    p.add_argument("--t-m", type=int, default=1)
    p.add_argument("--t-s", type=int)
    p.add_argument("--record-times", help="explicit comma-separated step list")
    p.add_argument("--traj", type=int, default=1)
    p.add_argument("--samples", type=int, default=1000,
                   help="Monte Carlo samples per estimator call")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observables", default="ee")
    p.add_argument("--cuts", default="half", help="half | all | l1,l2,...")
    p.add_argument("--mode", choices=("growth", "steady"), default="steady")
    p.add_argument("--pe-basis", choices=("Z", "X"), default="Z")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _add_fit(sub):
    p = sub.add_parser("fit", help="fit scaling forms to a results CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kind", choices=("logslope", "exptail", "collapse"),
                   required=True)
    p.add_argument("--observable", default="ee")
    p.add_argument("--cut", type=int)
    p.add_argument("--L", type=int, help="restrict to one system size")
    p.add_argument("--axis", choices=("time", "space"), default="time",
                   help="logslope only: fit against t, or against the cut "
                        "position via the chord length")
    p.add_argument("--z", type=float, default=1.0,
                   help="exptail only: dynamical exponent for tau = t / L^z")
    p.add_argument("--s-inf", default="auto",
                   help="exptail only: plateau value, or 'auto'")
    p.add_argument("--window", help="fit window lo:hi on the x variable")
    p.add_argument("--z-grid", default="0.5:2.5:0.02",
                   help="collapse only: z values as a:b:step")
    return p


def _add_oracle(sub):
    p = sub.add_parser("oracle", help="exact entropies of a reference state")
    p.add_argument("--state", choices=("product0", "plus", "ghz"),
                   default="product0")
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--cut", type=int)
    p.add_argument("--order", type=float, default=2)
    p.add_argument("--basis", choices=("Z", "X"), default="Z")
    return p


def _make_state(name: str, L: int) -> DenseState:
    if name == "product0":
        return DenseState.product(L, "0")
    if name == "plus":
        return DenseState.product(L, "+")
    state = DenseState.product(L, "0")
    state = statevector_apply(state, HADAMARD, [0])
    cx = np.eye(4)[[0, 1, 3, 2]]
    for s in range(L - 1):
        state = statevector_apply(state, cx, [s, s + 1])
    return state


def cmd_simulate(args) -> int:
    if args.model is None or args.L is None or args.p is None:
        raise ConfigError("simulate needs --model, --L and --p")
    if args.out is None:
        raise ConfigError("simulate needs --out")
    spec = CircuitSpec(model=MODEL_NAMES[args.model], L=args.L, p=args.p,
                       beta=args.beta, gamma=args.gamma)
    t_s = args.t_s
    if t_s is None:
        if args.t_max is None and args.record_times is None:
            raise ConfigError("simulate needs --t-max, --t-s or --record-times")
        if args.t_max is not None:
            t_s = args.t_max if args.mode == "growth" else args.t_max - args.t_eq
        else:
            t_s = 0
    record_times = None
    if args.record_times:
        record_times = tuple(int(t) for t in args.record_times.split(","))
    sched = ObservableSchedule(
        t_eq=args.t_eq, t_m=args.t_m, t_s=t_s,
        observables=tuple(args.observables.split(",")),
        cuts=_parse_cuts(args.cuts, args.L),
        sre_pe_samples=args.samples, mode=args.mode,
        pe_basis=args.pe_basis, record_times=record_times,
    )
    table = run_ensemble(spec, sched, args.traj, args.seed, chi=args.chi)
    emit_results(table, args.out, format=args.format)
    print(f"wrote {len(table)} rows to {args.out}")
    return 0


def _fit_series(table, args):
    rows = [r for r in table if r["observable"] == args.observable
            and (args.L is None or r["L"] == args.L)
            and (args.cut is None or r["cut"] == args.cut)]
    if not rows:
        raise FitError(f"no rows match observable={args.observable!r}")
    return rows


def cmd_fit(args) -> int:
    table = read_results(args.infile)
    window = None
    if args.window:
        window = tuple(float(v) for v in args.window.split(":"))

    if args.kind == "logslope":
        rows = _fit_series(table, args)
        if args.axis == "time":
            x = np.array([r["t"] for r in rows], dtype=float)
        else:
            from .fits import chord_length
            L = rows[0]["L"]
            x = chord_length([r["cut"] for r in rows], L)
        y = np.array([r["value"] for r in rows])
        res = fit_log_slope(x, y, window=window)
        out = {"kind": "logslope", "axis": args.axis, "slope": res.slope,
               "intercept": res.intercept, "residual": res.residual,
               "window": list(res.window)}
    elif args.kind == "exptail":
        rows = _fit_series(table, args)
        L = args.L if args.L is not None else rows[0]["L"]
        s_inf = args.s_inf if args.s_inf == "auto" else float(args.s_inf)
        curve = relaxation_curve(rows, args.observable, L, args.z,
                                 s_inf=s_inf, cut=args.cut)
        tau, delta = drop_plateau_window(curve.tau, curve.delta)
        tau, delta = trim_saturated(tau, delta)
        res = fit_exponential_tail(tau, delta, window=window)
        out = {"kind": "exptail", "z": args.z, "rate": res.slope,
               "intercept": res.intercept, "residual": res.residual,
               "s_inf": curve.s_inf, "plateau_warn": curve.warn,
               "window": list(res.window)}
    else:
        sizes = sorted({r["L"] for r in table if r["observable"] == args.observable})
        curves = {}
        for L in sizes:
            rows = [r for r in table if r["observable"] == args.observable
                    and r["L"] == L and (args.cut is None or r["cut"] == args.cut)]
            curve = relaxation_curve(rows, args.observable, L, 0.0,
                                     cut=args.cut)
            # z = 0 here: tau is the raw time axis, the scan rescales it
            curves[L] = trim_saturated(*drop_plateau_window(curve.tau, curve.delta))
        scan = scan_collapse_z(curves, _parse_grid(args.z_grid))
        out = {"kind": "collapse", "best_z": scan["best_z"],
               "sizes": sizes,
               "quality": {f"{z:g}": q for z, q in scan["quality"].items()}}
    print(json.dumps(out, indent=1))
    return 0


def cmd_oracle(args) -> int:
    state = _make_state(args.state, args.L)
    cut = args.cut if args.cut is not None else args.L // 2
    order = args.order
    out = {
        "state": args.state,
        "L": args.L,
        "cut": cut,
        "order": order,
        "basis": args.basis,
        "ee": exact_entanglement_entropy(state, cut, order).value,
        "sre1": exact_sre(state, 1).value,
        "sre2": exact_sre(state, 2).value,
        "pe": exact_pe(state, order, basis=args.basis).value,
        "bsmi": exact_bsmi(state, cut).value,
        "bpmi": exact_bpmi(state, cut, basis=args.basis).value,
    }
    print(json.dumps(out, indent=1))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="miptsim", description="monitored-circuit entropy simulations")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = _add_simulate(sub)
    _add_fit(sub)
    _add_oracle(sub)

    argv = list(sys.argv[1:] if argv is None else argv)
    # pre-scan for --config so file values become defaults the real parse
    # can override
    if argv and argv[0] == "simulate" and "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        with open(cfg_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        known = {a.dest for a in sim._actions}
        unknown = set(cfg) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        sim.set_defaults(**cfg)

    args = parser.parse_args(argv)
    handler = {"simulate": cmd_simulate, "fit": cmd_fit, "oracle": cmd_oracle}
    try:
        return handler[args.command](args)
    except (ConfigError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
