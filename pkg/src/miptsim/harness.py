"""Trajectory runner and ensemble aggregation.

A trajectory evolves one seeded circuit realization on the appropriate
backend (tensor-train state for the weak-measurement hybrid model,
stabilizer tableau for the Clifford models) and records scheduled
observables. Ensembles fan trajectories over a worker pool and reduce to
a flat table with the fixed CSV schema.

Randomness is split into named substreams per trajectory (layer plan,
measurement outcomes, estimator sampling) so that enabling or disabling
estimators never perturbs the circuit itself, and per-(time, estimator)
sampler streams keep recorded values independent of which other
observables are requested.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import stabilizer as stab
from .errors import ConfigError, DomainError
from .models import CircuitSpec
from .mps import MpsState, WeakMeasurementSpec
from .paulis import HADAMARD, PAULI_CHARS, pauli_dense_on_sites
from .sampling import magic_estimates, sample_bitstrings

CSV_COLUMNS = (
    "model", "L", "p", "beta", "gamma", "chi", "seed_base", "n_traj",
    "t", "observable", "cut", "value", "stderr", "n_samples",
)

OBSERVABLES = ("ee", "sre", "pe", "bsmi", "bpmi")

# substream tags for counter-based seeding
_STREAM_LAYERS = 0
_STREAM_OUTCOMES = 1
_STREAM_SAMPLER = 2


@dataclass
class ObservableSchedule:
    """When and what to record.

    mode 'growth' records from t = 0 every t_m steps up to t_s;
    mode 'steady' equilibrates for t_eq steps, then records every t_m
    steps for a window of t_s further steps. record_times, if given,
    overrides both with an explicit sorted list of step indices.
    """

    t_eq: int = 0
    t_m: int = 1
    t_s: int = 0
    observables: tuple = ("ee",)
    cuts: tuple = ()
    sre_pe_samples: int = 1000
    mode: str = "steady"
    pe_basis: str = "Z"
    record_times: tuple = None

    def __post_init__(self):
        if min(self.t_eq, self.t_m, self.t_s) < 0 or self.t_m == 0:
            raise ConfigError("schedule times must be >= 0 with t_m >= 1")
        if self.mode not in ("growth", "steady"):
            raise ConfigError(f"unknown schedule mode {self.mode!r}")
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigError(f"unknown observables {sorted(unknown)}")

    def times(self) -> list:
        if self.record_times is not None:
            return sorted(set(int(t) for t in self.record_times))
        if self.mode == "growth":
            return list(range(0, self.t_s + 1, self.t_m))
        return list(range(self.t_eq, self.t_eq + self.t_s + 1, self.t_m))

    def validate_cuts(self, L: int):
        if any(not 1 <= c <= L - 1 for c in self.cuts):
            raise ConfigError(f"cuts must lie in [1, {L - 1}]")


@dataclass
class TrajectoryRecord:
    spec: CircuitSpec
    seed: int
    rows: list = field(default_factory=list)  # (t, observable, cut, value, stderr, n_samples)
    chi: int = None


def backend_for(spec: CircuitSpec) -> str:
    return "mps" if spec.model == "SelfDualHybrid" else "tableau"


def _substream(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(t) for t in tags]))


# -- instruction execution ----------------------------------------------------

_ROT_DENSE_CACHE = {}


def _rotation_dense(name: str):
    """Dense matrix of e^{-+i pi/4 P} for an ensemble gate name like 'XX+'."""
    if name not in _ROT_DENSE_CACHE:
        word, sgn = name[:-1], name[-1]
        letters = [PAULI_CHARS.index(c) for c in word]
        p = pauli_dense_on_sites(letters, len(word))
        dim = p.shape[0]
        s = 1j if sgn == "+" else -1j
        _ROT_DENSE_CACHE[name] = (np.eye(dim) + s * p) / np.sqrt(2)
    return _ROT_DENSE_CACHE[name]


def _rot_tableau_gate(name: str, site: int):
    word, sgn = name[:-1], name[-1]
    dagger = sgn == "-"
    if word == "XIX":
        return stab.pauli_rotation_gate("XX", (site, site + 2), dagger)
    sites = (site,) if len(word) == 1 else (site, site + 1)
    return stab.pauli_rotation_gate(word, sites, dagger)


def apply_plan_tableau(tab, plan, spec: CircuitSpec, rng_out) -> None:
    for ins in plan:
        if ins.kind == "rot":
            tab.apply_gate(_rot_tableau_gate(ins.name, ins.site))
        elif ins.kind == "clifford2":
            dph, newx, newz = (np.array(v, dtype=np.uint8) for v in ins.payload)
            gate = stab.CliffordGate("Random2Q", (ins.site, ins.site + 1), dph, newx, newz)
            tab.apply_gate(gate)
        elif ins.kind == "qa":
            a, b = (ins.site, ins.site + 1)
            if ins.name == "R":
                a, b = b, a
            first, second = ("CZ", "CX") if spec.qa_cz_first else ("CX", "CZ")
            tab.apply_gate(stab.clifford_gate(first, (a, b)))
            tab.apply_gate(stab.clifford_gate(second, (a, b)))
        elif ins.kind == "gate1":
            tab.apply_gate(stab.clifford_gate(ins.name, (ins.site,)))
        elif ins.kind == "projective":
            sites = (ins.site,) if ins.name == "Z" else (ins.site, ins.site + 1)
            tab.measure(sites, ins.name, rng_out)
        elif ins.kind == "weak":
            raise ConfigError("weak measurements need the tensor-network backend")
        else:
            raise DomainError(f"unknown instruction kind {ins.kind!r}")


def apply_plan_mps(state: MpsState, plan, spec: CircuitSpec, rng_out) -> None:
    for ins in plan:
        if ins.kind == "rot":
            state.apply_unitary(_rotation_dense(ins.name), ins.site)
        elif ins.kind == "weak":
            state.weak_measure(
                WeakMeasurementSpec(ins.name, spec.beta, ins.site), rng_out
            )
        elif ins.kind == "projective":
            word = "Z" if ins.name == "Z" else "XX"
            state.projective_measure(word, ins.site, rng_out)
        elif ins.kind == "gate1":
            if ins.name != "H":
                raise DomainError(f"unknown single-site gate {ins.name!r}")
            state.apply_unitary(HADAMARD, ins.site)
        else:
            raise ConfigError(f"{ins.kind} is not supported on the tensor backend")


def apply_plan_dense(state, plan, spec: CircuitSpec, rng_out):
    """Replay a layer plan on a DenseState, drawing measurement outcomes
    from rng_out in exactly the order the tensor backend does; used to
    cross-check trajectories at small L."""
    from .oracle import statevector_apply
    from .paulis import letters_from_str

    for ins in plan:
        if ins.kind == "rot":
            word = ins.name[:-1]
            sites = range(ins.site, ins.site + len(word))
            state = statevector_apply(state, _rotation_dense(ins.name), sites)
        elif ins.kind in ("weak", "projective"):
            word = {"ZI": "Z", "Z": "Z", "XX": "XX"}[ins.name]
            sites = range(ins.site, ins.site + len(word))
            p_mat = pauli_dense_on_sites(letters_from_str(word), len(word))
            psi = state.amplitudes.reshape((2,) * spec.L)
            pp = np.tensordot(
                p_mat.reshape((2,) * (2 * len(word))), psi,
                axes=(range(len(word), 2 * len(word)), sites))
            pp = np.moveaxis(pp, range(len(word)), sites).ravel()
            expval = float(np.vdot(state.amplitudes, pp).real)
            if ins.kind == "weak":
                q_plus = 0.5 * (1.0 + np.tanh(2.0 * spec.beta) * expval)
                outcome = 1 if rng_out.random() < q_plus else -1
                if spec.beta == 0:
                    continue
                op = (np.cosh(spec.beta) * np.eye(p_mat.shape[0])
                      + outcome * np.sinh(spec.beta) * p_mat)
            else:
                p_plus = min(max(0.5 * (1.0 + expval), 0.0), 1.0)
                outcome = 1 if rng_out.random() < p_plus else -1
                op = 0.5 * (np.eye(p_mat.shape[0]) + outcome * p_mat)
            state = statevector_apply(state, op, sites, renormalize=True)
        elif ins.kind == "gate1":
            state = statevector_apply(state, HADAMARD, [ins.site])
        else:
            raise ConfigError(f"{ins.kind} is not supported on the dense backend")
    return state


def initial_tableau(spec: CircuitSpec):
    basis = "X" if spec.model == "QuantumAutomaton" else "Z"
    return stab.new_tableau(spec.L, basis)


def initial_mps(spec: CircuitSpec, chi: int, cutoff: float = 0.0) -> MpsState:
    return MpsState.product_state(spec.L, "0", chi_max=chi, cutoff=cutoff)


# -- observable recording -----------------------------------------------------

def _record_tableau(tab, sched: ObservableSchedule, t: int, rows: list):
    for obs in sched.observables:
        if obs == "ee":
            for cut in sched.cuts:
                v = float(stab.stabilizer_ee(tab, range(cut)))
                rows.append((t, "ee", cut, v, 0.0, 1))
        elif obs == "pe":
            v = float(stab.stabilizer_pe(tab, basis=sched.pe_basis))
            rows.append((t, "pe", None, v, 0.0, 1))
        elif obs == "bpmi":
            for cut in sched.cuts:
                v = float(stab.stabilizer_bpmi(tab, cut, basis=sched.pe_basis))
                rows.append((t, "bpmi", cut, v, 0.0, 1))
        else:
            raise ConfigError(f"{obs} is not defined on the tableau backend")


def _record_mps(state: MpsState, sched: ObservableSchedule, t: int, seed: int,
                rows: list):
    # record on a frozen copy: estimators re-gauge the chain, and even a
    # pure gauge change would alter the float stream of later evolution
    state = state.copy()
    obs = set(sched.observables)
    n_s = sched.sre_pe_samples
    if "ee" in obs:
        for cut in sched.cuts:
            v = float(state.entanglement_entropy(cut, order=1))
            rows.append((t, "ee", cut, v, 0.0, 1))
    if obs & {"sre", "bsmi"}:
        rng = _substream(seed, _STREAM_SAMPLER, t, 0)
        cuts = sched.cuts if "bsmi" in obs else ()
        res = magic_estimates(state, cuts, n_s, rng)
        if "sre" in obs:
            for order in (1, 2):
                r = res[("sre", order)]
                rows.append((t, f"sre{order}", None, r.value, r.stderr, r.n_samples))
        for cut in cuts:
            r = res[("bsmi", cut)]
            rows.append((t, "bsmi", cut, r.value, r.stderr, r.n_samples))
    if obs & {"pe", "bpmi"}:
        rng = _substream(seed, _STREAM_SAMPLER, t, 1)
        cuts = sched.cuts if "bpmi" in obs else ()
        _, logp, prefix, suffix = sample_bitstrings(
            state, n_s, rng, cuts=cuts, basis=sched.pe_basis
        )
        if "pe" in obs:
            v = -float(np.mean(logp))
            err = float(np.std(logp, ddof=1) / np.sqrt(n_s))
            rows.append((t, "pe", None, v, err, n_s))
        for cut in cuts:
            terms = logp - prefix[cut] - suffix[cut]
            terms = terms[np.isfinite(terms)]
            v = float(np.mean(terms))
            err = float(np.std(terms, ddof=1) / np.sqrt(terms.size))
            rows.append((t, "bpmi", cut, v, err, int(terms.size)))
    rows.append((t, "trunc", None, state.total_discarded_weight, 0.0, 1))


def run_trajectory(spec: CircuitSpec, sched: ObservableSchedule, seed: int,
                   chi: int = 64, cutoff: float = 0.0) -> TrajectoryRecord:
    """Evolve one seeded trajectory, recording at the scheduled times."""
    sched.validate_cuts(spec.L)
    backend = backend_for(spec)
    rng_layer = _substream(seed, _STREAM_LAYERS)
    rng_out = _substream(seed, _STREAM_OUTCOMES)
    times = sched.times()
    t_max = times[-1] if times else 0
    record = TrajectoryRecord(spec, seed, chi=chi if backend == "mps" else None)
    if backend == "mps":
        state = initial_mps(spec, chi, cutoff)
    else:
        state = initial_tableau(spec)
    pointer = 0
    for t in range(t_max + 1):
        if pointer < len(times) and times[pointer] == t:
            if backend == "mps":
                _record_mps(state, sched, t, seed, record.rows)
            else:
                _record_tableau(state, sched, t, record.rows)
            pointer += 1
        if t == t_max:
            break
        plan = spec.layer(t, rng_layer)
        if backend == "mps":
            apply_plan_mps(state, plan, spec, rng_out)
        else:
            apply_plan_tableau(state, plan, spec, rng_out)
    return record


def _traj_worker(args):
    spec_json, sched, seed, chi, cutoff = args
    spec = CircuitSpec.from_json(spec_json)
    rec = run_trajectory(spec, sched, seed, chi=chi, cutoff=cutoff)
    return rec.rows


def run_ensemble(spec: CircuitSpec, sched: ObservableSchedule, n_traj: int,
                 seed_base: int, chi: int = 64, cutoff: float = 0.0,
                 workers: int = None) -> list:
    """Mean and standard error per (t, observable, cut) over n_traj
    trajectories seeded seed_base + index. Returns rows as dicts in the
    CSV schema; the reduction is done in seed order so results do not
    depend on the worker count."""
    if n_traj < 1:
        raise ConfigError("need at least one trajectory")
    if workers is None:
        workers = int(os.environ.get("MIPT_THREADS", "1"))
    jobs = [(spec.to_json(), sched, seed_base + k, chi, cutoff)
            for k in range(n_traj)]
    if workers > 1 and n_traj > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_rows = list(pool.map(_traj_worker, jobs))
    else:
        all_rows = [_traj_worker(job) for job in jobs]

    grouped = {}
    order = []
    for rows in all_rows:
        for t, obs, cut, value, stderr, n_samples in rows:
            key = (t, obs, cut)
            if key not in grouped:
                grouped[key] = ([], 0)
                order.append(key)
            vals, ns = grouped[key]
            vals.append(value)
            grouped[key] = (vals, max(ns, n_samples))

    is_mps = backend_for(spec) == "mps"
    table = []
    for key in sorted(order):
        t, obs, cut = key
        vals, n_samples = grouped[key]
        arr = np.array(vals)
        sem = float(np.std(arr, ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        table.append({
            "model": spec.model,
            "L": spec.L,
            "p": spec.p,
            "beta": spec.beta,
            "gamma": spec.gamma,
            "chi": chi if is_mps else None,
            "seed_base": seed_base,
            "n_traj": n_traj,
            "t": t,
            "observable": obs,
            "cut": cut,
            "value": float(np.mean(arr)),
            "stderr": sem,
            "n_samples": n_samples,
        })
    return table


# -- emission -----------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    return str(v)


def emit_results(table: list, path: str, format: str = "csv") -> None:
    """Write the aggregated table; CSV columns are fixed, unset parameters
    are empty cells, newlines are LF."""
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in table:
                writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    elif format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigError(f"unknown output format {format!r}")


def read_results(path: str) -> list:
    """Read back a CSV produced by emit_results, restoring numeric types."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, text in raw.items():
                if text == "" or text is None:
                    row[key] = None
                elif key in ("L", "seed_base", "n_traj", "t", "cut", "chi", "n_samples"):
                    row[key] = int(text)
                elif key in ("p", "beta", "gamma", "value", "stderr"):
                    row[key] = float(text)
                else:
                    row[key] = text
            out.append(row)
    return out
