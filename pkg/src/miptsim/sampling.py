"""Perfect sampling estimators on tensor-train states.

Pauli strings are drawn from the normalized spectrum
Pi(sigma) = |Tr(rho sigma)|^2 / 2^L and bitstrings from |<z|psi>|^2, both
by exact conditional sweeps on a right-normalized chain. Samples are
processed in batches, so all heavy contractions are GEMMs over a sample
axis. All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalConsistencyError, UnsupportedRegionError
from .mps import MpsState
from .paulis import HADAMARD, PAULI_MATS, PauliString

LN2 = np.log(2.0)

# target working-set size for the batched environments
_ENV_BYTES = 128 * 2**20


def _chunk_size(n_samples: int, chi: int) -> int:
    per_sample = 4 * chi * chi * 16 * 3
    return int(max(16, min(n_samples, _ENV_BYTES // max(per_sample, 1))))


def _left_grams(state: MpsState):
    """grams[i] = partial trace of |psi><psi| over sites < i, as a bond matrix."""
    grams = [np.ones((1, 1), dtype=complex)]
    c = grams[0]
    for a in state.tensors:
        c = np.einsum("ab,asc,bsd->cd", c, a, a.conj(), optimize=True)
        grams.append(c)
    return grams


def _logabs(x: np.ndarray) -> np.ndarray:
    out = np.full(x.shape, -np.inf)
    nz = x != 0
    out[nz] = np.log(np.abs(x[nz]))
    return out


def _logsumexp(logw: np.ndarray) -> float:
    m = np.max(logw)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(logw - m))))


def _loo_logsumexp(logw: np.ndarray) -> np.ndarray:
    """log of the leave-one-out sums, computed stably."""
    total = _logsumexp(logw)
    frac = np.exp(logw - total)
    with np.errstate(divide="ignore"):
        return total + np.log1p(-np.minimum(frac, 1.0 - 1e-15))


@dataclass
class EstimatorResult:
    value: float
    stderr: float
    n_samples: int
    n_rejected: int = 0
    warn: bool = False

    def __float__(self):
        return float(self.value)


@dataclass
class BitstringSample:
    bits: np.ndarray
    prob: float


# -- Pauli-string sampling ----------------------------------------------------

def _pauli_chunk(tensors, cuts, n, rng):
    """Draw n Pauli strings; returns (letters, log_pi, {cut: log|Tr rho_A sigma_A|}).

    The running environment E[k, a, a'] is the two-copy prefix contraction,
    renormalized by sqrt(2 pi) per site so the conditional at the next site
    is ||E'||_F^2 / 2.
    """
    L = len(tensors)
    env = np.ones((n, 1, 1), dtype=complex)
    letters = np.empty((n, L), dtype=np.uint8)
    log2pi = np.zeros(n)
    prefix = {}
    idx = np.arange(n)
    for i, a in enumerate(tensors):
        dl, _, dr = a.shape
        # b_ops[p] = sigma_p contracted into the bra tensor
        b_ops = np.einsum("pst,ctd->pcsd", PAULI_MATS, a.conj())
        # contract the ket bond of env with the site tensor
        g = np.matmul(env.transpose(0, 2, 1), a.reshape(dl, 2 * dr))
        g = g.reshape(n, dl, 2, dr).transpose(0, 3, 1, 2).reshape(n * dr, dl * 2)
        bm = b_ops.transpose(1, 2, 0, 3).reshape(dl * 2, 4 * dr)
        e4 = (g @ bm).reshape(n, dr, 4, dr).transpose(2, 0, 1, 3)  # (4, n, dr, dr')
        w = 0.5 * np.einsum("pncd,pncd->pn", e4, e4.conj()).real
        tot = w.sum(axis=0)
        if np.any(np.abs(tot - 1.0) > 1e-6):
            raise NumericalConsistencyError("Pauli conditionals do not sum to 1")
        u = rng.random(n) * tot
        chosen = (np.cumsum(w, axis=0) < u).sum(axis=0).clip(max=3)
        pi = w[chosen, idx] / tot
        letters[:, i] = chosen
        log2pi += np.log(2.0 * pi * tot)
        env = e4[chosen, idx] / np.sqrt(2.0 * pi * tot)[:, None, None]
        if i + 1 in cuts:
            tr = np.trace(env, axis1=1, axis2=2)
            prefix[i + 1] = _logabs(tr) + 0.5 * log2pi
    log_pi = log2pi - L * LN2
    return letters, log_pi, prefix


def _pauli_suffix_chunk(tensors, grams, cuts, letters):
    """log|Tr(rho_B sigma_B)| for the sampled letters, per cut, by a
    right-to-left two-copy sweep closed with the left Gram matrix."""
    n, L = letters.shape
    r = np.ones((n, 1, 1), dtype=complex)
    scale = np.zeros(n)
    out = {}
    # the sweep only has to reach the leftmost requested cut
    for i in range(L - 1, min(cuts) - 1, -1):
        a = tensors[i]
        dl, _, dr = a.shape
        sig = PAULI_MATS[letters[:, i]]  # (n, 2, 2)
        z1 = np.matmul(a.conj().reshape(dl * 2, dr), r.reshape(n, dr, dr).transpose(0, 2, 1))
        # z1: (n, dl'*2, dr_ket) with bra site leg still open
        z1 = z1.reshape(n, dl, 2, dr)
        z2 = np.einsum("nst,nctb->ncsb", sig, z1)  # apply sigma to the bra leg
        rnew = np.matmul(a.reshape(dl, 2 * dr), z2.reshape(n, dl, 2 * dr).transpose(0, 2, 1))
        r = rnew  # (n, dl_ket, dl_bra)
        m = np.abs(r).max(axis=(1, 2))
        safe = np.where(m > 0, m, 1.0)
        r = r / safe[:, None, None]
        scale += np.where(m > 0, np.log(safe), -np.inf)
        if i in cuts:
            tr = np.einsum("ab,nab->n", grams[i], r)
            out[i] = _logabs(tr) + scale
    return out


def sample_pauli_strings(state: MpsState, n_samples: int, rng, cuts=()):
    """Draw Pauli strings sigma ~ Pi_rho.

    Returns (letters, log_pi, prefix, suffix): letters is (n, L) with the
    IXYZ code per site, log_pi the exact log-probability of each sample,
    and prefix/suffix map each requested cut to per-sample
    log|Tr(rho_A sigma_A)| and log|Tr(rho_B sigma_B)|.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    state.right_normalize()
    cuts = set(cuts)
    grams = _left_grams(state) if cuts else None
    chi = max(t.shape[2] for t in state.tensors)
    chunk = _chunk_size(n_samples, chi)
    parts = []
    for start in range(0, n_samples, chunk):
        n = min(chunk, n_samples - start)
        letters, log_pi, prefix = _pauli_chunk(state.tensors, cuts, n, rng)
        suffix = _pauli_suffix_chunk(state.tensors, grams, cuts, letters) if cuts else {}
        parts.append((letters, log_pi, prefix, suffix))
    letters = np.concatenate([p[0] for p in parts])
    log_pi = np.concatenate([p[1] for p in parts])
    prefix = {c: np.concatenate([p[2][c] for p in parts]) for c in cuts}
    suffix = {c: np.concatenate([p[3][c] for p in parts]) for c in cuts}
    return letters, log_pi, prefix, suffix


def sample_pauli_string(state: MpsState, rng) -> PauliString:
    """Draw a single Pauli string sigma ~ Pi_rho, with its weight attached."""
    letters, log_pi, _, _ = sample_pauli_strings(state, 1, rng)
    return PauliString(letters[0], weight_prob=float(np.exp(log_pi[0])))


# -- bitstring sampling -------------------------------------------------------

def _bit_chunk(tensors, cuts, n, rng):
    """Draw n bitstrings; returns (bits, log_p, {cut: log p(z_A)})."""
    L = len(tensors)
    vec = np.ones((n, 1), dtype=complex)
    bits = np.empty((n, L), dtype=np.uint8)
    logp = np.zeros(n)
    prefix = {}
    idx = np.arange(n)
    for i, a in enumerate(tensors):
        branches = np.matmul(vec, a.transpose(1, 0, 2))  # (2, n, dr)
        w = np.einsum("snb,snb->sn", branches, branches.conj()).real
        tot = w.sum(axis=0)
        if np.any(np.abs(tot - 1.0) > 1e-6):
            raise NumericalConsistencyError("bit conditionals do not sum to 1")
        p1 = w[1] / tot
        z = (rng.random(n) < p1).astype(np.uint8)
        p = np.where(z == 1, p1, 1.0 - p1)
        bits[:, i] = z
        logp += np.log(p)
        vec = branches[z, idx] / np.sqrt(p * tot)[:, None]
        if i + 1 in cuts:
            prefix[i + 1] = logp.copy()
    return bits, logp, prefix


def _bit_suffix_chunk(tensors, grams, cuts, bits):
    """log p(z_B) = log Tr(rho_B |z_B><z_B|) per cut for the sampled bits."""
    n, L = bits.shape
    r = np.ones((n, 1, 1), dtype=complex)
    scale = np.zeros(n)
    out = {}
    # the sweep only has to reach the leftmost requested cut
    for i in range(L - 1, min(cuts) - 1, -1):
        a = tensors[i]
        az = a.transpose(1, 0, 2)[bits[:, i], :, :]  # (n, dl, dr)
        r = np.matmul(np.matmul(az, r), az.conj().transpose(0, 2, 1))
        m = np.abs(r).max(axis=(1, 2))
        safe = np.where(m > 0, m, 1.0)
        r = r / safe[:, None, None]
        scale += np.where(m > 0, np.log(safe), -np.inf)
        if i in cuts:
            tr = np.einsum("ab,nab->n", grams[i], r).real
            out[i] = _logabs(tr) + scale
    return out


def sample_bitstrings(state: MpsState, n_samples: int, rng, cuts=(), basis="Z"):
    """Draw measurement outcomes z ~ |<z|psi>|^2 in the Z (or X) basis.

    Returns (bits, log_p, prefix, suffix) with prefix/suffix holding the
    per-sample log marginals log p(z_A), log p(z_B) at each requested cut.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    if basis == "X":
        state = state.copy()
        for q in range(state.num_sites):
            state.apply_unitary(HADAMARD, q)
    elif basis != "Z":
        raise DomainError(f"unknown basis {basis}")
    state.right_normalize()
    cuts = set(cuts)
    grams = _left_grams(state) if cuts else None
    chi = max(t.shape[2] for t in state.tensors)
    chunk = _chunk_size(n_samples, chi)
    parts = []
    for start in range(0, n_samples, chunk):
        n = min(chunk, n_samples - start)
        bits, logp, prefix = _bit_chunk(state.tensors, cuts, n, rng)
        suffix = _bit_suffix_chunk(state.tensors, grams, cuts, bits) if cuts else {}
        parts.append((bits, logp, prefix, suffix))
    bits = np.concatenate([p[0] for p in parts])
    logp = np.concatenate([p[1] for p in parts])
    prefix = {c: np.concatenate([p[2][c] for p in parts]) for c in cuts}
    suffix = {c: np.concatenate([p[3][c] for p in parts]) for c in cuts}
    return bits, logp, prefix, suffix


def sample_bitstring(state: MpsState, rng, basis="Z") -> BitstringSample:
    """Draw a single bitstring z ~ |<z|psi>|^2 with its probability."""
    bits, logp, _, _ = sample_bitstrings(state, 1, rng, basis=basis)
    return BitstringSample(bits[0], float(np.exp(logp[0])))


# -- restricted traces --------------------------------------------------------

def restricted_pauli_trace(state: MpsState, pauli, region) -> float:
    """Tr(rho_R sigma_R) for a Pauli word on a contiguous region R.

    rho_R is the reduced state on the region; the word must cover exactly
    the region's sites. Non-contiguous regions are not supported.
    """
    region = sorted(region)
    if region != list(range(region[0], region[-1] + 1)):
        raise UnsupportedRegionError("region must be contiguous")
    letters = pauli.letters if isinstance(pauli, PauliString) else np.asarray(pauli)
    sign = pauli.sign if isinstance(pauli, PauliString) else 1
    if len(letters) != len(region):
        raise DomainError("Pauli word length must match the region")
    state.right_normalize()
    env = _left_grams(state)[region[0]] if region[0] > 0 else np.ones((1, 1), complex)
    for q, p in zip(region, letters):
        a = state.tensors[q]
        env = np.einsum(
            "ab,bsc,st,atd->dc", env, a.conj(), PAULI_MATS[p], a, optimize=True
        )
    # sites right of the region are right-isometries, closing to a trace
    return float(sign * np.trace(env).real)


# -- entropy estimators -------------------------------------------------------

def _log_power_mean(logw: np.ndarray, order: float):
    """(value, jackknife stderr) of 1/(1-n) log E[w^(n-1)] from log-samples."""
    n_s = logw.size
    scaled = (order - 1.0) * logw
    total = _logsumexp(scaled)
    value = (total - np.log(n_s)) / (1.0 - order)
    loo = (_loo_logsumexp(scaled) - np.log(n_s - 1)) / (1.0 - order)
    var = (n_s - 1) / n_s * np.sum((loo - np.mean(loo)) ** 2)
    return value, float(np.sqrt(var))


def _sre_from_logpi(log_pi: np.ndarray, L: int, order: float) -> EstimatorResult:
    shift = L * LN2
    n_s = log_pi.size
    if order == 1.0:
        value = -shift - float(np.mean(log_pi))
        stderr = float(np.std(log_pi, ddof=1) / np.sqrt(n_s))
    else:
        s, stderr = _log_power_mean(log_pi, order)
        value = s - shift
    return EstimatorResult(value, stderr, n_s)


def estimate_sre(state: MpsState, order, n_samples: int, rng) -> EstimatorResult:
    """Stabilizer Renyi entropy -L log 2 + S_order(Pi_rho) by Pauli sampling."""
    _, log_pi, _, _ = sample_pauli_strings(state, n_samples, rng)
    return _sre_from_logpi(log_pi, state.num_sites, float(order))


def estimate_pe(state: MpsState, n_samples: int, rng, order=1, basis="Z") -> EstimatorResult:
    """Participation entropy of the measurement distribution by sampling."""
    order = float(order)
    _, logp, _, _ = sample_bitstrings(state, n_samples, rng, basis=basis)
    if order == 1.0:
        value = -float(np.mean(logp))
        stderr = float(np.std(logp, ddof=1) / np.sqrt(n_samples))
    else:
        value, stderr = _log_power_mean(logp, order)
    return EstimatorResult(value, stderr, n_samples)


def estimate_bsmi(state: MpsState, cut: int, n_samples: int, rng) -> EstimatorResult:
    """Mutual-information-like magic witness across a cut.

    Computed as I - W + S2 where I and W are the log-expectations of
    a b / d and a^2 b^2 / d over sigma ~ Pi_rho, with a, b, d the squared
    restricted and full Pauli traces, and S2 the order-2 spectrum entropy
    shifted by -L log 2. Zero on product and on stabilizer states.
    """
    L = state.num_sites
    if not 1 <= cut <= L - 1:
        raise DomainError(f"cut {cut} out of range")
    _, log_pi, prefix, suffix = sample_pauli_strings(state, n_samples, rng, cuts=[cut])
    return _bsmi_from_samples(log_pi, prefix[cut], suffix[cut], L)


def _bsmi_from_samples(log_pi, la, lb, L) -> EstimatorResult:
    lab = 0.5 * (log_pi + L * LN2)
    bad = ~(np.isfinite(lab) & ~np.isnan(la) & ~np.isnan(lb))
    n_rejected = int(np.sum(bad))
    if n_rejected:
        keep = ~bad
        la, lb, lab, log_pi = la[keep], lb[keep], lab[keep], log_pi[keep]
    n_kept = log_pi.size
    if n_kept < 2:
        raise DomainError("all samples rejected")
    t_i = 2 * la + 2 * lb - 2 * lab
    t_w = 4 * la + 4 * lb - 2 * lab
    logn = np.log(n_kept)
    value = -_logsumexp(t_i) + _logsumexp(t_w) - _logsumexp(log_pi) + logn - L * LN2
    logn1 = np.log(n_kept - 1)
    loo = (
        -_loo_logsumexp(t_i) + _loo_logsumexp(t_w) - _loo_logsumexp(log_pi)
        + logn1 - L * LN2
    )
    loo = loo[np.isfinite(loo)]
    if loo.size >= 2:
        var = (loo.size - 1) / loo.size * np.sum((loo - np.mean(loo)) ** 2)
        stderr = float(np.sqrt(var))
    else:
        stderr = float("nan")
    warn = n_rejected > 0.01 * (n_kept + n_rejected)
    return EstimatorResult(float(value), stderr, n_kept, n_rejected, warn)


def magic_estimates(state: MpsState, cuts, n_samples: int, rng,
                    sre_orders=(1, 2)) -> dict:
    """SRE (all requested orders) and BSMI (all requested cuts) from a
    single batch of Pauli samples; shares the expensive sweep."""
    L = state.num_sites
    _, log_pi, prefix, suffix = sample_pauli_strings(state, n_samples, rng, cuts=cuts)
    out = {}
    for order in sre_orders:
        out[("sre", order)] = _sre_from_logpi(log_pi, L, float(order))
    for cut in cuts:
        out[("bsmi", cut)] = _bsmi_from_samples(log_pi, prefix[cut], suffix[cut], L)
    return out


def estimate_bpmi(state: MpsState, cut: int, n_samples: int, rng, basis="Z") -> EstimatorResult:
    """Classical mutual information of measurement outcomes across a cut,
    estimated as the sample mean of log p(z) - log p(z_A) - log p(z_B)."""
    L = state.num_sites
    if not 1 <= cut <= L - 1:
        raise DomainError(f"cut {cut} out of range")
    _, logp, prefix, suffix = sample_bitstrings(state, n_samples, rng, cuts=[cut], basis=basis)
    terms = logp - prefix[cut] - suffix[cut]
    bad = ~np.isfinite(terms)
    n_rejected = int(np.sum(bad))
    if n_rejected:
        terms = terms[~bad]
    if terms.size < 1:
        raise DomainError("all samples rejected")
    value = float(np.mean(terms))
    stderr = float(np.std(terms, ddof=1) / np.sqrt(terms.size)) if terms.size > 1 else 0.0
    return EstimatorResult(value, stderr, int(terms.size), n_rejected)
