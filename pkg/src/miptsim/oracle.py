"""Dense state-vector oracle for small systems.

Ground truth for Pauli spectra, bitstring distributions and every
entropy handled by the sampling estimators. Hard capacity caps keep the
4^L scans (L <= 8) and state vectors (L <= 12) cheap; this module is a
test oracle, not a production backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import EntropyValue, ProbDist, renyi_entropy
from .errors import CapacityError, ContractViolation, DomainError
from .paulis import HADAMARD, PAULI_MATS

MAX_QUBITS_DENSE = 12
MAX_QUBITS_PAULI_SCAN = 8

# B[p, 2r+c] = sigma_p[c, r]; the per-site kernel of the Pauli transform.
_PAULI_KERNEL = np.array(
    [PAULI_MATS[p].T.reshape(4) for p in range(4)], dtype=complex
)


@dataclass
class DenseState:
    """Normalized pure state on num_qubits qubits, amplitudes in Z-basis order."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self):
        if self.num_qubits > MAX_QUBITS_DENSE:
            raise CapacityError(f"dense oracle limited to L <= {MAX_QUBITS_DENSE}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.amplitudes.size != 2**self.num_qubits:
            raise DomainError("amplitude vector length must be 2^L")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise DomainError(f"state norm {norm} deviates from 1")

    @classmethod
    def product(cls, num_qubits: int, local="0") -> "DenseState":
        """Product state of identical single-qubit states ('0', '1', '+', '-')."""
        kets = {
            "0": np.array([1, 0], dtype=complex),
            "1": np.array([0, 1], dtype=complex),
            "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
            "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
        }
        if isinstance(local, str):
            local = kets[local]
        amp = np.array([1.0], dtype=complex)
        for _ in range(num_qubits):
            amp = np.kron(amp, local)
        return cls(amp, num_qubits)


def statevector_apply(state: DenseState, gate, sites, renormalize=False) -> DenseState:
    """Apply a k-site gate (2^k x 2^k matrix) on the listed qubits.

    Non-unitary operators require renormalize=True; the returned state is
    always normalized.
    """
    gate = np.asarray(gate, dtype=complex)
    sites = list(sites)
    k = len(sites)
    if gate.shape != (2**k, 2**k):
        raise DomainError(f"gate shape {gate.shape} does not match {k} sites")
    if len(set(sites)) != k or not all(0 <= s < state.num_qubits for s in sites):
        raise DomainError(f"invalid site list {sites}")
    if not renormalize:
        if not np.allclose(gate @ gate.conj().T, np.eye(2**k), atol=1e-10):
            raise ContractViolation("non-unitary gate without renormalize flag")

    L = state.num_qubits
    psi = state.amplitudes.reshape((2,) * L)
    psi = np.tensordot(gate.reshape((2,) * (2 * k)), psi, axes=(range(k, 2 * k), sites))
    psi = np.moveaxis(psi, range(k), sites).ravel()
    if renormalize:
        psi = psi / np.linalg.norm(psi)
    return DenseState(psi, L)


def pauli_coefficients(rho: np.ndarray, num_qubits: int) -> np.ndarray:
    """Tr(rho sigma) for every Pauli string, as a (4,)*k tensor.

    Index order matches the site order; rho must be Hermitian so the
    output is real.
    """
    k = num_qubits
    v = rho.reshape((2,) * (2 * k))
    # interleave to (r1, c1, r2, c2, ...) then fuse each (r, c) pair
    order = [ax for i in range(k) for ax in (i, k + i)]
    v = np.transpose(v, order).reshape((4,) * k)
    for i in range(k):
        v = np.moveaxis(np.tensordot(_PAULI_KERNEL, v, axes=([1], [i])), 0, i)
    return v.real


def exact_pauli_spectrum(state: DenseState) -> ProbDist:
    """The normalized Pauli spectrum |Tr(rho sigma)|^2 / 2^L over all 4^L strings."""
    L = state.num_qubits
    if L > MAX_QUBITS_PAULI_SCAN:
        raise CapacityError(f"Pauli scan limited to L <= {MAX_QUBITS_PAULI_SCAN}")
    rho = np.outer(state.amplitudes, state.amplitudes.conj())
    coeffs = pauli_coefficients(rho, L).ravel()
    return ProbDist(coeffs**2 / 2**L, label_space=4**L)


def schmidt_values(state: DenseState, cut: int) -> np.ndarray:
    """Singular values across the bond between sites cut-1 and cut."""
    if not 1 <= cut <= state.num_qubits - 1:
        raise DomainError(f"cut {cut} out of range")
    mat = state.amplitudes.reshape(2**cut, -1)
    return np.linalg.svd(mat, compute_uv=False)


def reduced_density_matrix(state: DenseState, region) -> np.ndarray:
    """Partial trace onto the listed qubits (any subset)."""
    region = sorted(region)
    L = state.num_qubits
    keep = region
    other = [q for q in range(L) if q not in keep]
    psi = state.amplitudes.reshape((2,) * L)
    psi = np.transpose(psi, keep + other).reshape(2 ** len(keep), 2 ** len(other))
    return psi @ psi.conj().T


def bitstring_probs(state: DenseState) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def hadamard_all(state: DenseState) -> DenseState:
    out = state
    for q in range(state.num_qubits):
        out = statevector_apply(out, HADAMARD, [q])
    return out


SCHMIDT_FLOOR = 1e-12


def exact_entanglement_entropy(state: DenseState, cut: int, order) -> EntropyValue:
    lam2 = schmidt_values(state, cut) ** 2
    lam2 = lam2[lam2 > SCHMIDT_FLOOR**2]
    return renyi_entropy(ProbDist(lam2), order)


def exact_sre(state: DenseState, order) -> EntropyValue:
    spectrum = exact_pauli_spectrum(state)
    s = float(renyi_entropy(spectrum, order)) - state.num_qubits * np.log(2)
    return EntropyValue(s)


def exact_pe(state: DenseState, order, basis="Z") -> EntropyValue:
    if basis == "X":
        state = hadamard_all(state)
    elif basis != "Z":
        raise DomainError(f"unknown basis {basis}")
    return renyi_entropy(ProbDist(bitstring_probs(state)), order)


def exact_entropies(state: DenseState, cut: int, order) -> dict:
    """Record {ee, sre, pe_z, pe_x} at the given cut and Renyi order."""
    if state.num_qubits > MAX_QUBITS_DENSE:
        raise CapacityError(f"dense oracle limited to L <= {MAX_QUBITS_DENSE}")
    return {
        "ee": exact_entanglement_entropy(state, cut, order),
        "sre": exact_sre(state, order),
        "pe_z": exact_pe(state, order, "Z"),
        "pe_x": exact_pe(state, order, "X"),
    }


def _restricted_weights(state: DenseState, cut: int):
    """|Tr(rho_A sigma_A)|^2, |Tr(rho_B sigma_B)|^2 and the full-string
    weights d(sigma) = |Tr(rho sigma)|^2, flattened with A-major order."""
    L = state.num_qubits
    rho = np.outer(state.amplitudes, state.amplitudes.conj())
    d = pauli_coefficients(rho, L).reshape(4**cut, 4 ** (L - cut)) ** 2
    rho_a = reduced_density_matrix(state, range(cut))
    rho_b = reduced_density_matrix(state, range(cut, L))
    a = pauli_coefficients(rho_a, cut).ravel() ** 2
    b = pauli_coefficients(rho_b, L - cut).ravel() ** 2
    return a, b, d


def exact_bsmi(state: DenseState, cut: int) -> EntropyValue:
    """The re-weighted stabilizer mutual information I - W~ + S2^SRE by
    direct enumeration over the support of the Pauli spectrum."""
    L = state.num_qubits
    if L > MAX_QUBITS_PAULI_SCAN:
        raise CapacityError(f"Pauli scan limited to L <= {MAX_QUBITS_PAULI_SCAN}")
    a, b, d = _restricted_weights(state, cut)
    # expectations over Pi(sigma) = d / 2^L; the weight cancels the
    # 1/d in each sampled ratio, leaving plain sums over the support
    support = d > 1e-24
    ab = np.outer(a, b)
    i_term = -np.log(np.sum(ab[support]) / 2**L)
    w_term = -np.log(np.sum((ab**2)[support]) / 2**L)
    s2 = float(exact_sre(state, 2))
    return EntropyValue(i_term - w_term + s2)


def exact_bpmi(state: DenseState, cut: int, basis="Z") -> EntropyValue:
    """Classical mutual information of the measurement distribution across the cut."""
    if basis == "X":
        state = hadamard_all(state)
    p = bitstring_probs(state).reshape(2**cut, -1)
    pa, pb = p.sum(axis=1), p.sum(axis=0)
    s = lambda q: float(renyi_entropy(ProbDist(q), 1))
    return EntropyValue(s(pa) + s(pb) - s(p.ravel()))
