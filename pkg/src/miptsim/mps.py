"""Tensor-train pure-state backend with bond-capped SVD truncation.

Tensors are (left bond, physical 2, right bond) complex arrays. A mixed
canonical form is maintained: sites left of the orthogonality center are
left-isometries, sites right of it right-isometries. With unit norm and
the center at site 0 the chain is right-normalized, which is the form
the perfect samplers require.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import EntropyValue, ProbDist, renyi_entropy
from .errors import ContractViolation, DomainError
from .paulis import PAULI_MATS, PauliString

_LOCAL_KETS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
}


@dataclass
class WeakMeasurementSpec:
    """A two-site weak measurement e^{+-beta P} with P = Z (x) I or X (x) X."""

    pauli_op: str  # "ZI" or "XX"
    beta: float
    left_site: int

    def __post_init__(self):
        if self.pauli_op not in ("ZI", "XX"):
            raise DomainError(f"unsupported weak-measurement basis {self.pauli_op!r}")
        if self.beta < 0:
            raise DomainError("measurement strength beta must be >= 0")


def _two_site_pauli(op: str) -> np.ndarray:
    a = PAULI_MATS[3] if op == "ZI" else PAULI_MATS[1]
    b = PAULI_MATS[0] if op == "ZI" else PAULI_MATS[1]
    return np.kron(a, b)


class MpsState:
    def __init__(self, tensors, chi_max: int, cutoff: float = 0.0):
        self.tensors = tensors
        self.chi_max = int(chi_max)
        self.cutoff = float(cutoff)
        self.center = 0
        self.truncation_log: list[float] = []

    # -- construction -------------------------------------------------------
    @classmethod
    def product_state(cls, L: int, local="0", chi_max: int = 64, cutoff: float = 0.0):
        if L < 2:
            raise DomainError("need at least two sites")
        ket = _LOCAL_KETS[local] if isinstance(local, str) else np.asarray(local, complex)
        ket = ket / np.linalg.norm(ket)
        tensors = [ket.reshape(1, 2, 1).astype(complex).copy() for _ in range(L)]
        return cls(tensors, chi_max, cutoff)

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def total_discarded_weight(self) -> float:
        return float(sum(self.truncation_log))

    def copy(self) -> "MpsState":
        out = MpsState([t.copy() for t in self.tensors], self.chi_max, self.cutoff)
        out.center = self.center
        out.truncation_log = list(self.truncation_log)
        return out

    # -- canonical form -----------------------------------------------------
    def _shift_center_right(self):
        c = self.center
        a = self.tensors[c]
        dl, _, dr = a.shape
        q, r = np.linalg.qr(a.reshape(dl * 2, dr))
        self.tensors[c] = q.reshape(dl, 2, -1)
        self.tensors[c + 1] = np.tensordot(r, self.tensors[c + 1], axes=(1, 0))
        self.center = c + 1

    def _shift_center_left(self):
        c = self.center
        a = self.tensors[c]
        dl, _, dr = a.shape
        # RQ decomposition via QR of the conjugate transpose
        q, r = np.linalg.qr(a.reshape(dl, 2 * dr).conj().T)
        self.tensors[c] = q.conj().T.reshape(-1, 2, dr)
        self.tensors[c - 1] = np.tensordot(self.tensors[c - 1], r.conj().T, axes=(2, 0))
        self.center = c - 1

    def move_center(self, site: int):
        while self.center < site:
            self._shift_center_right()
        while self.center > site:
            self._shift_center_left()

    def right_normalize(self):
        self.move_center(0)
        # absorb the residual norm (and phase) into the first tensor
        nrm = np.linalg.norm(self.tensors[0])
        self.tensors[0] = self.tensors[0] / nrm

    def norm(self) -> float:
        c = self.tensors[self.center]
        return float(np.linalg.norm(c))

    # -- gate / measurement application --------------------------------------
    def _split_theta(self, theta, left_site: int):
        """SVD-split a (Dl, 2, ..., 2, Dr) block back into site tensors,
        truncating each new bond to chi_max and renormalizing."""
        k = theta.ndim - 2
        dl = theta.shape[0]
        site = left_site
        for _ in range(k - 1):
            dr_rest = int(np.prod(theta.shape[2:]))
            mat = theta.reshape(dl * 2, dr_rest)
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
            keep = min(self.chi_max, s.size)
            if self.cutoff > 0 and s[0] > 0:
                keep = min(keep, int(np.sum(s > self.cutoff * s[0])))
            keep = max(keep, 1)
            self.truncation_log.append(float(np.sum(s[keep:] ** 2)))
            s = s[:keep]
            self.tensors[site] = u[:, :keep].reshape(dl, 2, keep)
            theta = (s[:, None] * vh[:keep]).reshape((keep, 2) + theta.shape[3:])
            dl = keep
            site += 1
        self.tensors[site] = theta.reshape(dl, 2, -1)
        self.center = site
        nrm = np.linalg.norm(self.tensors[site])
        if nrm == 0:
            raise DomainError("state annihilated by operator")
        self.tensors[site] = self.tensors[site] / nrm

    def apply_operator(self, op: np.ndarray, left_site: int, unitary: bool = True):
        """Apply a k-site operator (2^k x 2^k) on contiguous sites starting
        at left_site. Non-unitary operators are renormalized after the split."""
        op = np.asarray(op, dtype=complex)
        k = int(round(np.log2(op.shape[0])))
        if op.shape != (2**k, 2**k) or k not in (1, 2, 3):
            raise DomainError(f"operator shape {op.shape} unsupported")
        L = self.num_sites
        if not 0 <= left_site <= L - k:
            raise DomainError(f"operator at {left_site} overflows the chain")
        if unitary and not np.allclose(
            op @ op.conj().T, np.eye(2**k), atol=1e-10
        ):
            raise ContractViolation("non-unitary operator without renormalize path")

        if k == 1:
            self.move_center(left_site)
            a = np.einsum("st,atb->asb", op, self.tensors[left_site])
            if not unitary:
                nrm = np.linalg.norm(a)
                if nrm == 0:
                    raise DomainError("state annihilated by operator")
                a = a / nrm
            self.tensors[left_site] = a
            return

        self.move_center(left_site)
        theta = self.tensors[left_site]
        for j in range(1, k):
            theta = np.tensordot(theta, self.tensors[left_site + j], axes=(theta.ndim - 1, 0))
        # theta: (Dl, s1.., sk, Dr) ; contract the operator over physical legs
        phys = tuple(range(1, k + 1))
        gate = op.reshape((2,) * (2 * k))
        theta = np.tensordot(gate, theta, axes=(tuple(range(k, 2 * k)), phys))
        theta = np.moveaxis(theta, range(k), phys)
        self._split_theta(theta, left_site)

    def apply_unitary(self, gate: np.ndarray, left_site: int):
        self.apply_operator(gate, left_site, unitary=True)

    def expectation_two_site(self, op: np.ndarray, left_site: int) -> float:
        """<psi| op |psi> for a two-site Hermitian operator; O(chi^3)."""
        self.move_center(left_site)
        theta = np.tensordot(
            self.tensors[left_site], self.tensors[left_site + 1], axes=(2, 0)
        )
        val = np.einsum(
            "astb,stuv,auvb->", theta.conj(),
            op.reshape(2, 2, 2, 2), theta, optimize=True
        )
        return float(val.real)

    def weak_measure(self, spec: WeakMeasurementSpec, rng):
        """Kraus update e^{+-beta P}/sqrt(norm) with outcome probability
        (1 +- tanh(2 beta) <P>)/2; returns +-1."""
        L = self.num_sites
        if not 0 <= spec.left_site <= L - 2:
            raise DomainError("weak measurement overflows the chain")
        p_mat = _two_site_pauli(spec.pauli_op)
        expval = self.expectation_two_site(p_mat, spec.left_site)
        q_plus = 0.5 * (1.0 + np.tanh(2.0 * spec.beta) * expval)
        outcome = 1 if rng.random() < q_plus else -1
        if spec.beta == 0:
            return outcome
        kraus = np.cosh(spec.beta) * np.eye(4) + outcome * np.sinh(spec.beta) * p_mat
        self.apply_operator(kraus, spec.left_site, unitary=False)
        return outcome

    def projective_measure(self, word: str, left_site: int, rng):
        """Born-rule projective measurement of a 1- or 2-site Pauli word."""
        k = len(word)
        mats = [PAULI_MATS["IXYZ".index(c)] for c in word]
        p_mat = mats[0]
        for m in mats[1:]:
            p_mat = np.kron(p_mat, m)
        if k == 1:
            self.move_center(left_site)
            a = self.tensors[left_site]
            expval = float(
                np.einsum("asb,st,atb->", a.conj(), p_mat, a, optimize=True).real
            )
        else:
            expval = self.expectation_two_site(p_mat, left_site)
        p_plus = min(max(0.5 * (1.0 + expval), 0.0), 1.0)
        outcome = 1 if rng.random() < p_plus else -1
        proj = 0.5 * (np.eye(2**k) + outcome * p_mat)
        self.apply_operator(proj, left_site, unitary=False)
        return outcome

    # -- observables ----------------------------------------------------------
    def schmidt_values(self, cut: int) -> np.ndarray:
        if not 1 <= cut <= self.num_sites - 1:
            raise DomainError(f"cut {cut} out of range")
        self.move_center(cut - 1)
        a = self.tensors[cut - 1]
        dl, _, dr = a.shape
        return np.linalg.svd(a.reshape(dl * 2, dr), compute_uv=False)

    def entanglement_entropy(self, cut: int, order=1) -> EntropyValue:
        lam2 = self.schmidt_values(cut) ** 2
        lam2 = lam2[lam2 > 1e-24]
        return renyi_entropy(ProbDist(lam2), order)

    def pauli_expectation(self, pauli) -> float:
        letters = pauli.letters if isinstance(pauli, PauliString) else np.asarray(pauli)
        if len(letters) != self.num_sites:
            raise DomainError("Pauli word length must match the chain")
        sign = pauli.sign if isinstance(pauli, PauliString) else 1
        env = np.ones((1, 1), dtype=complex)
        for a, c in zip(self.tensors, letters):
            env = np.einsum(
                "ab,asc,st,btd->cd", env, a.conj(), PAULI_MATS[c], a, optimize=True
            )
        return float(sign * env[0, 0].real)

    def to_statevector(self) -> np.ndarray:
        if self.num_sites > 16:
            raise DomainError("statevector export limited to 16 sites")
        psi = self.tensors[0]
        for a in self.tensors[1:]:
            psi = np.tensordot(psi, a, axes=(psi.ndim - 1, 0))
        return psi.reshape(-1)

    def overlap(self, other: "MpsState") -> complex:
        env = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            env = np.einsum("ab,asc,bsd->cd", env, a.conj(), b, optimize=True)
        return complex(env[0, 0])

    def check_right_normalized(self, tol: float = 1e-8) -> bool:
        for a in self.tensors[1:] if self.center == 0 else []:
            dl = a.shape[0]
            g = np.einsum("asb,csb->ac", a, a.conj())
            if not np.allclose(g, np.eye(dl), atol=tol):
                return False
        return self.center == 0 and abs(self.norm() - 1) < tol


# -- module-level operation wrappers -----------------------------------------

def new_product_state(L: int, local="0", chi_max: int = 64, cutoff: float = 0.0):
    return MpsState.product_state(L, local, chi_max, cutoff)


def apply_unitary(state: MpsState, gate, left_site: int) -> MpsState:
    state.apply_unitary(gate, left_site)
    return state


def weak_measure(state: MpsState, spec: WeakMeasurementSpec, rng):
    outcome = state.weak_measure(spec, rng)
    return state, outcome


def projective_measure(state: MpsState, word: str, left_site: int, rng):
    outcome = state.projective_measure(word, left_site, rng)
    return state, outcome


def entanglement_entropy(state: MpsState, cut: int, order=1) -> EntropyValue:
    return state.entanglement_entropy(cut, order)


def pauli_expectation(state: MpsState, pauli) -> float:
    return state.pauli_expectation(pauli)
