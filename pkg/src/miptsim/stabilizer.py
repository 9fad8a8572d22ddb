"""Bit-packed stabilizer tableau backend.

Rows store Pauli operators as i^ph * prod_j X_j^{x_j} Z_j^{z_j} with the
global i-exponent ph tracked mod 4; Hermitian rows satisfy
ph == (#Y letters) + 2*(sign bit) mod 4. Destabilizer rows are kept
alongside the stabilizers so measurement outcomes resolve in O(n^2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import gf2
from .entropy import EntropyValue
from .errors import DomainError
from .paulis import PAULI_CHARS, pauli_dense_on_sites

_ONE = np.uint64(1)
_LN2 = np.log(2)


def _parity_bits(v: int) -> int:
    return bin(v).count("1") & 1


def _mul_small(p1, p2):
    """Product of two few-qubit Paulis in (ph, x, z) int encoding."""
    ph = (p1[0] + p2[0] + 2 * _parity_bits(p1[2] & p2[1])) & 3
    return (ph, p1[1] ^ p2[1], p1[2] ^ p2[2])


def _word_to_pxz(word: str, neg: int = 0):
    """'XZ' etc (one letter per gate site) -> (ph, x, z) encoding."""
    x = z = ys = 0
    for bit, c in enumerate(word):
        p = PAULI_CHARS.index(c)
        if p in (1, 2):
            x |= 1 << bit
        if p in (2, 3):
            z |= 1 << bit
        ys += p == 2
    return ((ys + 2 * neg) & 3, x, z)


@dataclass(frozen=True)
class CliffordGate:
    """A 1- or 2-site Clifford, stored as lookup tables over the input
    Pauli bit pattern on its support."""

    name: str
    sites: tuple
    dph: np.ndarray
    newx: np.ndarray
    newz: np.ndarray

    @property
    def tableau_action(self):
        return self.dph, self.newx, self.newz

    def at(self, *sites) -> "CliffordGate":
        if len(sites) != len(self.sites):
            raise DomainError("site count mismatch")
        return replace(self, sites=tuple(sites))


def _gate_from_images(name, sites, images) -> CliffordGate:
    """Build the LUT from the conjugation images of X_a, Z_a (, X_b, Z_b).

    images: list of (ph, x, z) small-Pauli encodings, one per generator.
    """
    k = len(sites)
    size = 1 << (2 * k)
    dph = np.zeros(size, dtype=np.uint8)
    newx = np.zeros(size, dtype=np.uint8)
    newz = np.zeros(size, dtype=np.uint8)
    for idx in range(size):
        # pattern bits, most significant first: xa, za (, xb, zb)
        acc = (0, 0, 0)
        for g in range(2 * k):
            if (idx >> (2 * k - 1 - g)) & 1:
                acc = _mul_small(acc, images[g])
        dph[idx], newx[idx], newz[idx] = acc
    return CliffordGate(name, tuple(sites), dph, newx, newz)


def _images_from_unitary(u: np.ndarray, k: int):
    """Decompose U Q U^dag for Q in (X_1, Z_1, ..) into (ph, x, z) images."""
    images = []
    for site in range(k):
        for letter in (1, 3):
            word = [0] * k
            word[site] = letter
            q = pauli_dense_on_sites(word, k)
            m = u @ q @ u.conj().T
            for cand in range(4**k):
                letters = [(cand >> (2 * j)) & 3 for j in range(k)]
                p = pauli_dense_on_sites(letters, k)
                c = np.trace(p.conj().T @ m) / 2**k
                if abs(abs(c) - 1) < 1e-9:
                    pxz = _word_to_pxz(
                        "".join(PAULI_CHARS[l] for l in letters), neg=int(c.real < -0.5)
                    )
                    images.append(pxz)
                    break
            else:
                raise DomainError("matrix is not Clifford")
    return images


@lru_cache(maxsize=None)
def _named_gate_template(name: str) -> CliffordGate:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    cx = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    mats = {"H": (h, 1), "S": (s, 1), "CX": (cx, 2), "CZ": (cz, 2)}
    if name not in mats:
        raise DomainError(f"unknown gate name {name!r}")
    u, k = mats[name]
    return _gate_from_images(name, tuple(range(k)), _images_from_unitary(u, k))


def clifford_gate(name: str, sites) -> CliffordGate:
    """Named gate (H, S, CX, CZ) bound to the given sites."""
    return _named_gate_template(name).at(*sites)


@lru_cache(maxsize=None)
def _rotation_template(word: str, dagger: bool) -> CliffordGate:
    """exp(+-i pi/4 P) for a 1- or 2-letter Pauli word P."""
    k = len(word)
    p = _word_to_pxz(word)
    images = []
    for g in range(2 * k):
        site, letter = divmod(g, 2)
        q = _word_to_pxz(
            "".join("XZ"[letter] if j == site else "I" for j in range(k))
        )
        anti = _parity_bits(p[1] & q[2]) ^ _parity_bits(p[2] & q[1])
        if anti:
            # e^{i pi/4 P} Q e^{-i pi/4 P} = i P Q (conjugate: -i P Q)
            pref = (3, 0, 0) if dagger else (1, 0, 0)
            q = _mul_small(_mul_small(pref, p), q)
        images.append(q)
    name = ("rot-" if not dagger else "rotdg-") + word
    return _gate_from_images(name, tuple(range(k)), images)


def pauli_rotation_gate(word: str, sites, dagger: bool = False) -> CliffordGate:
    return _rotation_template(word, dagger).at(*sites)


def random_two_qubit_clifford(rng, sites=(0, 1)) -> CliffordGate:
    """Uniform over the 11520 two-qubit Cliffords modulo global phase.

    Samples the images of X_a, Z_a, X_b, Z_b by rejection: a uniform
    symplectic image pair per qubit plus independent sign bits.
    """
    def anti(p, q):
        return _parity_bits(p[1] & q[2]) ^ _parity_bits(p[2] & q[1])

    def draw_xz():
        # uniform non-identity two-qubit Pauli as (ph, x, z), sign +
        v = int(rng.integers(1, 16))
        x, z = v & 3, (v >> 2) & 3
        return (bin(x & z).count("1") & 3, x, z)

    while True:
        a1 = draw_xz()
        b1 = draw_xz()
        if anti(a1, b1):
            break
    while True:
        a2 = draw_xz()
        if not anti(a2, a1) and not anti(a2, b1):
            break
    while True:
        b2 = draw_xz()
        if not anti(b2, a1) and not anti(b2, b1) and anti(b2, a2):
            break
    images = []
    for img in (a1, b1, a2, b2):
        if rng.integers(0, 2):
            img = ((img[0] + 2) & 3, img[1], img[2])
        images.append(img)
    return _gate_from_images("Random2Q", tuple(sites), images)


def local_pauli_packed(n: int, sites, word: str):
    """Pack a Pauli supported on the given sites into row form (ph, x, z)."""
    w = gf2.n_words(n)
    x = np.zeros(w, dtype=np.uint64)
    z = np.zeros(w, dtype=np.uint64)
    ph = 0
    for site, c in zip(sites, word):
        p = PAULI_CHARS.index(c)
        wd, b = divmod(site, 64)
        if p in (1, 2):
            x[wd] |= _ONE << np.uint64(b)
        if p in (2, 3):
            z[wd] |= _ONE << np.uint64(b)
        ph += p == 2
    return ph & 3, x, z


class StabilizerTableau:
    """Pure-state tableau: n destabilizer rows then n stabilizer rows."""

    def __init__(self, num_qubits: int, basis: str = "Z"):
        if num_qubits < 1:
            raise DomainError("need at least one qubit")
        n = self.num_qubits = num_qubits
        w = self.words = gf2.n_words(n)
        self.x = np.zeros((2 * n, w), dtype=np.uint64)
        self.z = np.zeros((2 * n, w), dtype=np.uint64)
        self.ph = np.zeros(2 * n, dtype=np.uint8)
        eye = gf2.pack_bits(np.eye(n, dtype=np.uint8))
        if basis == "Z":
            self.x[:n] = eye   # destabilizers X_i
            self.z[n:] = eye   # stabilizers Z_i
        elif basis == "X":
            self.z[:n] = eye
            self.x[n:] = eye
        else:
            raise DomainError(f"unknown basis {basis!r}")

    # -- spec field views -------------------------------------------------
    @property
    def x_block(self) -> np.ndarray:
        """Stabilizer X-block T_X as an n x n bit matrix."""
        n = self.num_qubits
        return gf2.unpack_bits(self.x[n:], n)

    @property
    def z_block(self) -> np.ndarray:
        n = self.num_qubits
        return gf2.unpack_bits(self.z[n:], n)

    @property
    def phases(self) -> np.ndarray:
        """Stabilizer sign bits (0 -> +, 1 -> -)."""
        n = self.num_qubits
        ys = np.bitwise_count(self.x[n:] & self.z[n:]).sum(axis=1)
        signs = (self.ph[n:].astype(np.int64) - ys) % 4
        if np.any(signs % 2):
            raise AssertionError("non-Hermitian stabilizer row")
        return (signs // 2).astype(np.uint8)

    def copy(self) -> "StabilizerTableau":
        out = object.__new__(StabilizerTableau)
        out.num_qubits, out.words = self.num_qubits, self.words
        out.x, out.z, out.ph = self.x.copy(), self.z.copy(), self.ph.copy()
        return out

    # -- internals ---------------------------------------------------------
    def _anticommuting(self, xq, zq, lo, hi) -> np.ndarray:
        a = np.bitwise_count(self.x[lo:hi] & zq).sum(axis=1)
        a ^= np.bitwise_count(self.z[lo:hi] & xq).sum(axis=1)
        return np.nonzero(a & 1)[0] + lo

    def _mul_rows_by(self, rows, xp, zp, php):
        """row_r <- row_r * pivot, with the pivot on the right."""
        t = np.bitwise_count(self.z[rows] & xp).sum(axis=1).astype(np.int64)
        self.ph[rows] = (self.ph[rows].astype(np.int64) + php + 2 * t) % 4
        self.x[rows] ^= xp
        self.z[rows] ^= zp

    def apply_gate(self, gate: CliffordGate) -> None:
        sites = gate.sites
        if not all(0 <= s < self.num_qubits for s in sites):
            raise DomainError(f"gate sites {sites} out of range")
        k = len(sites)
        idx = np.zeros(2 * self.num_qubits, dtype=np.int64)
        for j, site in enumerate(sites):
            w, b = divmod(site, 64)
            bshift = np.uint64(b)
            xb = ((self.x[:, w] >> bshift) & _ONE).astype(np.int64)
            zb = ((self.z[:, w] >> bshift) & _ONE).astype(np.int64)
            idx |= xb << (2 * k - 1 - 2 * j)
            idx |= zb << (2 * k - 2 - 2 * j)
        self.ph = ((self.ph.astype(np.int64) + gate.dph[idx]) % 4).astype(np.uint8)
        nx, nz = gate.newx[idx], gate.newz[idx]
        for j, site in enumerate(sites):
            w, b = divmod(site, 64)
            bshift = np.uint64(b)
            mask = ~(_ONE << bshift)
            self.x[:, w] = (self.x[:, w] & mask) | (
                ((nx >> j) & 1).astype(np.uint64) << bshift
            )
            self.z[:, w] = (self.z[:, w] & mask) | (
                ((nz >> j) & 1).astype(np.uint64) << bshift
            )

    def measure(self, sites, word: str, rng) -> int:
        """Projectively measure the Pauli given by (sites, word); returns +-1."""
        n = self.num_qubits
        phq, xq, zq = local_pauli_packed(n, sites, word)
        anti_stab = self._anticommuting(xq, zq, n, 2 * n)
        if anti_stab.size:
            p = int(anti_stab[0])
            others = np.concatenate(
                [self._anticommuting(xq, zq, 0, n), anti_stab[1:]]
            ).astype(np.int64)
            if others.size:
                self._mul_rows_by(others, self.x[p], self.z[p], int(self.ph[p]))
            # old stabilizer row becomes the paired destabilizer
            d = p - n
            self.x[d], self.z[d], self.ph[d] = (
                self.x[p].copy(),
                self.z[p].copy(),
                self.ph[p],
            )
            outcome = 1 if rng.integers(0, 2) == 0 else -1
            self.x[p], self.z[p] = xq.copy(), zq.copy()
            self.ph[p] = (phq + (2 if outcome < 0 else 0)) & 3
            return outcome
        # deterministic: accumulate the stabilizer product matching P
        anti_destab = self._anticommuting(xq, zq, 0, n)
        acc_x = np.zeros_like(xq)
        acc_z = np.zeros_like(zq)
        acc_ph = 0
        for i in anti_destab:
            srow = int(i) + n
            t = int(np.bitwise_count(acc_z & self.x[srow]).sum()) & 1
            acc_ph = (acc_ph + int(self.ph[srow]) + 2 * t) & 3
            acc_x ^= self.x[srow]
            acc_z ^= self.z[srow]
        if not (np.array_equal(acc_x, xq) and np.array_equal(acc_z, zq)):
            raise AssertionError("deterministic measurement reconstruction failed")
        diff = (acc_ph - phq) % 4
        if diff == 0:
            return 1
        if diff == 2:
            return -1
        raise AssertionError("non-Hermitian phase in measurement")

    # -- consistency check (tests / debug) ---------------------------------
    def verify(self) -> None:
        n = self.num_qubits
        xb = gf2.unpack_bits(self.x[n:], n).astype(np.int64)
        zb = gf2.unpack_bits(self.z[n:], n).astype(np.int64)
        sym = (xb @ zb.T + zb @ xb.T) % 2
        if np.any(sym):
            raise AssertionError("stabilizer rows do not commute")
        if gf2.gf2_rank(np.concatenate([xb, zb], axis=1) % 2) != n:
            raise AssertionError("stabilizer rows not independent")
        self.phases  # raises if any row is non-Hermitian


# -- entropy operations -----------------------------------------------------

def new_tableau(n: int, basis: str = "Z") -> StabilizerTableau:
    return StabilizerTableau(n, basis)


def apply_clifford(tab: StabilizerTableau, gate: CliffordGate) -> StabilizerTableau:
    tab.apply_gate(gate)
    return tab


def measure_pauli(tab: StabilizerTableau, sites, word: str, rng):
    outcome = tab.measure(sites, word, rng)
    return tab, outcome


def gf2_rank(m) -> int:
    return gf2.gf2_rank(m)


def stabilizer_pe(tab: StabilizerTableau, basis: str = "Z") -> EntropyValue:
    """Participation entropy: rank of the X block (Z basis) in units of log 2."""
    n = tab.num_qubits
    block = tab.x[n:] if basis == "Z" else tab.z[n:]
    if basis not in ("Z", "X"):
        raise DomainError(f"unknown basis {basis!r}")
    return EntropyValue(gf2.rank_packed(block, n) * _LN2)


def _region_complement(n, region):
    region = sorted(region)
    if not region:
        raise DomainError("empty region")
    comp = sorted(set(range(n)) - set(region))
    return region, comp


def _bits_at(packed: np.ndarray, cols) -> np.ndarray:
    cols = np.asarray(cols, dtype=np.int64)
    words = cols // 64
    shifts = (cols % 64).astype(np.uint64)
    return ((packed[:, words] >> shifts) & _ONE).astype(np.uint8)


def stabilizer_pe_subsystem(tab, region, basis: str = "Z") -> EntropyValue:
    """PE of the reduced state on `region`: |A| minus the number of
    independent diagonal-type elements of the stabilizer subgroup
    supported entirely on the region."""
    if basis not in ("Z", "X"):
        raise DomainError(f"unknown basis {basis!r}")
    n = tab.num_qubits
    region, comp = _region_complement(n, region)
    xs, zs = tab.x[n:], tab.z[n:]
    offdiag = xs if basis == "Z" else zs
    # a generator combination lies in G_A and is diagonal-type iff it
    # kills every complement column and the off-diagonal columns on A
    blocks = [_bits_at(offdiag, region)]
    if comp:
        blocks.append(_bits_at(xs, comp))
        blocks.append(_bits_at(zs, comp))
    rank = gf2.gf2_rank(np.concatenate(blocks, axis=1))
    k_diag = n - rank
    return EntropyValue((len(region) - k_diag) * _LN2)


def stabilizer_ee(tab: StabilizerTableau, region) -> EntropyValue:
    """Entanglement entropy of a region: rank of the region-restricted
    generator matrix minus the region size, in units of log 2."""
    n = tab.num_qubits
    region, _ = _region_complement(n, region)
    m = np.concatenate(
        [_bits_at(tab.x[n:], region), _bits_at(tab.z[n:], region)], axis=1
    )
    return EntropyValue((gf2.gf2_rank(m) - len(region)) * _LN2)


def stabilizer_bpmi(tab: StabilizerTableau, cut: int, basis: str = "Z") -> EntropyValue:
    n = tab.num_qubits
    if not 1 <= cut <= n - 1:
        raise DomainError(f"cut {cut} out of range")
    pe_a = float(stabilizer_pe_subsystem(tab, range(cut), basis))
    pe_b = float(stabilizer_pe_subsystem(tab, range(cut, n), basis))
    pe = float(stabilizer_pe(tab, basis))
    return EntropyValue(pe_a + pe_b - pe)
