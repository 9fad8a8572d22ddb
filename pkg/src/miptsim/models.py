"""Circuit ensembles as backend-agnostic layer generators.

Four models are provided: a weak-measurement hybrid circuit built from a
self-dual gate ensemble, its projective Clifford limit, a random-Clifford
brickwork, and a quantum-automaton brickwork. A layer plan is an ordered
instruction list replayable on any backend; all randomness comes from the
rng passed in, so plans are reproducible from seeds.

Also implements the Z_i <-> X_i X_{i+1} duality map on Pauli words and
the closure checks that pin the critical measurement bias at p = 0.5.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, DomainError
from .paulis import PAULI_CHARS, PauliString, letters_from_str

MODELS = ("SelfDualHybrid", "CliffordDual", "RandomClifford", "QuantumAutomaton")

# rotation generators e^{+-i pi/4 P}; footprint = number of sites spanned
SELF_DUAL_WORDS = ("Z", "XX", "ZZ", "XIX")
_FOOTPRINT = {"Z": 1, "XX": 2, "ZZ": 2, "XIX": 3}
SELF_DUAL_GATES = tuple(
    w + s for w in SELF_DUAL_WORDS for s in ("+", "-")
)


@dataclass(frozen=True)
class Instruction:
    """One primitive circuit event.

    kind: 'rot' (self-dual rotation gate), 'weak' (weak measurement,
    name ZI or XX), 'projective' (Pauli measurement, name Z or XX),
    'clifford2' (random two-qubit Clifford, payload = tableau LUT),
    'qa' (automaton CX+CZ pair, name L/R = control side), 'gate1'
    (named single-site gate). site is the leftmost site acted on.
    """

    kind: str
    name: str
    site: int
    payload: tuple = None


@dataclass
class LayerPlan:
    instructions: list

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)

    def count(self, kind: str) -> int:
        return sum(1 for ins in self.instructions if ins.kind == kind)


@dataclass
class CircuitSpec:
    """Full description of one circuit model instance.

    with_replacement controls whether the hybrid model's random gate and
    measurement positions may repeat within a round; qa_cz_first flips
    the automaton gate's internal CX/CZ order.
    """

    model: str
    L: int
    p: float
    beta: float = None
    gamma: float = None
    boundary: str = "open"
    seed: int = 0
    with_replacement: bool = True
    qa_cz_first: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.boundary != "open":
            raise ConfigError("only open boundaries are supported")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p = {self.p} outside [0, 1]")
        if self.L < 4 or self.L % 2 != 0:
            raise ConfigError("need an even number of sites, L >= 4")
        if self.model == "SelfDualHybrid":
            if self.beta is None or self.beta < 0:
                raise ConfigError("SelfDualHybrid needs beta >= 0")
            if self.gamma is not None:
                raise ConfigError("gamma is not a SelfDualHybrid parameter")
        elif self.model == "CliffordDual":
            if self.gamma is None or not 0.0 <= self.gamma <= 1.0:
                raise ConfigError("CliffordDual needs gamma in [0, 1]")
            if self.beta is not None:
                raise ConfigError("beta is not a CliffordDual parameter")
        elif self.beta is not None or self.gamma is not None:
            raise ConfigError(f"{self.model} takes neither beta nor gamma")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        return cls(**json.loads(text))

    def layer(self, t: int, rng) -> LayerPlan:
        if self.model == "SelfDualHybrid":
            return self_dual_hybrid_layer(self, rng)
        if self.model == "CliffordDual":
            return clifford_dual_layer(self, rng)
        if self.model == "RandomClifford":
            return random_clifford_layer(self, t, rng)
        return qa_layer(self, t, rng)


def _unitary_round(spec: CircuitSpec, rng) -> list:
    """L/3 rotation gates at random positions."""
    L = spec.L
    n_gates = L // 3
    gates = [SELF_DUAL_GATES[g] for g in rng.integers(0, 8, size=n_gates)]
    if spec.with_replacement:
        sites = [
            int(rng.integers(0, L - _FOOTPRINT[g[:-1]] + 1)) for g in gates
        ]
    else:
        # distinct positions, restricted to the widest common range
        sites = [int(s) for s in rng.choice(L - 2, size=n_gates, replace=False)]
    return [Instruction("rot", g, s) for g, s in zip(gates, sites)]


def _measurement_sites(spec: CircuitSpec, count: int, rng) -> list:
    L = spec.L
    if spec.with_replacement:
        return [int(s) for s in rng.integers(0, L - 1, size=count)]
    return [int(s) for s in rng.choice(L - 1, size=count, replace=False)]


def self_dual_hybrid_layer(spec: CircuitSpec, rng) -> LayerPlan:
    """One unitary round (L/3 gates) + one weak-measurement round (L/2
    measurements, P = Z w.p. p else XX, strength beta)."""
    if spec.model != "SelfDualHybrid":
        raise ConfigError(f"wrong model {spec.model}")
    ins = _unitary_round(spec, rng)
    sites = _measurement_sites(spec, spec.L // 2, rng)
    for s in sites:
        basis = "ZI" if rng.random() < spec.p else "XX"
        ins.append(Instruction("weak", basis, s))
    return LayerPlan(ins)


def clifford_dual_layer(spec: CircuitSpec, rng) -> LayerPlan:
    """Projective limit: same unitary round; floor(L*gamma/2) distinct
    neighboring pairs measured projectively in Z (left site) or XX."""
    if spec.model != "CliffordDual":
        raise ConfigError(f"wrong model {spec.model}")
    ins = _unitary_round(spec, rng)
    n_pairs = int(spec.L * spec.gamma / 2)
    pairs = rng.choice(spec.L - 1, size=n_pairs, replace=False)
    for s in pairs:
        basis = "Z" if rng.random() < spec.p else "XX"
        ins.append(Instruction("projective", basis, int(s)))
    return LayerPlan(ins)


def random_clifford_layer(spec: CircuitSpec, t: int, rng) -> LayerPlan:
    """Brickwork of uniform two-qubit Cliffords, then per-qubit Z
    measurements with probability p."""
    if spec.model != "RandomClifford":
        raise ConfigError(f"wrong model {spec.model}")
    from .stabilizer import random_two_qubit_clifford

    ins = []
    for s in range(t % 2, spec.L - 1, 2):
        g = random_two_qubit_clifford(rng, sites=(s, s + 1))
        lut = (tuple(int(v) for v in g.dph),
               tuple(int(v) for v in g.newx),
               tuple(int(v) for v in g.newz))
        ins.append(Instruction("clifford2", "Random2Q", s, lut))
    for q in range(spec.L):
        if rng.random() < spec.p:
            ins.append(Instruction("projective", "Z", q))
    return LayerPlan(ins)


def qa_layer(spec: CircuitSpec, t: int, rng) -> LayerPlan:
    """Brickwork of automaton gates (CX with random control side, then CZ);
    after every second layer each qubit is measured in Z w.p. p, each
    measurement followed by a Hadamard."""
    if spec.model != "QuantumAutomaton":
        raise ConfigError(f"wrong model {spec.model}")
    ins = []
    for s in range(t % 2, spec.L - 1, 2):
        side = "L" if rng.random() < 0.5 else "R"
        ins.append(Instruction("qa", side, s))
    if t % 2 == 1:
        for q in range(spec.L):
            if rng.random() < spec.p:
                ins.append(Instruction("projective", "Z", q))
                ins.append(Instruction("gate1", "H", q))
    return LayerPlan(ins)


# -- duality map --------------------------------------------------------------
#
# The dual of Z_i is X_i X_{i+1} and the dual of X_i X_{i+1} is Z_{i+1};
# both extend multiplicatively over the algebra the generators span.

def _word_rep(letters) -> tuple:
    """(phase mod 4, x bits, z bits) with the word equal to i^ph X^x Z^z."""
    x = z = 0
    ph = 0
    for i, p in enumerate(letters):
        if p in (1, 2):
            x |= 1 << i
        if p in (2, 3):
            z |= 1 << i
        if p == 2:
            ph += 1
    return ph % 4, x, z


def _mul_rep(a: tuple, b: tuple) -> tuple:
    pha, xa, za = a
    phb, xb, zb = b
    ph = (pha + phb + 2 * bin(za & xb).count("1")) % 4
    return ph, xa ^ xb, za ^ zb


def _rep_to_pauli(rep: tuple, L: int) -> PauliString:
    ph, x, z = rep
    letters = np.zeros(L, dtype=np.uint8)
    n_y = 0
    for i in range(L):
        xb, zb = (x >> i) & 1, (z >> i) & 1
        letters[i] = (0, 1, 3, 2)[xb + 2 * zb] if (xb or zb) else 0
        n_y += xb & zb
    # i^ph X^x Z^z = i^(ph - #Y) * letter word
    residual = (ph - n_y) % 4
    if residual == 0:
        sign = 1
    elif residual == 2:
        sign = -1
    else:
        raise DomainError("duality image is not a Hermitian Pauli")
    return PauliString(letters, sign=sign)


def _solve_gf2(mat: np.ndarray, rhs: np.ndarray):
    """One solution x of mat @ x = rhs over GF(2), or None."""
    rows, cols = mat.shape
    aug = np.concatenate([mat, rhs[:, None]], axis=1).astype(np.uint8)
    pivots = []
    r = 0
    for c in range(cols):
        hit = np.nonzero(aug[r:, c])[0]
        if hit.size == 0:
            continue
        aug[[r, r + hit[0]]] = aug[[r + hit[0], r]]
        for rr in np.nonzero(aug[:, c])[0]:
            if rr != r:
                aug[rr] ^= aug[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if np.any(aug[r:, -1]):
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for i, c in enumerate(pivots):
        x[c] = aug[i, -1]
    return x


def duality_map(pauli: PauliString) -> PauliString:
    """Image of a Pauli word under the bond-shifting duality.

    The word must decompose over the generators {Z_i, X_i X_{i+1}}; the
    image is the product of the generator images in ascending site order.
    Words whose image would need Z or XX past the right boundary raise.
    """
    letters = pauli.letters
    L = len(letters)
    # generator symplectic vectors: columns = [x_0..x_{L-1}, z_0..z_{L-1}]
    gens = []  # (kind, site)
    cols = []
    for i in range(L):
        v = np.zeros(2 * L, dtype=np.uint8)
        v[L + i] = 1
        gens.append(("Z", i))
        cols.append(v)
    for i in range(L - 1):
        v = np.zeros(2 * L, dtype=np.uint8)
        v[i] = v[i + 1] = 1
        gens.append(("XX", i))
        cols.append(v)
    _, x, z = _word_rep(letters)
    rhs = np.array(
        [(x >> i) & 1 for i in range(L)] + [(z >> i) & 1 for i in range(L)],
        dtype=np.uint8,
    )
    sol = _solve_gf2(np.array(cols, dtype=np.uint8).T, rhs)
    if sol is None:
        raise DomainError("word is outside the span of {Z_i, X_i X_{i+1}}")
    chosen = [gens[k] for k in np.nonzero(sol)[0]]
    # canonical order: ascending site, Z before XX on ties
    chosen.sort(key=lambda g: (g[1], g[0] != "Z"))

    def gen_rep(kind, i):
        w = np.zeros(L, dtype=np.uint8)
        if kind == "Z":
            w[i] = 3
        else:
            w[i] = w[i + 1] = 1
        return _word_rep(w)

    def image_rep(kind, i):
        w = np.zeros(L, dtype=np.uint8)
        if kind == "Z":
            if i + 1 >= L:
                raise DomainError(f"dual of Z_{i} overflows the chain")
            w[i] = w[i + 1] = 1
        else:
            w[i + 1] = 3
        return _word_rep(w)

    src = (0, 0, 0)
    img = (0, 0, 0)
    for kind, i in chosen:
        src = _mul_rep(src, gen_rep(kind, i))
        img = _mul_rep(img, image_rep(kind, i))
    # src equals the input word up to i^phi; carry the same phi into the image
    ph_in, _, _ = _word_rep(letters)
    phi = (src[0] - ph_in) % 4
    out = _rep_to_pauli(((img[0] - phi) % 4, img[1], img[2]), L)
    out.sign *= pauli.sign
    return out


def _pattern(pauli: PauliString) -> tuple:
    """Translation-invariant shape of a word: offsets and letters of its support."""
    support = np.nonzero(pauli.letters)[0]
    if support.size == 0:
        return (pauli.sign,)
    base = support[0]
    return (pauli.sign,) + tuple(
        (int(q - base), PAULI_CHARS[pauli.letters[q]]) for q in support
    )


def default_gate_generators(L: int = 12, site: int = 4) -> list:
    """The rotation generators of the self-dual ensemble, placed mid-chain."""
    out = []
    for word in SELF_DUAL_WORDS:
        letters = np.zeros(L, dtype=np.uint8)
        if word == "Z":
            letters[site] = 3
        elif word == "XX":
            letters[site] = letters[site + 1] = 1
        elif word == "ZZ":
            letters[site] = letters[site + 1] = 3
        else:
            letters[site] = letters[site + 2] = 1
        for sign in (1, -1):
            out.append(PauliString(letters.copy(), sign=sign))
    return out


def duality_check(gate_generators=None, measurement_p=None):
    """Closure of an ensemble under the duality.

    For a gate set: true iff the multiset of translation-invariant image
    patterns equals the original multiset. For a measurement ensemble:
    true iff the Z/XX weights (p, 1-p) are exchanged into themselves,
    i.e. exactly at p = 0.5. Returns (ok, report).
    """
    report = {}
    ok = True
    if gate_generators is None and measurement_p is None:
        gate_generators = default_gate_generators()
    if gate_generators is not None:
        images = [duality_map(g) for g in gate_generators]
        orig = sorted(_pattern(g) for g in gate_generators)
        mapped = sorted(_pattern(g) for g in images)
        closed = orig == mapped
        report["gate_set"] = {
            "closed": closed,
            "images": [str(g) for g in images],
        }
        ok = ok and closed
    if measurement_p is not None:
        p = float(measurement_p)
        closed = abs(p - 0.5) < 1e-12
        report["measurement"] = {
            "closed": closed,
            "weights": {"Z": p, "XX": 1.0 - p},
            "dual_weights": {"Z": 1.0 - p, "XX": p},
        }
        ok = ok and closed
    return ok, report
