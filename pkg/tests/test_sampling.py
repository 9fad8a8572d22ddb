import numpy as np
import pytest

from miptsim.errors import DomainError, UnsupportedRegionError
from miptsim.mps import MpsState, WeakMeasurementSpec
from miptsim.oracle import (DenseState, bitstring_probs, exact_bpmi, exact_bsmi,
                            exact_pauli_spectrum, exact_pe, exact_sre,
                            statevector_apply)
from miptsim.paulis import HADAMARD, PAULI_MATS, PauliString, letters_from_str
from miptsim.sampling import (estimate_bpmi, estimate_bsmi, estimate_pe,
                              estimate_sre, magic_estimates,
                              restricted_pauli_trace, sample_bitstring,
                              sample_bitstrings, sample_pauli_string,
                              sample_pauli_strings)

LN2 = np.log(2)
CX = np.eye(4, dtype=complex)[[0, 1, 3, 2]]


def random_state_pair(L, rng, depth=20, beta=0.6):
    """Random circuit with weak measurements, mirrored on MPS and dense."""
    st = MpsState.product_state(L, "0", chi_max=64)
    dense = DenseState.product(L, "0")
    z = np.diag([1.0, -1.0]).astype(complex)
    for _ in range(depth):
        s = int(rng.integers(L - 1))
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        u = np.linalg.qr(m)[0]
        st.apply_unitary(u, s)
        dense = statevector_apply(dense, u, [s, s + 1])
        if rng.random() < 0.3:
            s = int(rng.integers(L - 1))
            out = st.weak_measure(WeakMeasurementSpec("ZI", beta, s), rng)
            kraus = np.cosh(beta) * np.eye(2) + out * np.sinh(beta) * z
            dense = statevector_apply(dense, np.kron(kraus, np.eye(2)),
                                      [s, s + 1], renormalize=True)
    return st, dense


def ghz_mps(L):
    st = MpsState.product_state(L, "0")
    st.apply_unitary(np.kron(HADAMARD, np.eye(2)), 0)
    for i in range(L - 1):
        st.apply_unitary(CX, i)
    return st


def restricted_trace_dense(dense, letters, region):
    rho = np.outer(dense.amplitudes, dense.amplitudes.conj())
    op = np.array([[1.0]], dtype=complex)
    for i in range(dense.num_qubits):
        op = np.kron(op, PAULI_MATS[letters[i]] if i in region else np.eye(2))
    return np.trace(rho @ op).real


def test_pauli_sample_probabilities_are_exact():
    rng = np.random.default_rng(0)
    st, dense = random_state_pair(4, rng)
    spectrum = exact_pauli_spectrum(dense).weights  # flat (4,)*L order
    letters, log_pi, _, _ = sample_pauli_strings(st, 100, np.random.default_rng(1))
    idx = np.array([int("".join(str(v) for v in row), 4) for row in letters])
    assert np.allclose(np.exp(log_pi), spectrum[idx], atol=1e-10)


def test_prefix_and_suffix_restricted_traces_are_exact():
    rng = np.random.default_rng(2)
    L = 5
    st, dense = random_state_pair(L, rng)
    letters, _, prefix, suffix = sample_pauli_strings(
        st, 50, np.random.default_rng(3), cuts=(2, 3))
    for k in range(10):
        for cut in (2, 3):
            exact_a = abs(restricted_trace_dense(dense, letters[k], range(cut)))
            exact_b = abs(restricted_trace_dense(dense, letters[k], range(cut, L)))
            assert prefix[cut][k] == pytest.approx(np.log(exact_a), abs=1e-8)
            assert suffix[cut][k] == pytest.approx(np.log(exact_b), abs=1e-8)


def test_bitstring_samples_have_exact_probabilities():
    rng = np.random.default_rng(4)
    st, dense = random_state_pair(4, rng)
    probs = bitstring_probs(dense)
    bits, logp, _, _ = sample_bitstrings(st, 100, np.random.default_rng(5))
    idx = bits.dot(1 << np.arange(3, -1, -1))
    assert np.allclose(np.exp(logp), probs[idx], atol=1e-10)


def test_x_basis_sampling_matches_rotated_state():
    rng = np.random.default_rng(6)
    st, dense = random_state_pair(3, rng)
    for q in range(3):
        dense = statevector_apply(dense, HADAMARD, [q])
    probs = bitstring_probs(dense)
    bits, logp, _, _ = sample_bitstrings(st, 50, np.random.default_rng(7), basis="X")
    idx = bits.dot(1 << np.arange(2, -1, -1))
    assert np.allclose(np.exp(logp), probs[idx], atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_estimators_agree_with_oracle(seed):
    rng = np.random.default_rng(10 + seed)
    L = 4
    st, dense = random_state_pair(L, rng)
    n_s = 3000
    for order in (1, 2):
        r = estimate_sre(st, order, n_s, np.random.default_rng(seed))
        exact = float(exact_sre(dense, order))
        assert abs(r.value - exact) < 4 * max(r.stderr, 1e-4)
    r = estimate_pe(st, n_s, np.random.default_rng(seed))
    assert abs(r.value - float(exact_pe(dense, 1))) < 4 * max(r.stderr, 1e-4)
    r = estimate_bsmi(st, 2, n_s, np.random.default_rng(seed))
    assert abs(r.value - float(exact_bsmi(dense, 2))) < 4 * max(r.stderr, 1e-3)
    r = estimate_bpmi(st, 2, n_s, np.random.default_rng(seed))
    assert abs(r.value - float(exact_bpmi(dense, 2))) < 4 * max(r.stderr, 1e-3)


def test_stabilizer_state_has_zero_magic():
    st = ghz_mps(6)
    r = estimate_sre(st, 1, 500, np.random.default_rng(0))
    assert r.value == pytest.approx(0.0, abs=1e-8)
    r = estimate_bsmi(st, 3, 500, np.random.default_rng(1))
    assert r.value == pytest.approx(0.0, abs=1e-6)


def test_bell_pair_mutual_information():
    st = ghz_mps(2)
    r = estimate_bpmi(st, 1, 2000, np.random.default_rng(2))
    assert r.value == pytest.approx(LN2, abs=4 * max(r.stderr, 1e-8))


def test_plus_product_state_pe_bases():
    st = MpsState.product_state(4, "+")
    r = estimate_pe(st, 200, np.random.default_rng(3), basis="Z")
    assert r.value == pytest.approx(4 * LN2, abs=1e-9)
    r = estimate_pe(st, 200, np.random.default_rng(4), basis="X")
    assert r.value == pytest.approx(0.0, abs=1e-9)


def test_magic_estimates_shares_one_sample_batch():
    rng = np.random.default_rng(8)
    st, _ = random_state_pair(4, rng)
    res = magic_estimates(st, (2,), 800, np.random.default_rng(11))
    sre = estimate_sre(st, 1, 800, np.random.default_rng(11))
    bsmi = estimate_bsmi(st, 2, 800, np.random.default_rng(11))
    assert res[("sre", 1)].value == pytest.approx(sre.value, abs=1e-12)
    assert res[("bsmi", 2)].value == pytest.approx(bsmi.value, abs=1e-12)


def test_single_sample_interfaces():
    st = ghz_mps(3)
    p = sample_pauli_string(st, np.random.default_rng(12))
    assert isinstance(p, PauliString)
    assert p.weight_prob > 0
    b = sample_bitstring(st, np.random.default_rng(13))
    # GHZ bitstrings are all-zeros or all-ones
    assert len(set(b.bits.tolist())) == 1
    assert b.prob == pytest.approx(0.5)


def test_restricted_pauli_trace_matches_dense():
    rng = np.random.default_rng(14)
    st, dense = random_state_pair(4, rng)
    letters = letters_from_str("IYZX")
    for region in (range(0, 2), range(1, 3), range(2, 4)):
        sub = letters[list(region)]
        v = restricted_pauli_trace(st, PauliString(sub), region)
        assert v == pytest.approx(
            restricted_trace_dense(dense, letters, region), abs=1e-9)


def test_restricted_pauli_trace_rejects_gaps():
    st = ghz_mps(4)
    with pytest.raises(UnsupportedRegionError):
        restricted_pauli_trace(st, PauliString(letters_from_str("XX")), [0, 2])


def test_sampler_input_validation():
    st = ghz_mps(3)
    with pytest.raises(DomainError):
        sample_pauli_strings(st, 0, np.random.default_rng(0))


def test_pauli_sampler_distribution_chi_square():
    rng = np.random.default_rng(15)
    st, dense = random_state_pair(3, rng)
    spectrum = exact_pauli_spectrum(dense).weights
    letters, _, _, _ = sample_pauli_strings(st, 20000, np.random.default_rng(16))
    idx = np.array([int("".join(str(v) for v in row), 4) for row in letters])
    counts = np.bincount(idx, minlength=64)
    keep = spectrum * 20000 >= 5
    chi2 = np.sum((counts[keep] - 20000 * spectrum[keep]) ** 2 / (20000 * spectrum[keep]))
    dof = keep.sum() - 1
    # generous bound: mean dof + 5 sigma
    assert chi2 < dof + 5 * np.sqrt(2 * dof)
