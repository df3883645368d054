import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gateforge.evolution import (HamiltonianModel, average_gate_fidelity,
                                 evolve, fidelity, fidelity_and_gradient_batch,
                                 fidelity_gradient, haar_state, haar_states,
                                 real_embed, unitary_fidelity)
from gateforge.gates import builtin_gate
from gateforge.pauli import pauli_decompose, standard_bases
from gateforge.spectral import toffoli_family


def toffoli_model(lam=None):
    basis = standard_bases(3, "full_two_local")
    if lam is None:
        lam = np.zeros(len(basis))
    return HamiltonianModel(basis, np.asarray(lam, dtype=float))


def exact_toffoli_model():
    basis = standard_bases(3, "full_two_local")
    coeffs = dict(pauli_decompose(toffoli_family(1)))
    lam = np.array([coeffs.get(el[0][0], 0.0) for el in basis.terms])
    return HamiltonianModel(basis, lam)


@settings(max_examples=20)
@given(st.integers(0, 10**9))
def test_evolve_is_unitary(seed):
    rng = np.random.default_rng(seed)
    m = toffoli_model(rng.normal(size=37))
    psi = haar_state(3, rng)
    out = evolve(m, psi)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 10**9))
def test_fidelity_bounds(seed):
    rng = np.random.default_rng(seed)
    m = toffoli_model(rng.normal(size=37))
    g = builtin_gate("toffoli")
    psi = haar_state(3, rng)
    f = fidelity(m, g, psi)
    assert -1e-12 <= f <= 1 + 1e-12


def test_fidelity_one_at_exact_solution(rng):
    m = exact_toffoli_model()
    g = builtin_gate("toffoli")
    for _ in range(5):
        psi = haar_state(3, rng)
        assert fidelity(m, g, psi) == pytest.approx(1.0, abs=1e-12)


def test_zero_hamiltonian_fidelity_is_overlap(rng):
    m = toffoli_model()
    g = builtin_gate("toffoli")
    psi = haar_state(3, rng)
    expected = abs(np.vdot(g.matrix @ psi, psi)) ** 2
    assert fidelity(m, g, psi) == pytest.approx(expected, abs=1e-12)


def test_single_excitation_transfer_with_phase():
    # H = (pi/2)(1 - X): exp(iH)|0> lands on |1> including the phase
    basis = standard_bases(1, "one_local")
    lam = np.zeros(len(basis))
    lam[basis.terms.index([("I", 1.0)])] = np.pi / 2
    lam[basis.terms.index([("X", 1.0)])] = -np.pi / 2
    m = HamiltonianModel(basis, lam)
    out = evolve(m, np.array([1.0, 0.0], dtype=complex))
    assert np.allclose(out, [0.0, 1.0], atol=1e-12)


def test_evolve_column_batch_matches_singles(rng):
    m = toffoli_model(rng.normal(size=37))
    psis = haar_states(8, 4, rng)
    batch = evolve(m, psis.T)
    assert batch.shape == (8, 4)
    for k in range(4):
        assert np.allclose(batch[:, k], evolve(m, psis[k]), atol=1e-12)


def test_unitary_fidelity_extremes():
    g = builtin_gate("toffoli")
    assert unitary_fidelity(g.matrix, g) == pytest.approx(1.0, abs=1e-14)
    # global phase on the unitary does not change it
    assert unitary_fidelity(np.exp(0.7j) * g.matrix, g) == pytest.approx(
        1.0, abs=1e-14)


def test_average_gate_fidelity_matches_haar_mean():
    rng = np.random.default_rng(99)
    m = toffoli_model(rng.normal(size=37) * 0.3)
    g = builtin_gate("toffoli")
    closed = average_gate_fidelity(m, g)

    n = 10**5
    states = haar_states(8, n, rng)
    w, V = np.linalg.eigh(m.matrix())
    U = (V * np.exp(1j * w)) @ V.conj().T
    amps = np.einsum("bi,ij,bj->b", (states @ g.matrix.T).conj(), U, states)
    samples = np.abs(amps) ** 2
    se = samples.std(ddof=1) / np.sqrt(n)
    assert abs(samples.mean() - closed) <= 3 * se


def test_haar_states_normalized_and_seeded():
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    a = haar_states(8, 10, rng1)
    b = haar_states(8, 10, rng2)
    assert np.array_equal(a, b)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)


def test_haar_states_first_moment(rng):
    # E[|psi><psi|] = 1/d: the sampler is not biased toward any direction
    states = haar_states(4, 20000, rng)
    rho = np.einsum("bi,bj->ij", states, states.conj()) / len(states)
    assert np.max(np.abs(rho - np.eye(4) / 4)) < 0.01


def test_real_embed_matrix_homomorphism(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(real_embed(A @ B), real_embed(A) @ real_embed(B))
    assert np.allclose(real_embed(A + B), real_embed(A) + real_embed(B))


def test_real_embed_vector_action(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    big = real_embed(A) @ real_embed(v)
    small = A @ v
    assert np.allclose(big, real_embed(small))


def test_gradient_zero_at_exact_solution(rng):
    m = exact_toffoli_model()
    g = builtin_gate("toffoli")
    for _ in range(3):
        psi = haar_state(3, rng)
        grad = fidelity_gradient(m, g, psi)
        assert np.max(np.abs(grad)) < 1e-8


def test_gradient_matches_global_scaling_derivative(rng):
    # dF(alpha * lam)/dalpha at alpha=1 equals lam . grad F
    m = toffoli_model(rng.normal(size=37) * 0.4)
    g = builtin_gate("toffoli")
    psi = haar_state(3, rng)
    grad = fidelity_gradient(m, g, psi)
    h = 1e-6
    up = fidelity(m.with_lambda((1 + h) * m.lam), g, psi)
    dn = fidelity(m.with_lambda((1 - h) * m.lam), g, psi)
    fd = (up - dn) / (2 * h)
    assert float(m.lam @ grad) == pytest.approx(fd, abs=1e-8)


def test_batch_matches_single(rng):
    m = toffoli_model(rng.normal(size=37) * 0.5)
    g = builtin_gate("toffoli")
    states = haar_states(8, 4, rng)
    fids, grads = fidelity_and_gradient_batch(m, g, states)
    for k in range(4):
        assert fids[k] == pytest.approx(fidelity(m, g, states[k]), abs=1e-13)
        single = fidelity_gradient(m, g, states[k])
        assert np.max(np.abs(grads[k] - single)) < 1e-12


def test_model_stack_cache_consistency(rng):
    m = toffoli_model(rng.normal(size=37))
    first = m.stack
    m2 = m.with_lambda(np.zeros(37))
    assert m2.stack is first
    assert np.allclose(m2.matrix(), 0)
    with pytest.raises(ValueError):
        m.with_lambda(np.zeros(5))
