import numpy as np
import pytest
import scipy.linalg
from conftest import params_st, random_state, seeds
from hypothesis import given
from hypothesis import strategies as st

from rabi_expansion import Chain, FockOracle, ModelParams, SpinorFockState, TruncationWarning
from rabi_expansion.oracle import (
    apply_h_power,
    apply_parity,
    build_hamiltonian,
    evolve_exact,
    parity_operator,
    project_chain,
)


def test_decoupled_spectrum():
    h = build_hamiltonian(ModelParams(1, 1, 0), 2)
    np.testing.assert_array_equal(np.diag(h).real, [0.5, 1.5, 2.5, -0.5, 0.5, 1.5])
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0


def test_lowest_eigenvalues_match_independent_solver():
    p = ModelParams(1, 1, 0.5)
    h = build_hamiltonian(p, 32)
    ref = scipy.linalg.eigh(h, eigvals_only=True, driver="evr")[:2]
    np.testing.assert_allclose(FockOracle(p, 32).energies[:2], ref, atol=1e-12)


def test_parity_examples(rng):
    assert apply_parity(SpinorFockState.fock(0, "up", 3)).allclose(SpinorFockState.fock(0, "up", 3))
    assert apply_parity(SpinorFockState.fock(1, "up", 3)).allclose(-SpinorFockState.fock(1, "up", 3))
    s = random_state(rng, 6)
    twice = apply_parity(apply_parity(s))
    assert np.array_equal(twice.vector, s.vector)


def test_project_chain_examples(rng):
    assert project_chain(SpinorFockState.fock(0, "up", 3), Chain.PLUS).norm2 == 0
    s = (SpinorFockState.fock(0, "up", 3) + SpinorFockState.fock(1, "up", 3)) * (1 / np.sqrt(2))
    assert project_chain(s, Chain.MINUS).allclose(SpinorFockState.fock(0, "up", 3) * (1 / np.sqrt(2)))
    r = random_state(rng, 7)
    assert project_chain(r, Chain.PLUS).inner(project_chain(r, Chain.MINUS)) == 0


def test_chain_parity_eigenvalues(rng):
    r = random_state(rng, 7)
    for chain in Chain:
        part = project_chain(r, chain)
        assert apply_parity(part).allclose(part * chain.p_eigenvalue, atol=0)


def test_h_power_examples(rng, reference_params):
    s = random_state(rng, 5)
    assert apply_h_power(s, reference_params, 0) is s
    h1 = apply_h_power(SpinorFockState.fock(0, "up", 4), reference_params, 1)
    expected = (SpinorFockState.fock(0, "up", 4) + SpinorFockState.fock(1, "down", 4)) * 0.5
    assert h1.allclose(expected, atol=1e-15)
    vac = SpinorFockState.fock(0, "up", 8)
    h = build_hamiltonian(reference_params, 8)
    ref = np.linalg.matrix_power(h, 2) @ vac.vector
    np.testing.assert_allclose(apply_h_power(vac, reference_params, 2).vector, ref, atol=1e-14)


def test_h_power_warns_near_cutoff(reference_params):
    with pytest.warns(TruncationWarning):
        apply_h_power(SpinorFockState.fock(4, "up", 5), reference_params, 2)


def test_evolve_exact_examples():
    p = ModelParams(1.0, 1.0, 0.0)
    s = SpinorFockState.fock(0, "up", 4)
    assert evolve_exact(s, p, 0.0).allclose(s, atol=1e-15)
    out = evolve_exact(s, p, 2.3)
    assert out.allclose(s * np.exp(-0.5j * 2.3), atol=1e-13)


def test_displaced_oscillator_photon_number():
    # Delta = 0: the spin states |+x>, |-x> displace the oscillator by -/+ g
    p = ModelParams(0.0, 1.0, 2.0)
    s = SpinorFockState.spin_superposition(0, np.pi / 2, 0.0, 64)
    n = np.arange(65)
    oracle = FockOracle(p, 64)
    for t in np.linspace(0, 4 * np.pi, 9):
        out = oracle.evolve(s, t)
        photons = np.sum(n * (abs(out.up) ** 2 + abs(out.down) ** 2))
        assert abs(photons - 16 * np.sin(t / 2) ** 2) < 1e-6


@given(params_st)
def test_hamiltonian_is_hermitian_and_commutes_with_parity(p):
    h = build_hamiltonian(p, 12)
    assert np.max(np.abs(h - h.conj().T)) == 0
    par = parity_operator(12)
    assert np.max(np.abs(h @ par - par @ h)) <= 1e-12


@given(params_st, seeds, st.floats(0, 100))
def test_evolution_is_unitary(p, seed, t):
    s = random_state(np.random.default_rng(seed), 10)
    assert abs(evolve_exact(s, p, t).norm2 - s.norm2) <= 1e-10


@given(params_st, seeds, st.sampled_from(list(Chain)), st.integers(1, 4))
def test_h_power_closes_on_chains(p, seed, chain, j):
    s = project_chain(random_state(np.random.default_rng(seed), 12, n_occ=6), chain)
    out = apply_h_power(s, p, j)
    assert project_chain(out, chain.opposite).norm2 == 0
