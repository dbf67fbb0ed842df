import warnings

import numpy as np
import pytest
from conftest import random_state, seeds
from hypothesis import given, settings
from hypothesis import strategies as st

from rabi_expansion import (
    Chain,
    EvolutionConfig,
    EvolutionError,
    FockOracle,
    ModelParams,
    SpinorFockState,
    TruncationPolicy,
    TruncationWarning,
    evolve,
    taylor_step,
)
from rabi_expansion.evolution import (
    SeriesRemainderError,
    chain_leakage,
    coherent_components,
    decompose_initial,
    remainder_bound,
    resolve_steps,
)
from rabi_expansion.observables import parity
from rabi_expansion.oracle import project_chain

P = ModelParams(1.0, 1.0, 0.5)


def dist(a, b):
    return np.sqrt((a - b).norm2)


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(t_final=-1)
    with pytest.raises(ValueError):
        EvolutionConfig(t_final=1, dt=0)
    with pytest.raises(ValueError):
        EvolutionConfig(t_final=1, j_max=1)
    with pytest.raises(ValueError):
        EvolutionConfig(t_final=1, record_every=0)


def test_remainder_bound_formula():
    assert remainder_bound(2.0, 0.5, 3) == pytest.approx(1 / 24)
    assert remainder_bound(0.0, 0.5, 3) == 0


def test_steps_cover_interval_exactly():
    dt, n = resolve_steps(P, EvolutionConfig(t_final=1.0, dt=0.3, n_max=4))
    assert n == 4 and dt * n == pytest.approx(1.0)


def test_decompose_examples():
    plus, minus = decompose_initial(SpinorFockState.fock(0, "up", 6))
    assert plus.reconstruct(6).norm2 == 0
    assert minus.reconstruct(6).allclose(SpinorFockState.fock(0, "up", 6), atol=1e-15)
    s = (SpinorFockState.fock(0, "up", 6) + SpinorFockState.fock(1, "up", 6)) * (1 / np.sqrt(2))
    plus, minus = decompose_initial(s)
    assert plus.reconstruct(6).norm2 == pytest.approx(0.5)
    assert minus.reconstruct(6).norm2 == pytest.approx(0.5)


def test_coherent_routes_agree():
    state = SpinorFockState.coherent(1.0, "up", 40)
    for fock_route, point_route in zip(decompose_initial(state), coherent_components(1.0, "up")):
        assert fock_route.reconstruct(40).allclose(point_route.reconstruct(40), atol=1e-10)


def test_zero_step_is_identity(rng):
    s = random_state(rng, 8)
    out = taylor_step(*decompose_initial(s), P, EvolutionConfig(t_final=0, n_max=8), dt=0.0)
    assert out.allclose(s, atol=1e-14)


def test_decoupled_step_is_a_phase():
    p = ModelParams(1.0, 1.0, 0.0)
    s = SpinorFockState.fock(0, "up", 4)
    cfg = EvolutionConfig(t_final=0.1, dt=0.1, j_max=8, n_max=4)
    out = taylor_step(*decompose_initial(s), p, cfg)
    assert out.allclose(s * np.exp(-0.05j), atol=1e-10)


def test_single_step_matches_propagator():
    s = SpinorFockState.fock(0, "up", 8)
    cfg = EvolutionConfig(t_final=0.05, dt=0.05, j_max=10, n_max=8)
    out = taylor_step(*decompose_initial(s), P, cfg)
    assert dist(out, FockOracle(P, 8).evolve(s, 0.05)) <= 1e-9


def test_step_rejects_large_remainder():
    s = SpinorFockState.fock(0, "up", 8)
    with pytest.raises(SeriesRemainderError, match="reduce dt"):
        taylor_step(*decompose_initial(s), P, EvolutionConfig(t_final=1, dt=1.0, j_max=4, n_max=8))


def test_step_requires_order_zero_pair():
    plus, minus = decompose_initial(SpinorFockState.fock(0, "up", 4))
    cfg = EvolutionConfig(t_final=0.1, dt=0.01, n_max=4)
    with pytest.raises(ValueError):
        taylor_step(minus, plus, P, cfg)


def test_zero_duration_trajectory():
    s = SpinorFockState.fock(0, "up", 6)
    tr = evolve(s, P, EvolutionConfig(t_final=0, n_max=6))
    assert len(tr) == 1 and tr.times[0] == 0 and tr.states[0] is s


def test_initial_cutoff_must_match():
    with pytest.raises(ValueError, match="n_max"):
        evolve(SpinorFockState.fock(0, "up", 6), P, EvolutionConfig(t_final=1, n_max=8))


def test_trajectory_sampling_and_oracle_residuals():
    s = SpinorFockState.fock(0, "up", 12)
    cfg = EvolutionConfig(t_final=1.0, dt=0.1, j_max=14, n_max=12, record_every=3, oracle_check=True)
    tr = evolve(s, P, cfg)
    np.testing.assert_allclose(tr.times, [0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)
    assert tr.summary["n_steps"] == 10
    assert tr.summary["max_oracle_residual"] <= 1e-10
    assert len(tr.diagnostics) == 4 and tr.diagnostics[0]["step"] == 3
    assert [t["order"] for t in tr.diagnostics[0]["traces"]["minus"]] == list(range(15))


def test_norm_drift_aborts_with_diagnostics():
    # deep coupling on a tiny cutoff sheds weight every step
    s = SpinorFockState.fock(0, "up", 4)
    cfg = EvolutionConfig(t_final=5.0, n_max=4, norm_ceiling=1e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        with pytest.raises(EvolutionError, match="norm drift") as info:
            evolve(s, ModelParams(1.0, 1.0, 2.0), cfg)
    assert info.value.diagnostics["norm_drift"] > 1e-3
    assert info.value.diagnostics["step"] >= 1


def test_truncation_loss_warns():
    s = SpinorFockState.fock(3, "up", 4)
    cfg = EvolutionConfig(t_final=0.2, dt=0.1, n_max=4, norm_ceiling=1.0)
    with pytest.warns(TruncationWarning, match="cutoff"):
        evolve(s, ModelParams(1.0, 1.0, 1.0), cfg)


def test_pure_chain_stays_on_chain():
    s = project_chain(random_state(np.random.default_rng(5), 24, n_occ=4), Chain.PLUS)
    s = s * (1 / np.sqrt(s.norm2))
    tr = evolve(s, P, EvolutionConfig(t_final=2.0, n_max=24))
    for state in tr.states:
        assert chain_leakage(state, Chain.PLUS) == 0.0
        assert parity(state) == pytest.approx(Chain.PLUS.p_eigenvalue * state.norm2, abs=1e-13)


def test_halving_the_step_agrees():
    s = SpinorFockState.coherent(0.8, "down", 30)
    coarse = evolve(s, P, EvolutionConfig(t_final=1.5, dt=0.03, n_max=30, j_max=14))
    fine = evolve(s, P, EvolutionConfig(t_final=1.5, dt=0.015, n_max=30, j_max=14))
    assert dist(coarse.states[-1], fine.states[-1]) <= 1e-9


def test_time_reversal_with_oracle():
    s = SpinorFockState.spin_superposition(1, 1.1, 0.4, 30)
    tr = evolve(s, P, EvolutionConfig(t_final=3.0, n_max=30))
    back = FockOracle(P, 30).evolve(tr.states[-1], -3.0)
    assert dist(back, s) <= 1e-9


@settings(max_examples=10)
@given(
    st.floats(0, 2),
    st.floats(0.5, 2),
    st.floats(-0.6, 0.6),
    seeds,
)
def test_norm_and_parity_are_conserved(delta, omega, lam, seed):
    p = ModelParams(delta, omega, lam)
    s = random_state(np.random.default_rng(seed), 20, n_occ=3)
    tr = evolve(s, p, EvolutionConfig(t_final=1.0, n_max=20, record_every=5))
    assert np.max(np.abs(tr.norms - 1)) <= 1e-10
    assert np.max(np.abs(tr.parity_expectations - tr.parity_expectations[0])) <= 1e-10
