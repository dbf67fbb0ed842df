import numpy as np
import pytest

from rabi_expansion import Chain, ModelParams, Spin, SpinorFockState


def test_params_validation():
    assert ModelParams(1.0, 2.0, 0.5).g == 0.25
    with pytest.raises(ValueError, match="omega"):
        ModelParams(1.0, 0.0, 0.5)
    with pytest.raises(ValueError, match="delta"):
        ModelParams(-1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        ModelParams(1.0, 1.0, float("nan"))


def test_g_follows_lambda():
    p = ModelParams(1.0, 4.0, 2.0)
    assert p.g == 0.5
    with pytest.raises(AttributeError):
        p.lam = 1.0


def test_chain_support_and_parity_eigenvalue():
    up, down = Chain.PLUS.mask(3)
    assert up.tolist() == [False, True, False, True]
    assert down.tolist() == [True, False, True, False]
    assert Chain.PLUS.p_eigenvalue == -1
    assert Chain.MINUS.p_eigenvalue == 1
    assert Chain.PLUS.opposite is Chain.MINUS


def test_state_constructors():
    s = SpinorFockState.fock(2, Spin.DOWN, 4)
    assert s.down[2] == 1 and s.norm2 == 1
    sup = SpinorFockState.spin_superposition(0, np.pi / 2, 0.0, 3)
    assert np.isclose(sup.up[0], 1 / np.sqrt(2)) and np.isclose(sup.down[0], 1 / np.sqrt(2))
    coh = SpinorFockState.coherent(1.0, "up", 30)
    assert abs(coh.norm2 - 1) < 1e-14
    with pytest.raises(ValueError):
        SpinorFockState.fock(5, "up", 4)


def test_state_is_read_only_and_checks_shapes():
    s = SpinorFockState.zeros(3)
    with pytest.raises(ValueError):
        s.up[0] = 1
    with pytest.raises(ValueError):
        SpinorFockState(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        SpinorFockState(np.array([np.inf, 0]), np.zeros(2))


def test_tail_mass_diagnostic():
    s = SpinorFockState.fock(3, "up", 3) + SpinorFockState.fock(0, "down", 3)
    assert s.tail_mass == 1.0
    assert s.mass_above(0) == 1.0
