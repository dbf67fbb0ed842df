"""Quantum Rabi model dynamics by parity-split coherent-state Taylor expansion."""

__version__ = "0.1.0"

from .coherent import CoefficientFunction, Combination, apply_a, apply_adag, apply_n
from .evolution import EvolutionConfig, EvolutionError, Trajectory, evolve, taylor_step
from .model import Chain, ModelParams, Spin, SpinorFockState
from .observables import ObservableRecord, expect_all
from .oracle import FockOracle, TruncationWarning, build_hamiltonian, evolve_exact
from .recurrence import ParityComponent, TruncationPolicy, h_power_sequence

__all__ = [
    "Chain",
    "CoefficientFunction",
    "Combination",
    "EvolutionConfig",
    "EvolutionError",
    "FockOracle",
    "ModelParams",
    "ObservableRecord",
    "ParityComponent",
    "Spin",
    "SpinorFockState",
    "Trajectory",
    "TruncationPolicy",
    "TruncationWarning",
    "apply_a",
    "apply_adag",
    "apply_n",
    "build_hamiltonian",
    "evolve",
    "evolve_exact",
    "expect_all",
    "h_power_sequence",
    "taylor_step",
]
