"""Truncated Fock-basis Rabi model: the brute-force reference for everything else.

Dense matrices, repeated mat-vec for powers of H and a full Hermitian
eigendecomposition for propagation. Nothing here shares machinery with the
coherent-state recurrence engine.
"""

from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np

from .model import Chain, ModelParams, SpinorFockState

DEFAULT_N_MAX = 64
DEFAULT_TAIL_THRESHOLD = 1e-10


class TruncationWarning(UserWarning):
    """A Fock cutoff or series truncation is visibly contaminating results."""


class OracleError(RuntimeError):
    pass


def build_hamiltonian(params: ModelParams, n_max: int) -> np.ndarray:
    """Dense Rabi Hamiltonian of dimension ``2 (n_max + 1)``, spin-major ordering."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not params.omega > 0:
        raise ValueError("omega must be positive")
    dim = n_max + 1
    n = np.arange(dim)
    h = np.zeros((2 * dim, 2 * dim), dtype=complex)
    h[:dim, :dim] = np.diag(params.delta / 2 + params.omega * n)
    h[dim:, dim:] = np.diag(-params.delta / 2 + params.omega * n)
    # x = a + a^dag on the photon factor, sigma_x swaps the spin blocks
    ladder = np.diag(np.sqrt(np.arange(1, dim)), 1)
    x = params.lam * (ladder + ladder.T)
    h[:dim, dim:] = x
    h[dim:, :dim] = x
    return h


def parity_operator(n_max: int) -> np.ndarray:
    """Diagonal matrix of ``sigma_z exp(i pi a^dag a)``."""
    sign = (-1.0) ** np.arange(n_max + 1)
    return np.diag(np.concatenate([sign, -sign])).astype(complex)


def apply_parity(state: SpinorFockState) -> SpinorFockState:
    sign = (-1.0) ** np.arange(state.n_max + 1)
    return SpinorFockState(sign * state.up, -sign * state.down)


def project_chain(state: SpinorFockState, chain: Chain) -> SpinorFockState:
    up_mask, down_mask = chain.mask(state.n_max)
    return SpinorFockState(np.where(up_mask, state.up, 0), np.where(down_mask, state.down, 0))


def apply_h_power(
    state: SpinorFockState,
    params: ModelParams,
    j: int,
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD,
) -> SpinorFockState:
    """``H^j |state>`` by repeated mat-vec on the truncated Hamiltonian.

    Warns with :class:`TruncationWarning` when the input carries more than
    ``tail_threshold`` weight above ``n_max - j``; those components can reach
    the cutoff within ``j`` ladder steps.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    if j == 0:
        return state
    tail = state.mass_above(state.n_max - j)
    if tail > tail_threshold:
        warnings.warn(
            f"H^{j}: weight {tail:.3e} within {j} steps of the cutoff n_max={state.n_max}",
            TruncationWarning,
            stacklevel=2,
        )
    h = build_hamiltonian(params, state.n_max)
    vec = state.vector
    for _ in range(j):
        vec = h @ vec
    return SpinorFockState.from_vector(vec)


class FockOracle:
    """Exact propagator for fixed parameters and cutoff.

    The eigendecomposition is computed once, on first use, and reused for all
    times.
    """

    def __init__(self, params: ModelParams, n_max: int = DEFAULT_N_MAX):
        self.params = params
        self.n_max = n_max
        self.hamiltonian = build_hamiltonian(params, n_max)

    @cached_property
    def _eig(self):
        try:
            energies, vectors = np.linalg.eigh(self.hamiltonian)
        except np.linalg.LinAlgError as exc:
            raise OracleError(
                f"eigendecomposition failed for {self.params} at n_max={self.n_max}: {exc}"
            ) from exc
        if not np.all(np.isfinite(energies)):
            raise OracleError("eigendecomposition returned non-finite energies")
        return energies, vectors

    @property
    def energies(self) -> np.ndarray:
        return self._eig[0]

    @property
    def spectral_norm(self) -> float:
        return float(np.max(np.abs(self.energies)))

    def evolve(self, state: SpinorFockState, t: float) -> SpinorFockState:
        if state.n_max != self.n_max:
            raise ValueError(f"state n_max {state.n_max} != oracle n_max {self.n_max}")
        energies, vectors = self._eig
        coeffs = vectors.conj().T @ state.vector
        return SpinorFockState.from_vector(vectors @ (np.exp(-1j * energies * t) * coeffs))

    def h_power(self, state: SpinorFockState, j: int) -> SpinorFockState:
        return apply_h_power(state, self.params, j)


def evolve_exact(state: SpinorFockState, params: ModelParams, t: float) -> SpinorFockState:
    """``exp(-i H t)|state>`` at the state's own cutoff."""
    return FockOracle(params, state.n_max).evolve(state, t)
