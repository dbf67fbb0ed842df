"""Expectation values on spinor Fock states.

Values are not divided by the state norm; ``norm2`` is reported next to them so
drift stays visible in raw output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import SpinorFockState


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    norm2: float
    sigma_z: float
    sigma_x: float
    photon_n: float
    parity: float
    fidelity_initial: float
    oracle_residual: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def sigma_z(state: SpinorFockState) -> float:
    return float(np.sum(np.abs(state.up) ** 2) - np.sum(np.abs(state.down) ** 2))


def sigma_x(state: SpinorFockState) -> float:
    return 2.0 * float(np.vdot(state.up, state.down).real)


def photon_number(state: SpinorFockState) -> float:
    n = np.arange(state.n_max + 1)
    return float(np.sum(n * (np.abs(state.up) ** 2 + np.abs(state.down) ** 2)))


def parity(state: SpinorFockState) -> float:
    """``<sigma_z exp(i pi a^dag a)>``."""
    sign = (-1.0) ** np.arange(state.n_max + 1)
    return float(np.sum(sign * (np.abs(state.up) ** 2 - np.abs(state.down) ** 2)))


def fidelity(state: SpinorFockState, reference: SpinorFockState) -> float:
    """``|<reference|state>|^2`` with no normalization, so ``fidelity(s, s) == norm2**2``."""
    return abs(reference.inner(state)) ** 2


def expect_all(
    state: SpinorFockState,
    reference: SpinorFockState,
    t: float = 0.0,
    oracle_residual: float | None = None,
) -> ObservableRecord:
    if state.n_max != reference.n_max:
        raise ValueError(
            f"dimension mismatch: state n_max={state.n_max}, reference n_max={reference.n_max}"
        )
    return ObservableRecord(
        t=float(t),
        norm2=state.norm2,
        sigma_z=sigma_z(state),
        sigma_x=sigma_x(state),
        photon_n=photon_number(state),
        parity=parity(state),
        fidelity_initial=fidelity(state, reference),
        oracle_residual=oracle_residual,
    )
