"""Time evolution by restarted Taylor series in coefficient space.

Every step splits the current Fock state into its two parity chains, turns
each chain into coefficient functions, generates ``H^j`` for ``j <= j_max``
with the recurrence engine and sums ``(-i dt)^j / j!`` times the reconstructed
orders. The result is re-decomposed for the next step, which keeps polynomial
degrees bounded. The norm is never corrected; drift is monitored instead.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import Chain, ModelParams, Spin, SpinorFockState
from .observables import ObservableRecord, expect_all, parity
from .oracle import (
    DEFAULT_N_MAX,
    DEFAULT_TAIL_THRESHOLD,
    FockOracle,
    TruncationWarning,
    build_hamiltonian,
    project_chain,
)
from .recurrence import ParityComponent, StepTrace, TruncationPolicy, h_power_sequence

log = logging.getLogger(__name__)

DEFAULT_J_MAX = 12


class EvolutionError(RuntimeError):
    """Evolution aborted; ``diagnostics`` says where and why."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SeriesRemainderError(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepping parameters. ``dt=None`` picks ``1 / ||H||`` for the truncated H."""

    t_final: float
    dt: float | None = None
    j_max: int = DEFAULT_J_MAX
    n_max: int = DEFAULT_N_MAX
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    oracle_check: bool = False
    record_every: int = 1
    norm_ceiling: float = 1e-4
    remainder_tol: float = 1e-8
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD

    def __post_init__(self):
        if not (self.t_final >= 0 and math.isfinite(self.t_final)):
            raise ValueError(f"t_final must be finite and non-negative, got {self.t_final}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.j_max < 2:
            raise ValueError(f"j_max must be >= 2, got {self.j_max}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not self.norm_ceiling > 0:
            raise ValueError("norm_ceiling must be positive")


@lru_cache(maxsize=64)
def h_norm_estimate(params: ModelParams, n_max: int) -> float:
    """Spectral norm of the truncated Hamiltonian."""
    return float(np.max(np.abs(np.linalg.eigvalsh(build_hamiltonian(params, n_max)))))


def remainder_bound(h_norm: float, dt: float, j_max: int) -> float:
    """``(||H|| dt)^(j_max+1) / (j_max+1)!``, the worst-case size of the dropped series tail."""
    x = h_norm * dt
    if x == 0:
        return 0.0
    return math.exp((j_max + 1) * math.log(x) - math.lgamma(j_max + 2))


def resolve_steps(params: ModelParams, cfg: EvolutionConfig) -> tuple[float, int]:
    """Effective step and step count covering ``[0, t_final]`` exactly."""
    if cfg.t_final == 0:
        return 0.0, 0
    dt = cfg.dt if cfg.dt is not None else 1.0 / h_norm_estimate(params, cfg.n_max)
    n_steps = max(1, math.ceil(cfg.t_final / dt - 1e-9))
    return cfg.t_final / n_steps, n_steps


def check_remainder(params: ModelParams, cfg: EvolutionConfig, dt: float):
    bound = remainder_bound(h_norm_estimate(params, cfg.n_max), dt, cfg.j_max)
    if bound > cfg.remainder_tol:
        raise SeriesRemainderError(
            f"series remainder bound {bound:.3e} exceeds {cfg.remainder_tol:g} "
            f"(dt={dt:g}, j_max={cfg.j_max}, n_max={cfg.n_max}); reduce dt or raise j_max"
        )
    return bound


def decompose_initial(state: SpinorFockState) -> tuple[ParityComponent, ParityComponent]:
    """(PLUS, MINUS) components of a Fock state, polynomial route."""
    return ParityComponent.from_fock(state, Chain.PLUS), ParityComponent.from_fock(state, Chain.MINUS)


def coherent_components(
    alpha: complex, spin: Spin | str = Spin.UP
) -> tuple[ParityComponent, ParityComponent]:
    """(PLUS, MINUS) components of ``|alpha> (x) |spin>`` as point masses at ``alpha``."""
    w_up, w_down = (1.0, 0.0) if Spin(spin) is Spin.UP else (0.0, 1.0)
    return (
        ParityComponent.from_coherent(alpha, w_up, w_down, Chain.PLUS),
        ParityComponent.from_coherent(alpha, w_up, w_down, Chain.MINUS),
    )


@dataclass
class StepReport:
    """What one Taylor step did, per chain."""

    traces: dict[str, list[StepTrace]] = field(default_factory=dict)
    truncation_loss: float = 0.0
    remainder_bound: float = 0.0


def _sum_series(comp: ParityComponent, params, cfg: EvolutionConfig, dt: float, report):
    # the series is linear in the orders, so it is summed in coefficient space
    seq = h_power_sequence(comp, params, cfg.policy, cfg.j_max)
    total = seq[0]
    coeff = 1.0 + 0j
    for j in range(1, len(seq)):
        coeff *= -1j * dt / j
        total = total + seq[j].scaled(coeff)
    if report is not None:
        report.traces[comp.chain.value] = [c.trace() for c in seq]
    return total.reconstruct(cfg.n_max + cfg.j_max)


def taylor_step(
    plus: ParityComponent,
    minus: ParityComponent,
    params: ModelParams,
    cfg: EvolutionConfig,
    dt: float | None = None,
    report: StepReport | None = None,
) -> SpinorFockState:
    """State after ``dt`` from the two order-0 chain components.

    ``dt`` defaults to ``cfg.dt``. Weight generated above ``n_max`` is dropped
    and counted in ``report.truncation_loss``.
    """
    if plus.order or minus.order:
        raise ValueError("taylor_step needs order-0 components")
    if plus.chain is not Chain.PLUS or minus.chain is not Chain.MINUS:
        raise ValueError("taylor_step needs (PLUS, MINUS) components")
    dt = cfg.dt if dt is None else dt
    if dt is None:
        raise ValueError("no step size given")
    bound = check_remainder(params, cfg, abs(dt)) if dt else 0.0
    ext = _sum_series(plus, params, cfg, dt, report) + _sum_series(minus, params, cfg, dt, report)
    up, down = ext.up, ext.down
    n = cfg.n_max
    lost = float(np.sum(np.abs(up[n + 1 :]) ** 2) + np.sum(np.abs(down[n + 1 :]) ** 2))
    if lost > cfg.tail_threshold:
        warnings.warn(
            f"step pushed weight {lost:.3e} above the cutoff n_max={n}",
            TruncationWarning,
            stacklevel=2,
        )
    if report is not None:
        report.truncation_loss += lost
        report.remainder_bound = bound
    return SpinorFockState(up[: n + 1], down[: n + 1])


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[SpinorFockState]
    norms: np.ndarray
    parity_expectations: np.ndarray
    diagnostics: list[dict]
    oracle_residuals: np.ndarray | None = None
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.states)
        if not (len(self.times) == n == len(self.norms) == len(self.parity_expectations)):
            raise ValueError("trajectory arrays have inconsistent lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.states)

    def records(self) -> list[ObservableRecord]:
        ref = self.states[0]
        res = self.oracle_residuals
        return [
            expect_all(s, ref, t, None if res is None else float(res[i]))
            for i, (t, s) in enumerate(zip(self.times, self.states))
        ]


def evolve(initial: SpinorFockState, params: ModelParams, cfg: EvolutionConfig) -> Trajectory:
    """Restarted Taylor evolution of ``initial`` up to ``cfg.t_final``."""
    if initial.n_max != cfg.n_max:
        raise ValueError(f"initial state n_max={initial.n_max} != config n_max={cfg.n_max}")
    dt, n_steps = resolve_steps(params, cfg)
    bound = check_remainder(params, cfg, dt) if n_steps else 0.0
    oracle = FockOracle(params, cfg.n_max) if cfg.oracle_check else None
    norm0 = initial.norm2
    log.info("evolving %d steps of dt=%.6g (remainder bound %.2e)", n_steps, dt, bound)

    times, states, residuals, diagnostics = [0.0], [initial], [], []
    if oracle is not None:
        residuals.append(0.0)
    state = initial
    total_loss = 0.0
    max_drift = 0.0
    max_pruned = 0.0
    for k in range(1, n_steps + 1):
        t = k * dt
        report = StepReport()
        plus, minus = decompose_initial(state)
        state = taylor_step(plus, minus, params, cfg, dt, report)
        total_loss += report.truncation_loss
        drift = abs(state.norm2 - norm0)
        max_drift = max(max_drift, drift)
        # pruned weight of order j enters the step scaled by dt^j / j!
        max_pruned = max(
            max_pruned,
            *(
                tr.pruned_mass * math.exp(tr.order * math.log(dt) - math.lgamma(tr.order + 1))
                for trs in report.traces.values()
                for tr in trs
            ),
        )
        if drift > cfg.norm_ceiling:
            raise EvolutionError(
                f"norm drift {drift:.3e} exceeds ceiling {cfg.norm_ceiling:g} at t={t:.6g} "
                f"(step {k}); dt, j_max or n_max is inadequate",
                {"t": t, "step": k, "norm_drift": drift, "truncation_loss": total_loss, "dt": dt},
            )
        if k % cfg.record_every == 0 or k == n_steps:
            times.append(t)
            states.append(state)
            entry = {
                "step": k,
                "t": t,
                "truncation_loss": report.truncation_loss,
                "traces": {ch: [tr.to_dict() for tr in trs] for ch, trs in report.traces.items()},
            }
            if oracle is not None:
                exact = oracle.evolve(initial, t)
                residuals.append(math.sqrt((state - exact).norm2))
            diagnostics.append(entry)

    summary = {
        "dt": dt,
        "n_steps": n_steps,
        "h_norm_estimate": h_norm_estimate(params, cfg.n_max),
        "remainder_bound_per_step": bound,
        "max_norm_drift": max_drift,
        "total_truncation_loss": total_loss,
        "max_pruned_contribution": max_pruned,
    }
    if oracle is not None:
        summary["max_oracle_residual"] = float(max(residuals))
    return Trajectory(
        times=np.array(times),
        states=states,
        norms=np.array([s.norm2 for s in states]),
        parity_expectations=np.array([parity(s) for s in states]),
        diagnostics=diagnostics,
        oracle_residuals=np.array(residuals) if oracle is not None else None,
        summary=summary,
    )


def chain_leakage(state: SpinorFockState, source: Chain) -> float:
    """Norm of the part of ``state`` outside the chain it started on."""
    return math.sqrt(project_chain(state, source.opposite).norm2)
