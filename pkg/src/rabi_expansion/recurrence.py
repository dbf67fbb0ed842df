"""Coefficient-space action of the Rabi Hamiltonian on one parity chain.

Each chain is a pair of coefficient functions (upper = spin up, lower = spin
down) paired with opposite coherent-state combinations:

    PLUS:  upper (A_j) with |z> - |-z>,  lower (B_j) with |z> + |-z>
    MINUS: upper (C_j) with |z> + |-z>,  lower (D_j) with |z> - |-z>

One application of H maps order j to order j + 1:

    upper' =  delta/2 upper + lam z lower + R_lower[lam lower + omega z upper]
    lower' = -delta/2 lower + lam z upper + R_upper[lam upper + omega z lower]

where ``R_s[f] = sum_k M_k(f) conj(z)^(k+1) exp(-|z|^2) / (pi k!)`` runs over
``k`` of the parity of combination ``s`` (the creation operator). For PLUS
this is the (2m+1)-kernel with ``lam M_2m(B) + omega M_2m+1(A)`` on the upper
component and the (2m+2)-kernel with ``lam M_2m+1(A) + omega M_2m+2(B)`` on
the lower; for MINUS the two kernels trade places. All functions are
measured against plain ``dzeta deta``, so no factor of pi accumulates between
orders.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .coherent import (
    DEFAULT_M_MAX,
    DEFAULT_TAIL_TOL,
    MAX_DEGREE,
    CoefficientFunction,
    Combination,
    _FACT,
    _SQRT_FACT,
    _as_poly,
    _poly_moments,
    delta_tail_residual,
    fock_amplitudes_to_coefficient,
    multiply_by_z,
    reconstruct_fock_amplitudes,
)
from .model import Chain, ModelParams, SpinorFockState
from .oracle import TruncationWarning, project_chain


class TruncationError(RuntimeError):
    """Polynomial degree exceeded the policy cap even after pruning."""


class RecurrenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TruncationPolicy:
    m_max: int = DEFAULT_M_MAX
    deg_max: int = 160
    prune_eps: float = 1e-14

    def __post_init__(self):
        if self.m_max < 0:
            raise ValueError("m_max must be non-negative")
        if self.prune_eps < 0:
            raise ValueError("prune_eps must be non-negative")
        if self.deg_max < 2 * self.m_max + 2:
            raise ValueError(
                f"deg_max={self.deg_max} cannot hold raising terms up to 2*m_max+2={2 * self.m_max + 2}"
            )
        if self.deg_max > MAX_DEGREE:
            raise ValueError(f"deg_max above {MAX_DEGREE} overflows the moment factorials")


def chain_signs(chain: Chain) -> tuple[Combination, Combination]:
    """(upper, lower) combinations of a chain."""
    upper = Combination.ODD if chain.up_photon_parity else Combination.EVEN
    return upper, upper.flipped


@dataclass(frozen=True)
class StepTrace:
    order: int
    n_deltas: int
    n_terms: int
    max_degree: int
    pruned_mass: float
    oracle_residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "n_deltas": self.n_deltas,
            "n_terms": self.n_terms,
            "max_degree": self.max_degree,
            "pruned_mass": self.pruned_mass,
            "oracle_residual": self.oracle_residual,
        }


@dataclass(frozen=True)
class ParityComponent:
    """Coefficient functions of ``H^order`` applied to one chain of the initial state.

    ``pruned_mass`` accumulates, over the orders that produced this component,
    the reconstruction-amplitude weight dropped by pruning.
    """

    chain: Chain
    upper: CoefficientFunction
    lower: CoefficientFunction
    order: int = 0
    pruned_mass: float = field(default=0.0)

    @property
    def upper_sign(self) -> Combination:
        return chain_signs(self.chain)[0]

    @property
    def lower_sign(self) -> Combination:
        return chain_signs(self.chain)[1]

    @classmethod
    def zero(cls, chain: Chain) -> ParityComponent:
        return cls(chain, CoefficientFunction.zero(), CoefficientFunction.zero())

    @classmethod
    def from_fock(cls, state: SpinorFockState, chain: Chain) -> ParityComponent:
        """Gaussian-polynomial coefficients of the chain's projection of ``state``."""
        part = project_chain(state, chain)
        up_sign, down_sign = chain_signs(chain)
        return cls(
            chain,
            fock_amplitudes_to_coefficient(part.up, up_sign),
            fock_amplitudes_to_coefficient(part.down, down_sign),
        )

    @classmethod
    def from_coherent(cls, alpha: complex, weight_up: complex, weight_down: complex, chain: Chain):
        """Point masses at ``alpha`` for ``(weight_up |up> + weight_down |down>)`` times a
        normalized coherent state, restricted to ``chain``."""
        norm = np.exp(-abs(alpha) ** 2 / 2) / 2
        return cls(
            chain,
            CoefficientFunction.delta(alpha, norm * weight_up),
            CoefficientFunction.delta(alpha, norm * weight_down),
        )

    def reconstruct(self, n_max: int) -> SpinorFockState:
        return SpinorFockState(
            reconstruct_fock_amplitudes(self.upper, self.upper_sign, n_max),
            reconstruct_fock_amplitudes(self.lower, self.lower_sign, n_max),
        )

    def scaled(self, factor: complex) -> ParityComponent:
        return replace(self, upper=factor * self.upper, lower=factor * self.lower)

    def __add__(self, other):
        if not isinstance(other, ParityComponent):
            return NotImplemented
        if other.chain is not self.chain:
            raise ValueError("cannot add components of different chains")
        return ParityComponent(
            self.chain,
            self.upper + other.upper,
            self.lower + other.lower,
            max(self.order, other.order),
            self.pruned_mass + other.pruned_mass,
        )

    def trace(self, oracle_residual: float | None = None) -> StepTrace:
        return StepTrace(
            order=self.order,
            n_deltas=len(self.upper.points) + len(self.lower.points),
            n_terms=self.upper.n_terms + self.lower.n_terms,
            max_degree=max(self.upper.degree, self.lower.degree),
            pruned_mass=self.pruned_mass,
            oracle_residual=oracle_residual,
        )


def _weight_factors(n_p: int, n_q: int) -> np.ndarray:
    key = (n_p, n_q)
    if key not in _WEIGHT_CACHE:
        p, q = np.indices(key)
        k = q - p
        w = np.zeros(key)
        ok = k >= 0
        w[ok] = 2 * np.pi * _FACT[q[ok]] / _SQRT_FACT[k[ok]]
        _WEIGHT_CACHE[key] = w
    return _WEIGHT_CACHE[key]


_WEIGHT_CACHE: dict[tuple[int, int], np.ndarray] = {}


def amplitude_weights(poly: np.ndarray) -> np.ndarray:
    """Size of each polynomial term's contribution to the reconstructed amplitudes.

    ``z^p conj(z)^q`` only feeds the moment ``k = q - p`` (times ``pi q!``), i.e.
    the Fock amplitude ``2 pi q! / sqrt(k!)``; terms with ``p > q`` feed nothing.
    """
    return np.abs(poly) * _weight_factors(*poly.shape)


def prune(f: CoefficientFunction, eps: float) -> tuple[CoefficientFunction, float]:
    """Drop polynomial terms whose amplitude weight is below ``eps`` times the largest."""
    if not np.all(np.isfinite(f.poly)):
        raise OverflowError("non-finite polynomial coefficient")
    if eps == 0:
        return f.trimmed(), 0.0
    w = amplitude_weights(f.poly)
    # terms with zero weight never reach a reconstructed amplitude
    drop = (w < eps * w.max()) | (w == 0)
    drop &= f.poly != 0
    if not drop.any():
        return f.trimmed(), 0.0
    poly = np.where(drop, 0, f.poly)
    return CoefficientFunction._make(f.points, f.weights, _as_poly(poly)), float(w[drop].sum())


def _padded(arr: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=complex)
    m = min(n, arr.size)
    out[:m] = arr[:m]
    return out


def _delta_moments(f: CoefficientFunction, k_max: int) -> np.ndarray:
    if not f.has_deltas:
        return np.zeros(k_max + 1, dtype=complex)
    return (f.points[None, :] ** np.arange(k_max + 1)[:, None]) @ f.weights


def _raised(m_other, m_same, dm_other, dm_same, parity, n, m_max, lam, omega):
    """``conj(z)^(k+1) / (pi k!)`` coefficients of ``a^dag (lam other + omega a same)``."""
    src = lam * m_other[:n] + omega * m_same[1 : n + 1]
    if dm_other is not None:
        cap = 2 * m_max + parity + 1
        src[:cap] += lam * dm_other[:cap] + omega * dm_same[1 : cap + 1]
    src[parity ^ 1 :: 2] = 0
    out = np.zeros(n + 1, dtype=complex)
    out[1:] = src / (np.pi * _FACT[:n])
    return out


def _combine(diag, same, lam, other, raised) -> CoefficientFunction:
    rows = max(same.poly.shape[0], other.poly.shape[0] + 1)
    cols = max(same.poly.shape[1], other.poly.shape[1], raised.size)
    poly = np.zeros((rows, cols), dtype=complex)
    r, c = same.poly.shape
    poly[:r, :c] = diag * same.poly
    r, c = other.poly.shape
    poly[1 : r + 1, :c] += lam * other.poly
    poly[0, : raised.size] += raised
    if not (same.has_deltas or other.has_deltas):
        return CoefficientFunction._make(same.points, same.weights, poly)
    deltas = diag * CoefficientFunction(same.points, same.weights, np.zeros((1, 1)))
    deltas = deltas + lam * CoefficientFunction(other.points, other.weights * other.points, np.zeros((1, 1)))
    keep = deltas.weights != 0
    return CoefficientFunction._make(deltas.points[keep], deltas.weights[keep], poly)


def _apply(comp: ParityComponent, params: ModelParams, policy: TruncationPolicy) -> ParityComponent:
    up, lo = comp.upper, comp.lower
    up_sign, lo_sign = chain_signs(comp.chain)
    lam, omega, m_max = params.lam, params.omega, policy.m_max
    has_deltas = up.has_deltas or lo.has_deltas
    # moments M_0 .. M_n of both components, one extra for the z-shifted source
    n = max(up.poly.shape[1], lo.poly.shape[1])
    if has_deltas:
        n = max(n, 2 * m_max + 3)
    if n > MAX_DEGREE:
        raise TruncationError(f"moment index {n} beyond {MAX_DEGREE}")
    m_up = _padded(_poly_moments(up.poly), n + 1)
    m_lo = _padded(_poly_moments(lo.poly), n + 1)
    dm_up = dm_lo = None
    if has_deltas:
        dm_up = _delta_moments(up, 2 * m_max + 3)
        dm_lo = _delta_moments(lo, 2 * m_max + 3)
        for f, sign, partner in ((lo, lo_sign, up), (up, up_sign, lo)):
            source = lam * f + omega * multiply_by_z(partner)
            residual = delta_tail_residual(source, sign, m_max)
            if residual > DEFAULT_TAIL_TOL:
                warnings.warn(
                    f"raising sum truncated at m_max={m_max}: dropped amplitude ~{residual:.3e}",
                    TruncationWarning,
                    stacklevel=4,
                )
    # creation operator sums run over the parity of the partner's combination
    raise_up = _raised(m_lo, m_up, dm_lo, dm_up, lo_sign.parity, n, m_max, lam, omega)
    raise_lo = _raised(m_up, m_lo, dm_up, dm_lo, up_sign.parity, n, m_max, lam, omega)
    upper = _combine(params.delta / 2, up, lam, lo, raise_up)
    lower = _combine(-params.delta / 2, lo, lam, up, raise_lo)
    upper, dropped_u = prune(upper, policy.prune_eps)
    lower, dropped_l = prune(lower, policy.prune_eps)
    degree = max(upper.degree, lower.degree)
    if degree > policy.deg_max:
        raise TruncationError(
            f"order {comp.order + 1}: polynomial degree {degree} exceeds deg_max={policy.deg_max} "
            f"after pruning at eps={policy.prune_eps:g}"
        )
    return ParityComponent(
        comp.chain, upper, lower, comp.order + 1, comp.pruned_mass + dropped_u + dropped_l
    )


def step_positive(
    comp: ParityComponent, params: ModelParams, policy: TruncationPolicy | None = None
) -> ParityComponent:
    """``(A_j, B_j) -> (A_j+1, B_j+1)`` on the PLUS chain."""
    if comp.chain is not Chain.PLUS:
        raise ValueError(f"step_positive needs a PLUS component, got {comp.chain.name}")
    return _apply(comp, params, policy or TruncationPolicy())


def step_negative(
    comp: ParityComponent, params: ModelParams, policy: TruncationPolicy | None = None
) -> ParityComponent:
    """``(C_j, D_j) -> (C_j+1, D_j+1)`` on the MINUS chain."""
    if comp.chain is not Chain.MINUS:
        raise ValueError(f"step_negative needs a MINUS component, got {comp.chain.name}")
    return _apply(comp, params, policy or TruncationPolicy())


def step(comp: ParityComponent, params: ModelParams, policy: TruncationPolicy | None = None):
    fn = step_positive if comp.chain is Chain.PLUS else step_negative
    return fn(comp, params, policy)


def h_power_sequence(
    initial: ParityComponent,
    params: ModelParams,
    policy: TruncationPolicy | None = None,
    j_max: int = 8,
) -> list[ParityComponent]:
    """Orders ``0 .. j_max`` of the coefficient-space ``H^j`` applied to ``initial``."""
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    policy = policy or TruncationPolicy()
    seq = [initial]
    for j in range(j_max):
        try:
            seq.append(step(seq[-1], params, policy))
        except (TruncationError, OverflowError, ValueError) as exc:
            raise RecurrenceError(f"recurrence failed producing order {j + 1}: {exc}") from exc
    return seq
