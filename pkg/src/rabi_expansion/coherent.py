"""Coefficient functions over the coherent-state plane and the bosonic algebra on them.

A coefficient function ``f(zeta, eta)`` with ``z = zeta + i eta`` is a sum of
point masses ``w delta^2(z - z0)`` and a Gaussian-weighted polynomial. It
defines the photon state

    |f, +-> = int int f(zeta, eta) (|z> +- |-z>) dzeta deta,

where ``|z> = exp(z a^dag)|0>`` is the un-normalized coherent state, so
``<n|z> = z^n / sqrt(n!)``. Everything the state depends on is carried by the
holomorphic moments ``M_k = int int f z^k``, which are evaluated in closed form.

The polynomial is stored in the basis ``z^p conj(z)^q exp(-|z|^2)`` where
``int int z^p conj(z)^q z^k exp(-|z|^2) = pi q! [p + k == q]`` is exact.
:meth:`CoefficientFunction.cartesian` and
:meth:`CoefficientFunction.from_cartesian` translate to and from the
``zeta^a eta^b`` coefficient grid.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .oracle import TruncationWarning

# Largest polynomial degree whose moments stay inside double range (170! ~ 7e306).
MAX_DEGREE = 170
DEFAULT_M_MAX = 16
DEFAULT_TAIL_TOL = 1e-10

_NO_POINTS = np.zeros(0, dtype=complex)
_FACT = np.array([float(math.factorial(i)) for i in range(MAX_DEGREE + 1)])
_SQRT_FACT = np.sqrt(_FACT)


class Combination(enum.Enum):
    """Which coherent-state pair a coefficient function integrates against."""

    EVEN = +1  # |z> + |-z>, even photon numbers only
    ODD = -1  # |z> - |-z>, odd photon numbers only

    @property
    def parity(self) -> int:
        return 0 if self is Combination.EVEN else 1

    @property
    def flipped(self) -> Combination:
        return Combination.ODD if self is Combination.EVEN else Combination.EVEN

    @classmethod
    def for_photon_number(cls, n: int) -> Combination:
        return cls.EVEN if n % 2 == 0 else cls.ODD


def _as_poly(arr) -> np.ndarray:
    d = np.atleast_2d(np.asarray(arr, dtype=complex))
    if d.ndim != 2:
        raise ValueError("polynomial coefficients must be a 2-D grid")
    if d.size == 0:
        return np.zeros((1, 1), dtype=complex)
    rows = np.flatnonzero(np.any(d != 0, axis=1))
    cols = np.flatnonzero(np.any(d != 0, axis=0))
    if rows.size == 0:
        return np.zeros((1, 1), dtype=complex)
    return d[: rows[-1] + 1, : cols[-1] + 1].copy()


def _pad_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])), dtype=complex)
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    """Point masses plus ``sum_pq poly[p, q] z^p conj(z)^q exp(-|z|^2)``.

    Integrated against the plain measure ``dzeta deta``. Instances are
    immutable; every operation returns a new function.
    """

    points: np.ndarray
    weights: np.ndarray
    poly: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=complex))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        if pts.shape != wts.shape or pts.ndim != 1:
            raise ValueError("points and weights must be matching 1-D arrays")
        if pts.size:
            # merge coincident point masses
            uniq, inverse = np.unique(pts, return_inverse=True)
            if uniq.size != pts.size:
                merged = np.zeros(uniq.size, dtype=complex)
                np.add.at(merged, inverse.ravel(), wts)
                pts, wts = uniq, merged
        poly = _as_poly(self.poly)
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts)) and np.all(np.isfinite(poly))):
            raise ValueError("coefficient function has non-finite entries")
        for arr in (pts, wts, poly):
            arr.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "poly", poly)

    @classmethod
    def _make(cls, points, weights, poly) -> CoefficientFunction:
        # trusted internal constructor: no merging, trimming or validation
        obj = object.__new__(cls)
        object.__setattr__(obj, "points", points)
        object.__setattr__(obj, "weights", weights)
        object.__setattr__(obj, "poly", poly)
        return obj

    def trimmed(self) -> CoefficientFunction:
        return CoefficientFunction._make(self.points, self.weights, _as_poly(self.poly))

    # constructors

    @classmethod
    def zero(cls) -> CoefficientFunction:
        return cls(np.zeros(0, complex), np.zeros(0, complex), np.zeros((1, 1)))

    @classmethod
    def delta(cls, z0: complex, weight: complex = 1.0) -> CoefficientFunction:
        return cls(np.array([z0]), np.array([weight]), np.zeros((1, 1)))

    @classmethod
    def from_zbar(cls, coeffs) -> CoefficientFunction:
        """``sum_q coeffs[q] conj(z)^q exp(-|z|^2)``."""
        coeffs = np.asarray(coeffs, dtype=complex).reshape(1, -1)
        return cls(np.zeros(0, complex), np.zeros(0, complex), coeffs)

    @classmethod
    def from_holomorphic(cls, poly, points=(), weights=()) -> CoefficientFunction:
        return cls(np.asarray(points, complex), np.asarray(weights, complex), poly)

    @classmethod
    def from_cartesian(cls, c, points=(), weights=()) -> CoefficientFunction:
        """From ``sum_ab c[a][b] zeta^a eta^b exp(-zeta^2 - eta^2)``."""
        return cls(np.asarray(points, complex), np.asarray(weights, complex), _cartesian_to_holo(c))

    # views

    @property
    def delta_terms(self) -> list[tuple[complex, complex]]:
        return [(complex(z), complex(w)) for z, w in zip(self.points, self.weights)]

    @property
    def has_deltas(self) -> bool:
        return self.points.size > 0

    @property
    def degree(self) -> int:
        """Total polynomial degree, -1 for no polynomial part."""
        p, q = np.nonzero(self.poly)
        return int(np.max(p + q)) if p.size else -1

    @property
    def n_terms(self) -> int:
        return int(np.count_nonzero(self.poly))

    def cartesian(self) -> np.ndarray:
        """Coefficient grid ``c[a][b]`` of ``zeta^a eta^b exp(-zeta^2 - eta^2)``."""
        return _holo_to_cartesian(self.poly)

    def __call__(self, zeta, eta):
        """Value of the smooth (polynomial) part; point masses are not evaluated."""
        z = np.asarray(zeta) + 1j * np.asarray(eta)
        zc = np.conj(z)
        out = np.zeros(np.broadcast(z).shape, dtype=complex)
        for p, q in zip(*np.nonzero(self.poly)):
            out = out + self.poly[p, q] * z**p * zc**q
        return out * np.exp(-(z * zc).real)

    # linear structure

    def __add__(self, other):
        if not isinstance(other, CoefficientFunction):
            return NotImplemented
        poly = _pad_add(self.poly, other.poly)
        if not other.points.size:
            return CoefficientFunction._make(self.points, self.weights, poly)
        if not self.points.size:
            return CoefficientFunction._make(other.points, other.weights, poly)
        if np.array_equal(self.points, other.points):
            return CoefficientFunction._make(self.points, self.weights + other.weights, poly)
        return CoefficientFunction(
            np.concatenate([self.points, other.points]),
            np.concatenate([self.weights, other.weights]),
            poly,
        )

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return CoefficientFunction._make(self.points, scalar * self.weights, scalar * self.poly)

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    def __sub__(self, other):
        if not isinstance(other, CoefficientFunction):
            return NotImplemented
        return self + (-1) * other

    def __repr__(self):
        return (
            f"CoefficientFunction(deltas={len(self.points)}, terms={self.n_terms}, "
            f"degree={self.degree})"
        )


def _binomial_powers(a: int, s1: complex, s2: complex) -> list[tuple[int, int, complex]]:
    """Terms of ``(s1 x + s2 y)^a`` as (power of x, power of y, coefficient)."""
    return [(a - r, r, comb(a, r) * s1 ** (a - r) * s2**r) for r in range(a + 1)]


def _holo_to_cartesian(d: np.ndarray) -> np.ndarray:
    deg = d.shape[0] + d.shape[1] - 2
    c = np.zeros((deg + 1, deg + 1), dtype=complex)
    for p, q in zip(*np.nonzero(d)):
        # z^p = (zeta + i eta)^p, conj(z)^q = (zeta - i eta)^q
        for a1, b1, k1 in _binomial_powers(p, 1, 1j):
            for a2, b2, k2 in _binomial_powers(q, 1, -1j):
                c[a1 + a2, b1 + b2] += d[p, q] * k1 * k2
    return _as_poly(c)


def _cartesian_to_holo(c) -> np.ndarray:
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    deg = c.shape[0] + c.shape[1] - 2
    d = np.zeros((deg + 1, deg + 1), dtype=complex)
    for a, b in zip(*np.nonzero(c)):
        # zeta = (z + zc)/2, eta = (z - zc)/(2i)
        for p1, q1, k1 in _binomial_powers(a, 0.5, 0.5):
            for p2, q2, k2 in _binomial_powers(b, -0.5j, 0.5j):
                d[p1 + p2, q1 + q2] += c[a, b] * k1 * k2
    return _as_poly(d)


# moments


def gaussian_moment(a: int, b: int) -> float:
    """``int int exp(-zeta^2 - eta^2) zeta^a eta^b dzeta deta`` in closed form."""
    if a < 0 or b < 0:
        raise ValueError("exponents must be non-negative")

    def one_dim(k):
        if k % 2:
            return 0.0
        # sqrt(pi) (k-1)!! / 2^(k/2)
        return math.sqrt(math.pi) * math.prod(range(k - 1, 0, -2)) / 2 ** (k // 2)

    return one_dim(a) * one_dim(b)


def _check_degree(f: CoefficientFunction):
    if f.poly.shape[1] - 1 > MAX_DEGREE:
        raise OverflowError(
            f"polynomial degree in conj(z) {f.poly.shape[1] - 1} exceeds {MAX_DEGREE}"
        )


def _poly_moments(poly: np.ndarray) -> np.ndarray:
    """``M_k`` of the polynomial part for ``k = 0 .. Q-1``; zero beyond."""
    n_p, n_q = poly.shape
    weighted = poly * (np.pi * _FACT[:n_q])
    out = weighted[0].copy()
    for p in range(1, min(n_p, n_q)):
        # row p feeds k = q - p
        out[: n_q - p] += weighted[p, p:]
    return out


def holo_moments(f: CoefficientFunction, k_max: int, delta_k_max: int | None = None) -> np.ndarray:
    """``M_k = int int f z^k`` for ``k = 0 .. k_max``.

    Point masses contribute only up to ``delta_k_max`` (default ``k_max``).
    """
    _check_degree(f)
    out = np.zeros(k_max + 1, dtype=complex)
    pm = _poly_moments(f.poly)
    m = min(pm.size, k_max + 1)
    out[:m] = pm[:m]
    if f.has_deltas:
        kd = k_max if delta_k_max is None else min(k_max, delta_k_max)
        if kd >= 0:
            powers = f.points[None, :] ** np.arange(kd + 1)[:, None]
            out[: kd + 1] += powers @ f.weights
    return out


def holo_moment(f: CoefficientFunction, k: int) -> complex:
    if k < 0:
        raise ValueError("k must be non-negative")
    return complex(holo_moments(f, k)[k])


def multiply_by_z(f: CoefficientFunction) -> CoefficientFunction:
    """``z f``: point weights pick up ``z0``; the polynomial shifts ``p -> p + 1``."""
    poly = np.zeros((f.poly.shape[0] + 1, f.poly.shape[1]), dtype=complex)
    poly[1:] = f.poly
    return CoefficientFunction._make(f.points, f.weights * f.points, poly)


# Fock <-> coherent


def fock_to_coefficient(n: int) -> tuple[CoefficientFunction, Combination]:
    """Coefficient function reproducing ``|n>`` against its parity combination.

    ``conj(z)^n exp(-|z|^2) / (2 pi sqrt(n!))``; the factor 1/2 accounts for
    the two coherent states in each combination.
    """
    if not 0 <= n <= MAX_DEGREE:
        raise ValueError(f"n must be in 0..{MAX_DEGREE}")
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[n] = 1.0 / (2 * np.pi * _SQRT_FACT[n])
    return CoefficientFunction.from_zbar(coeffs), Combination.for_photon_number(n)


def fock_amplitudes_to_coefficient(amplitudes, sign: Combination) -> CoefficientFunction:
    """Linear combination of :func:`fock_to_coefficient` over one parity.

    Amplitudes on the photon numbers of the wrong parity are ignored.
    """
    amps = np.asarray(amplitudes, dtype=complex)
    n = np.arange(amps.size)
    if amps.size - 1 > MAX_DEGREE:
        raise ValueError(f"photon cutoff above {MAX_DEGREE} is not representable")
    coeffs = np.where(n % 2 == sign.parity, amps, 0) / (2 * np.pi * _SQRT_FACT[n])
    return CoefficientFunction.from_zbar(coeffs)


def reconstruct_fock_amplitudes(
    f: CoefficientFunction, sign: Combination, n_max: int
) -> np.ndarray:
    """Fock amplitudes ``<n| int int f (|z> +- |-z>)`` for ``n = 0 .. n_max``."""
    _check_degree(f)
    n = np.arange(n_max + 1)
    scaled = np.zeros(n_max + 1, dtype=complex)
    pm = _poly_moments(f.poly)
    m = min(pm.size, n_max + 1)
    scaled[:m] = pm[:m] / _SQRT_FACT[:m]
    if f.has_deltas:
        # z0^n / sqrt(n!) by recursion, safe for any n_max
        term = f.weights.copy()
        scaled[0] += term.sum()
        for k in range(1, n_max + 1):
            term = term * f.points / math.sqrt(k)
            scaled[k] += term.sum()
    return np.where(n % 2 == sign.parity, 2 * scaled, 0)


# bosonic operators


def default_m_max(f: CoefficientFunction) -> int:
    if not f.has_deltas:
        return DEFAULT_M_MAX
    r2 = float(np.max(np.abs(f.points)) ** 2)
    return max(DEFAULT_M_MAX, math.ceil(r2) + 8)


def delta_tail_residual(f: CoefficientFunction, sign: Combination, m_max: int) -> float:
    """Size of the first Fock amplitude dropped by truncating the raising sum at ``m_max``."""
    if not f.has_deltas:
        return 0.0
    k = 2 * m_max + 2 + sign.parity
    logs = k * np.log(np.maximum(np.abs(f.points), 1e-300)) - 0.5 * math.lgamma(k + 1)
    return float(2 * math.sqrt(k + 1) * np.sum(np.abs(f.weights) * np.exp(logs)))


def raising_coefficients(
    f: CoefficientFunction, sign: Combination, m_max: int, tail_tol: float = DEFAULT_TAIL_TOL
) -> np.ndarray:
    """Antiholomorphic coefficients of ``a^dag`` applied to ``|f, sign>``.

    The output is ``sum_k M_k conj(z)^(k+1) / (pi k!)`` over ``k`` of the input
    parity: ``k = 2m`` for EVEN input, ``k = 2m + 1`` for ODD. Polynomial
    moments vanish above the polynomial degree, so their sum terminates on its
    own; point-mass moments are summed for ``m <= m_max``.
    """
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    k_delta = 2 * m_max + sign.parity
    k_max = max(f.poly.shape[1] - 1, k_delta if f.has_deltas else 0)
    moments = holo_moments(f, k_max, delta_k_max=k_delta)
    k = np.arange(k_max + 1)
    moments[k % 2 != sign.parity] = 0
    coeffs = np.zeros(k_max + 2, dtype=complex)
    coeffs[1:] = moments / (np.pi * _FACT[k])
    if f.has_deltas:
        residual = delta_tail_residual(f, sign, m_max)
        if residual > tail_tol:
            warnings.warn(
                f"raising sum truncated at m_max={m_max}: dropped amplitude ~{residual:.3e}",
                TruncationWarning,
                stacklevel=3,
            )
    return coeffs


def apply_a(f: CoefficientFunction, sign: Combination) -> tuple[CoefficientFunction, Combination]:
    return multiply_by_z(f), sign.flipped


def apply_adag(
    f: CoefficientFunction, sign: Combination, m_max: int | None = None
) -> tuple[CoefficientFunction, Combination]:
    if m_max is None:
        m_max = default_m_max(f)
    raised = raising_coefficients(f, sign, m_max)
    return CoefficientFunction._make(_NO_POINTS, _NO_POINTS, raised[None, :]), sign.flipped


def apply_n(
    f: CoefficientFunction, sign: Combination, m_max: int | None = None
) -> tuple[CoefficientFunction, Combination]:
    """Number operator as ``a^dag a``; the combination parity is preserved."""
    lowered, lowered_sign = apply_a(f, sign)
    if m_max is None:
        m_max = default_m_max(f)
    return apply_adag(lowered, lowered_sign, m_max)
