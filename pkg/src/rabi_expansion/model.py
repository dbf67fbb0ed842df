"""Core value types: model parameters, spinor Fock states and parity chains.

Basis ordering is spin-major, photon-minor: index ``s * (n_max + 1) + n`` with
``s = 0`` for spin up (sigma_z = +1) and ``s = 1`` for spin down.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Rabi Hamiltonian ``delta/2 sz + omega a^dag a + lam sx (a + a^dag)``."""

    delta: float
    omega: float
    lam: float

    def __post_init__(self):
        if not (self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if not (self.delta >= 0):
            raise ValueError(f"delta must be non-negative, got {self.delta!r}")
        if not math.isfinite(self.lam):
            raise ValueError(f"lambda must be finite, got {self.lam!r}")

    @property
    def g(self) -> float:
        return self.lam / self.omega


class Spin(enum.Enum):
    UP = "up"
    DOWN = "down"


class Chain(enum.Enum):
    """Parity chains of the Hilbert space.

    PLUS carries spin-up on odd photon numbers and spin-down on even ones,
    MINUS the complementary pattern. The labels follow the chain structure of
    the coherent-state expansion; the eigenvalue under
    ``P = sigma_z exp(i pi a^dag a)`` is computed from the support, not implied
    by the name (PLUS turns out to be P = -1).
    """

    PLUS = "plus"
    MINUS = "minus"

    @property
    def up_photon_parity(self) -> int:
        """Photon-number parity (0 even, 1 odd) of the spin-up support."""
        return 1 if self is Chain.PLUS else 0

    @property
    def p_eigenvalue(self) -> int:
        # sigma_z = +1 on the up component
        return (-1) ** self.up_photon_parity

    @property
    def opposite(self) -> Chain:
        return Chain.MINUS if self is Chain.PLUS else Chain.PLUS

    def mask(self, n_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Boolean support masks (up, down) over photon numbers 0..n_max."""
        n = np.arange(n_max + 1)
        up = (n % 2) == self.up_photon_parity
        return up, ~up


@dataclass(frozen=True, eq=False)
class SpinorFockState:
    """Two-component amplitude vector in a truncated Fock basis."""

    up: np.ndarray
    down: np.ndarray
    n_max: int = field(init=False)

    def __post_init__(self):
        up = np.asarray(self.up, dtype=complex).copy()
        down = np.asarray(self.down, dtype=complex).copy()
        if up.ndim != 1 or up.shape != down.shape or up.size < 1:
            raise ValueError("up and down must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(up)) and np.all(np.isfinite(down))):
            raise ValueError("state amplitudes must be finite")
        up.flags.writeable = False
        down.flags.writeable = False
        object.__setattr__(self, "up", up)
        object.__setattr__(self, "down", down)
        object.__setattr__(self, "n_max", up.size - 1)

    # constructors

    @classmethod
    def zeros(cls, n_max: int) -> SpinorFockState:
        z = np.zeros(n_max + 1, dtype=complex)
        return cls(z, z)

    @classmethod
    def from_vector(cls, vec) -> SpinorFockState:
        vec = np.asarray(vec, dtype=complex)
        if vec.ndim != 1 or vec.size % 2:
            raise ValueError("vector length must be even")
        half = vec.size // 2
        return cls(vec[:half], vec[half:])

    @classmethod
    def fock(cls, n: int, spin: Spin | str, n_max: int) -> SpinorFockState:
        """Basis state ``|n, spin>``."""
        spin = Spin(spin)
        if not 0 <= n <= n_max:
            raise ValueError(f"photon number {n} outside 0..{n_max}")
        amp = np.zeros(n_max + 1, dtype=complex)
        amp[n] = 1.0
        zero = np.zeros_like(amp)
        return cls(amp, zero) if spin is Spin.UP else cls(zero, amp)

    @classmethod
    def spin_superposition(cls, n: int, theta: float, phi: float, n_max: int) -> SpinorFockState:
        """``cos(theta/2)|n,up> + exp(i phi) sin(theta/2)|n,down>``."""
        up = cls.fock(n, Spin.UP, n_max)
        down = cls.fock(n, Spin.DOWN, n_max)
        return math.cos(theta / 2) * up + np.exp(1j * phi) * math.sin(theta / 2) * down

    @classmethod
    def coherent(cls, alpha: complex, spin: Spin | str, n_max: int) -> SpinorFockState:
        """Normalized coherent state, truncated (not renormalized) at n_max."""
        spin = Spin(spin)
        amp = np.empty(n_max + 1, dtype=complex)
        amp[0] = math.exp(-abs(alpha) ** 2 / 2)
        for n in range(1, n_max + 1):
            amp[n] = amp[n - 1] * alpha / math.sqrt(n)
        zero = np.zeros_like(amp)
        return cls(amp, zero) if spin is Spin.UP else cls(zero, amp)

    # views and arithmetic

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.up, self.down])

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.up) ** 2) + np.sum(np.abs(self.down) ** 2))

    @property
    def tail_mass(self) -> float:
        """Weight on the last photon number, the truncation diagnostic."""
        return float(abs(self.up[-1]) ** 2 + abs(self.down[-1]) ** 2)

    def mass_above(self, n: int) -> float:
        """Total weight on photon numbers strictly above ``n``."""
        if n >= self.n_max:
            return 0.0
        lo = max(n + 1, 0)
        return float(np.sum(np.abs(self.up[lo:]) ** 2) + np.sum(np.abs(self.down[lo:]) ** 2))

    def inner(self, other: SpinorFockState) -> complex:
        """``<self|other>``."""
        self._check_compatible(other)
        return complex(np.vdot(self.up, other.up) + np.vdot(self.down, other.down))

    def _check_compatible(self, other):
        if not isinstance(other, SpinorFockState):
            return NotImplemented
        if other.n_max != self.n_max:
            raise ValueError(f"n_max mismatch: {self.n_max} vs {other.n_max}")
        return None

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return SpinorFockState(self.up + other.up, self.down + other.down)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return SpinorFockState(self.up - other.up, self.down - other.down)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SpinorFockState(scalar * self.up, scalar * self.down)

    __rmul__ = __mul__

    def __neg__(self):
        return SpinorFockState(-self.up, -self.down)

    def allclose(self, other: SpinorFockState, atol: float = 1e-12) -> bool:
        return (
            other.n_max == self.n_max
            and np.allclose(self.up, other.up, rtol=0, atol=atol)
            and np.allclose(self.down, other.down, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"SpinorFockState(n_max={self.n_max}, norm2={self.norm2:.6g})"
