"""Shared value types and 2x2 building blocks.

Everything downstream works in the fixed coin basis (|H>, |V|): spinors are
complex arrays of shape (2,) with index 0 = H, density matrices are 2x2
complex arrays. Momentum lives on the first Brillouin zone (-pi, pi].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# structural identities (hermiticity, norms, algebra)
STRUCT_TOL = 1e-12
# quadrature, root refinement, eigen-residuals
ROOT_TOL = 1e-10
# |d0 -+ 1| below this counts as a closed gap
GAP_TOL = 1e-9

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def pauli_apply(which: int, s: np.ndarray) -> np.ndarray:
    """Apply sigma_which (0..3) to a spinor."""
    if which not in (0, 1, 2, 3):
        raise ConfigError(f"pauli index must be 0..3, got {which}")
    return PAULI[which] @ np.asarray(s, dtype=complex)


def normalize_angle(a: float) -> float:
    """Reduce an angle mod 2pi into (-pi, pi]."""
    if not np.isfinite(a):
        raise ConfigError(f"angle must be finite, got {a}")
    y = (a + np.pi) % (2 * np.pi) - np.pi
    return np.pi if y == -np.pi else float(y)


def coin_matrix(theta: float) -> np.ndarray:
    """Coin rotation exp(-i*theta*sigma_y), real orthogonal with det 1."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def shift_matrix(k: float | np.ndarray) -> np.ndarray:
    """Momentum-sector shift diag(e^{ik}, e^{-ik}); H moves left, V right."""
    e = np.exp(1j * np.asarray(k))
    return np.array([[e, 0 * e], [0 * e, e.conj()]])


def loss_matrix(l: float) -> np.ndarray:
    """Polarization-selective partial measurement, |+><+| + sqrt(1-l)|-><-|."""
    if not 0 <= l < 1:
        raise ConfigError(f"loss must be in [0, 1), got {l}")
    r = np.sqrt(1 - l)
    return np.array([[(1 + r) / 2, (1 - r) / 2], [(1 - r) / 2, (1 + r) / 2]], dtype=complex)


@dataclass(frozen=True)
class CoinAngles:
    """Protocol parameters (theta1, theta2), stored canonical in (-pi, pi]."""

    theta1: float
    theta2: float

    def __post_init__(self):
        object.__setattr__(self, "theta1", normalize_angle(self.theta1))
        object.__setattr__(self, "theta2", normalize_angle(self.theta2))


def coin_density_matrix(p: float, ket_a: np.ndarray, ket_b: np.ndarray) -> np.ndarray:
    """rho = p |a><a| + (1-p) |b><b| from normalized kets."""
    if not 0 <= p <= 1:
        raise ConfigError(f"mixing weight must be in [0, 1], got {p}")
    a = np.asarray(ket_a, dtype=complex)
    b = np.asarray(ket_b, dtype=complex)
    rho = p * np.outer(a, a.conj()) + (1 - p) * np.outer(b, b.conj())
    validate_density_matrix(rho)
    return rho


def validate_density_matrix(rho: np.ndarray, tol: float = STRUCT_TOL) -> None:
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ConfigError(f"density matrix must be 2x2, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ConfigError("density matrix not hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ConfigError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ConfigError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform momentum samples on (-pi, pi]: -pi excluded, pi included.

    With this placement the periodic trapezoid rule integrates trigonometric
    polynomials up to degree n_points/2 - 1 exactly.
    """

    n_points: int = 2048
    samples: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_points
        if n < 16 or n % 2:
            raise ConfigError(f"n_points must be even and >= 16, got {n}")
        ks = -np.pi + 2 * np.pi * np.arange(1, n + 1) / n
        object.__setattr__(self, "samples", ks)

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n_points

    def refined(self) -> "MomentumGrid":
        return MomentumGrid(2 * self.n_points)


@dataclass(frozen=True)
class TimeGrid:
    """Walk-step times: integer steps plus a dense grid for continuous curves."""

    t_max: float = 7.0
    dt: float = 0.01

    def __post_init__(self):
        if self.t_max < 1 or self.dt <= 0:
            raise ConfigError("need t_max >= 1 and dt > 0")

    @property
    def integer_steps(self) -> np.ndarray:
        return np.arange(int(np.floor(self.t_max)) + 1)

    @property
    def samples(self) -> np.ndarray:
        n = int(round(self.t_max / self.dt))
        return np.arange(n + 1) * self.dt


@dataclass(frozen=True)
class PositionState:
    """Dense two-component wavefunction on a contiguous run of lattice sites.

    amplitudes[0] holds H amplitudes, amplitudes[1] V amplitudes; column j is
    site origin_offset + j.
    """

    origin_offset: int
    amplitudes: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return self.origin_offset + np.arange(self.amplitudes.shape[1])

    def site_spinor(self, x: int) -> np.ndarray:
        j = x - self.origin_offset
        if 0 <= j < self.amplitudes.shape[1]:
            return self.amplitudes[:, j].copy()
        return np.zeros(2, dtype=complex)

    def total_probability(self) -> float:
        return float((np.abs(self.amplitudes) ** 2).sum())
