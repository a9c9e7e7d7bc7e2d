"""Closed-form flow of U' = U^2 in complex time and its invariant geometry.

The flow is U(t) = 1 / (1/U0 - t).  In the chart 1/U the motion is the
translation 1/U0 - t, so Im(1/U) is conserved along real time and every
real-time orbit starting in the upper half-plane runs on a circle through
the origin centred on the positive imaginary axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError

__all__ = [
    "OdePoint",
    "SolutionDisk",
    "HalfLine",
    "ode_flow",
    "conserved_quantity",
    "enclosing_disk",
    "min_angle",
    "supnorm_bound",
    "line_curvature",
    "BLOWUP_ATOL",
]

BLOWUP_ATOL = 1e-14


@dataclass(frozen=True)
class OdePoint:
    """A point of the Riemann sphere: a finite value or the point at infinity."""

    value: complex | None

    @classmethod
    def infinity(cls) -> "OdePoint":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __complex__(self) -> complex:
        if self.value is None:
            raise DomainError("the point at infinity has no finite value")
        return complex(self.value)


@dataclass(frozen=True)
class SolutionDisk:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"solution disk radius must be positive, got {self.radius}")

    @property
    def center(self) -> complex:
        return complex(0.0, self.radius)

    def contains(self, z, tol: float = 0.0) -> np.ndarray | bool:
        """True where |z - iR| <= R (1 + tol)."""
        return np.abs(np.asarray(z) - self.center) <= self.radius * (1.0 + tol)


@dataclass(frozen=True)
class HalfLine:
    """The ray s * exp(i angle), s >= 0, with 0 < angle < pi."""

    angle: float

    def __post_init__(self):
        if not 0.0 < self.angle < math.pi:
            raise DomainError(f"half-line angle must lie in (0, pi), got {self.angle}")

    def point(self, s: float) -> complex:
        return s * complex(math.cos(self.angle), math.sin(self.angle))

    def is_left_of(self, z) -> np.ndarray | bool:
        """Points turned counter-clockwise from the ray (arg z >= angle)."""
        return np.angle(np.asarray(z)) >= self.angle


def ode_flow(t: complex, u0: complex) -> OdePoint:
    u0 = complex(u0)
    t = complex(t)
    if u0 == 0:
        return OdePoint(0j)
    # u0 / (1 - t u0) avoids overflow of 1/u0 for tiny data
    den = 1.0 - t * u0
    if abs(den) <= BLOWUP_ATOL * max(1.0, abs(t)) * abs(u0):
        return OdePoint.infinity()
    return OdePoint(u0 / den)


def ode_flow_array(t: complex, u0: np.ndarray) -> np.ndarray:
    """Vectorised flow; entries that hit the pole come back as complex inf."""
    u0 = np.asarray(u0, dtype=complex)
    out = np.zeros_like(u0)
    den = 1.0 - t * u0
    pole = (np.abs(den) <= BLOWUP_ATOL * max(1.0, abs(t)) * np.abs(u0)) & (u0 != 0)
    out[~pole] = u0[~pole] / den[~pole]
    out[pole] = complex(np.inf, np.inf)
    return out


def conserved_quantity(u: complex) -> float:
    u = complex(u)
    if u == 0:
        raise DomainError("Im(1/u) is undefined at u = 0")
    return (1.0 / u).imag


def _as_samples(samples: Iterable[complex]) -> np.ndarray:
    arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                     dtype=complex).ravel()
    if arr.size == 0:
        raise DomainError("need at least one sample")
    if np.any(arr.imag <= 0):
        bad = int(np.argmax(arr.imag <= 0))
        raise DomainError(f"sample {bad} = {arr[bad]} is not in the open upper half-plane")
    return arr


def enclosing_disk(samples: Iterable[complex]) -> SolutionDisk:
    """Smallest solution disk containing every sample."""
    z = _as_samples(samples)
    r = (z.real**2 + z.imag**2) / (2.0 * z.imag)
    return SolutionDisk(float(r.max()))


def min_angle(samples: Iterable[complex]) -> float:
    z = _as_samples(samples)
    return float(np.angle(z).min())


def supnorm_bound(t: float, s0: float, phi: float, tight: bool = False) -> float:
    """Upper bound for |U(t)| started on the segment (0, s0 e^{i phi}].

    For alpha t >= 1/s0 the maximum over the segment is 1/(beta t); the
    default returns the looser 1/(alpha beta t), which is still an upper bound.
    """
    if not 0.0 < phi < math.pi:
        raise DomainError(f"phi must lie in (0, pi), got {phi}")
    if not s0 > 0:
        raise DomainError(f"s0 must be positive, got {s0}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    alpha, beta = math.cos(phi), math.sin(phi)
    if alpha * t < 1.0 / s0:
        return ((alpha / s0 - t) ** 2 + beta**2 / s0**2) ** -0.5
    if tight:
        return 1.0 / (beta * t)
    return 1.0 / (alpha * beta * t)


def line_curvature(s: float, t: float, phi: float) -> float:
    """Re(i z' conj(z'')) of s -> U(t) started at s e^{i phi}."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not 0.0 < phi < math.pi:
        raise DomainError(f"phi must lie in (0, pi), got {phi}")
    return 2.0 * t * math.sin(phi) / ((s * t - math.cos(phi)) ** 2 + math.sin(phi) ** 2) ** 3
