"""Sine-spectral discretization of (-1, 1) with homogeneous Dirichlet data.

Grid points are x_j = -1 + 2j/(N+1), j = 1..N, so that the Dirichlet
eigenfunctions e_n(x) = sin(n*pi*(x+1)/2) sampled on the grid form the
DST-I matrix.  A field is represented either by its grid values
(:class:`StateField`) or by its sine coefficients (:class:`ModeVector`).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import DomainError

__all__ = [
    "SpatialGrid",
    "StateField",
    "ModeVector",
    "to_modes",
    "from_modes",
    "laplacian",
    "square_dealiased",
    "norms",
    "dst_forward",
    "dst_inverse",
]


@dataclass(frozen=True)
class SpatialGrid:
    n_interior: int

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise DomainError(f"n_interior must be a positive integer, got {self.n_interior!r}")

    @cached_property
    def points(self) -> np.ndarray:
        j = np.arange(1, self.n_interior + 1)
        return -1.0 + 2.0 * j / (self.n_interior + 1)

    @property
    def dx(self) -> float:
        return 2.0 / (self.n_interior + 1)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        n = np.arange(1, self.n_interior + 1)
        return n * np.pi / 2.0

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Dirichlet Laplacian eigenvalues -(n pi / 2)^2, n = 1..N."""
        return -self.wavenumbers**2

    @property
    def n_keep(self) -> int:
        """Number of modes kept by the 2/3 dealiasing rule."""
        return (2 * self.n_interior) // 3

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_interior, dtype=bool)
        mask[: self.n_keep] = True
        return mask

    def basis(self, n: int) -> np.ndarray:
        """Samples of e_n on the grid."""
        return np.sin(n * np.pi * (self.points + 1.0) / 2.0)

    @cached_property
    def sine_matrix(self) -> np.ndarray:
        """S[j, n] = e_{n+1}(x_j); from_modes is S @ a."""
        j = np.arange(1, self.n_interior + 1)
        return np.sin(np.pi * np.outer(j, j) / (self.n_interior + 1))


@dataclass(frozen=True)
class StateField:
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or values.shape[0] != self.grid.n_interior:
            raise DomainError(
                f"field has {values.shape} values, grid expects ({self.grid.n_interior},)"
            )
        object.__setattr__(self, "values", values)

    @property
    def real(self) -> "StateField":
        return StateField(self.grid, self.values.real.copy())

    def conj(self) -> "StateField":
        return StateField(self.grid, np.conj(self.values))

    def __add__(self, other: "StateField") -> "StateField":
        return StateField(self.grid, self.values + other.values)

    def __sub__(self, other: "StateField") -> "StateField":
        return StateField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "StateField":
        return StateField(self.grid, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ModeVector:
    grid: SpatialGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs)
        if coeffs.ndim != 1 or coeffs.shape[0] != self.grid.n_interior:
            raise DomainError(
                f"mode vector has {coeffs.shape} coefficients, grid expects ({self.grid.n_interior},)"
            )
        object.__setattr__(self, "coeffs", coeffs)


def dst_forward(values: np.ndarray) -> np.ndarray:
    """Grid values -> sine coefficients (works along the last axis)."""
    n = values.shape[-1]
    return scipy.fft.dst(values, type=1, axis=-1) / (n + 1)


def dst_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Sine coefficients -> grid values (works along the last axis)."""
    return 0.5 * scipy.fft.dst(coeffs, type=1, axis=-1)


def to_modes(f: StateField) -> ModeVector:
    return ModeVector(f.grid, dst_forward(f.values))


def from_modes(m: ModeVector, grid: SpatialGrid | None = None) -> StateField:
    if grid is not None and grid != m.grid:
        raise DomainError(
            f"mode vector lives on a grid with N={m.grid.n_interior}, not N={grid.n_interior}"
        )
    return StateField(m.grid, dst_inverse(m.coeffs))


def laplacian(m: ModeVector) -> ModeVector:
    return ModeVector(m.grid, m.grid.eigenvalues * m.coeffs)


def square_modes(coeffs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Dealiased square in mode space: truncate, square on the grid, truncate."""
    kept = np.where(mask, coeffs, 0.0)
    out = dst_forward(dst_inverse(kept) ** 2)
    out[~mask] = 0.0
    return out


def product_modes(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Dealiased product of two mode vectors; bilinear companion of square_modes."""
    ua = dst_inverse(np.where(mask, a, 0.0))
    ub = dst_inverse(np.where(mask, b, 0.0))
    out = dst_forward(ua * ub)
    out[~mask] = 0.0
    return out


def square_dealiased(f: StateField) -> StateField:
    """Pointwise square with the top third of sine modes removed.

    The input is projected onto the kept modes first, so states produced by
    the time stepper (which never populate the top third) are squared exactly
    as sampled.
    """
    grid = f.grid
    coeffs = square_modes(dst_forward(f.values), grid.dealias_mask)
    out = dst_inverse(coeffs)
    if np.isrealobj(f.values):
        out = out.real
    return StateField(grid, out)


def norms(f: StateField) -> tuple[float, float]:
    """(sup norm, discrete L2 norm) of a field."""
    v = np.abs(f.values)
    if v.size == 0:
        return 0.0, 0.0
    sup = float(v.max())
    l2 = float(np.sqrt(f.grid.dx * np.sum(v**2)))
    return sup, l2


def inner(f: np.ndarray, g: np.ndarray, dx: float) -> complex:
    """Bilinear (not sesquilinear) L2 pairing on the grid."""
    return dx * np.sum(f * g)
