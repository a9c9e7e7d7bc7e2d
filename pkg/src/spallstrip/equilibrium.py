"""Positive equilibrium of u'' + u^2 = 0 on (-1, 1) and the spectrum of its linearization.

Everything here is posed for the *discrete* problem the time stepper
integrates: sine modes above the 2/3 cutoff are dropped and the quadratic
term is the dealiased square.  The equilibrium is therefore an exact fixed
point of :func:`spallstrip.continuation.evolve`, and the eigenpairs are
those of the Jacobian the stepper linearizes around.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ComputationError, DomainError
from .spatial import SpatialGrid, StateField, dst_forward, dst_inverse, square_modes

__all__ = [
    "Equilibrium",
    "EigenPair",
    "shoot_profile",
    "find_equilibrium",
    "leading_eigenpair",
    "rayleigh",
    "linearization_matrix",
    "boundary_slopes",
]


@dataclass(frozen=True)
class Equilibrium:
    profile: StateField
    residual: float
    center_value: float = float("nan")

    @property
    def grid(self) -> SpatialGrid:
        return self.profile.grid

    @property
    def coeffs(self) -> np.ndarray:
        return dst_forward(self.profile.values)

    @classmethod
    def zero(cls, grid: SpatialGrid) -> "Equilibrium":
        """The trivial equilibrium u = 0."""
        return cls(StateField(grid, np.zeros(grid.n_interior)), 0.0, 0.0)


@dataclass(frozen=True)
class EigenPair:
    mu: float
    phi: StateField
    residual: float = field(default=0.0)


def _rk4_shoot(center_value: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    h = 1.0 / steps
    u = np.empty(steps + 1)
    du = np.empty(steps + 1)
    u[0], du[0] = center_value, 0.0
    y, p = center_value, 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            k1y, k1p = p, -y * y
            y2, p2 = y + 0.5 * h * k1y, p + 0.5 * h * k1p
            k2y, k2p = p2, -y2 * y2
            y3, p3 = y + 0.5 * h * k2y, p + 0.5 * h * k2p
            k3y, k3p = p3, -y3 * y3
            y4, p4 = y + h * k3y, p + h * k3p
            k4y, k4p = p4, -y4 * y4
            y = y + h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
            p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
            u[i + 1], du[i + 1] = y, p
    return u, du


def shoot_profile(center_value: float, steps: int = 2000) -> tuple[np.ndarray, float]:
    """Integrate u'' = -u^2 from x = 0 with u(0) = center_value, u'(0) = 0.

    Returns the profile on the uniform nodes of [0, 1] and u(1).  Large
    center values overshoot and run off to -inf before x = 1; the end value
    is then reported as -inf.
    """
    if not center_value > 0:
        raise DomainError(f"center value must be positive, got {center_value}")
    u, _ = _rk4_shoot(float(center_value), int(steps))
    end = u[-1]
    if not np.isfinite(end):
        end = -np.inf
    return u, float(end)


def _bracket(steps: int, lo: float = 0.1, hi: float = 50.0, n_scan: int = 64) -> tuple[float, float]:
    scan = np.geomspace(lo, hi, n_scan)
    ends = [shoot_profile(c, steps)[1] for c in scan]
    for a, b, ea, eb in zip(scan[:-1], scan[1:], ends[:-1], ends[1:]):
        if ea > 0 and eb <= 0:
            return float(a), float(b)
    raise ComputationError(f"no sign change of u(1) for center values in [{lo}, {hi}]")


def _hermite(xn: np.ndarray, u: np.ndarray, du: np.ndarray, x: np.ndarray) -> np.ndarray:
    h = xn[1] - xn[0]
    i = np.clip((x / h).astype(int), 0, len(xn) - 2)
    s = (x - xn[i]) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * u[i] + h10 * h * du[i] + h01 * u[i + 1] + h11 * h * du[i + 1]


def linearization_matrix(grid: SpatialGrid, potential: np.ndarray) -> np.ndarray:
    """Matrix of d_xx + potential on the kept sine modes.

    With S the grid-by-mode sine matrix, grid -> mode is dx * S^T, so the
    multiplication operator becomes the symmetric dx * S^T diag(V) S.
    """
    k = grid.n_keep
    s = grid.sine_matrix[:, :k]
    mat = grid.dx * (s.T * np.real(potential)) @ s
    mat[np.diag_indices(k)] += grid.eigenvalues[:k]
    return mat


def _residual_modes(grid: SpatialGrid, coeffs: np.ndarray) -> np.ndarray:
    return grid.eigenvalues * coeffs + square_modes(coeffs, grid.dealias_mask)


def find_equilibrium(grid: SpatialGrid, tol: float = 1e-10, steps: int = 2000,
                     max_newton: int = 50) -> Equilibrium:
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    lo, hi = _bracket(steps)
    e_lo = shoot_profile(lo, steps)[1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e_mid = shoot_profile(mid, steps)[1]
        if (e_mid > 0) == (e_lo > 0):
            lo, e_lo = mid, e_mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    center = 0.5 * (lo + hi)
    u, du = _rk4_shoot(center, steps)
    xn = np.linspace(0.0, 1.0, steps + 1)
    values = _hermite(xn, u, du, np.abs(grid.points))

    k = grid.n_keep
    coeffs = dst_forward(values)
    coeffs[k:] = 0.0
    for _ in range(max_newton):
        res = _residual_modes(grid, coeffs)
        values = dst_inverse(coeffs)
        if np.abs(dst_inverse(res)).max() < tol:
            break
        jac = linearization_matrix(grid, 2.0 * values)
        coeffs[:k] -= np.linalg.solve(jac, res[:k])
    else:
        raise ComputationError(f"Newton polish did not reach residual {tol} in {max_newton} steps")
    values = dst_inverse(coeffs)
    residual = float(np.abs(dst_inverse(_residual_modes(grid, coeffs))).max())
    return Equilibrium(StateField(grid, values), residual, center)


def _resample(values: np.ndarray, grid: SpatialGrid, target: SpatialGrid) -> np.ndarray:
    """Evaluate the sine series of `values` at the points of another grid."""
    coeffs = dst_forward(values)
    n = np.arange(1, grid.n_interior + 1)
    arg = np.pi * np.outer(target.points + 1.0, n) / 2.0
    return np.sin(arg) @ coeffs


def _inverse_iteration(mat: np.ndarray, shift: float, tol: float, max_iter: int,
                       start: np.ndarray) -> tuple[float, np.ndarray]:
    k = mat.shape[0]
    # a shift that is exactly an eigenvalue would make the factorization singular
    shift = shift + 1e-9 * (1.0 + abs(shift))
    lu = scipy.linalg.lu_factor(mat - shift * np.eye(k), check_finite=False)
    v = start / np.linalg.norm(start)
    for _ in range(max_iter):
        w = scipy.linalg.lu_solve(lu, v, check_finite=False)
        v = w / np.linalg.norm(w)
        rq = float(v @ mat @ v)
        if np.linalg.norm(mat @ v - rq * v) < tol:
            return rq, v
    raise ComputationError(f"inverse iteration at shift {shift:.6g} did not converge in {max_iter} steps")


def leading_eigenpair(eq: Equilibrium, k: int = 1, coarse_n: int = 32,
                      tol: float = 1e-11, max_iter: int = 200) -> list[EigenPair]:
    """Top-k eigenpairs of d_xx + 2 u_+, largest first.

    Shifts come from a dense solve of the same operator on a coarse grid;
    each pair is then refined by shifted inverse iteration on the full grid.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    grid = eq.grid
    mat = linearization_matrix(grid, 2.0 * eq.profile.values)

    coarse = SpatialGrid(min(coarse_n, grid.n_interior))
    coarse_pot = _resample(np.real(eq.profile.values), grid, coarse)
    shifts = np.linalg.eigvalsh(linearization_matrix(coarse, 2.0 * coarse_pot))[::-1][:k]

    pairs = []
    kk = grid.n_keep
    for i, shift in enumerate(shifts):
        # start vector with the expected number of sign changes
        start = np.zeros(kk)
        start[: i + 1] = 1.0 / np.arange(1, i + 2)
        start += 1e-3
        mu, v = _inverse_iteration(mat, float(shift), tol, max_iter, start)
        coeffs = np.zeros(grid.n_interior)
        coeffs[:kk] = v
        phi = dst_inverse(coeffs)
        if phi[np.argmax(np.abs(phi))] < 0:
            phi = -phi
            coeffs = -coeffs
        res_modes = mat @ coeffs[:kk] - mu * coeffs[:kk]
        pairs.append(EigenPair(mu, StateField(grid, phi), float(np.linalg.norm(res_modes))))
    return pairs


def rayleigh(q: StateField, eq: Equilibrium) -> float:
    grid = eq.grid
    a = dst_forward(np.asarray(q.values, dtype=float))
    denom = float(a @ a)
    if denom == 0.0:
        raise DomainError("Rayleigh quotient of the zero field")
    kk = grid.n_keep
    mat = linearization_matrix(grid, 2.0 * eq.profile.values)
    num = float(a[:kk] @ mat @ a[:kk]) + float(np.sum(grid.eigenvalues[kk:] * a[kk:] ** 2))
    return num / denom


def boundary_slopes(f: StateField) -> tuple[float, float]:
    """One-sided slopes |f(x_1)| / dx and |f(x_N)| / dx at x = -1 and x = +1."""
    v = np.real(f.values)
    dx = f.grid.dx
    return float(v[0] / dx), float(v[-1] / dx)


def gradient_norm_sq(f: StateField) -> float:
    """||f_x||^2 computed from the sine coefficients."""
    a = dst_forward(f.values)
    return float(np.sum(f.grid.wavenumbers**2 * np.abs(a) ** 2))
