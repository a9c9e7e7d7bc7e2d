"""Taylor graph of the fast unstable manifold of u_+ and its reduced flow.

The manifold is parameterized as

    W(q) = u_+ + q phi + sum_{k>=2} q^k psi_k,    <phi, psi_k> = 0,

with reduced dynamics q' = mu q + sum_{k>=2} c_k q^k.  Matching powers of
q in the invariance equation W'(q) q' = A_+ (W - u_+) + (W - u_+)^2 gives,
order by order,

    (k mu - A_+) psi_k = P_- g_k - sum_{j=2}^{k-1} (k-j+1) c_j psi_{k-j+1},
    c_k = <phi, g_k>,

where g_k is the q^k coefficient of (q phi + sum psi_j q^j)^2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .equilibrium import EigenPair, Equilibrium, linearization_matrix
from .errors import ComputationError, DomainError
from .spatial import StateField, dst_forward, dst_inverse, product_modes

__all__ = [
    "ManifoldExpansion",
    "expand_graph",
    "seed_initial",
    "reduced_time_map",
    "winding_time",
    "reduced_half_period",
]

RESONANCE_TOL = 1e-6
POLE_MARGIN = 1e-6


@dataclass(frozen=True)
class ManifoldExpansion:
    eq: Equilibrium
    pair: EigenPair
    order: int
    psi: tuple[StateField, ...]
    reduced_coeffs: tuple[float, ...]

    @property
    def mu(self) -> float:
        return self.pair.mu

    @property
    def r_max(self) -> float:
        """Largest seed amplitude accepted by seed_initial."""
        return 0.1 * np.abs(self.eq.profile.values).max() / np.abs(self.pair.phi.values).max()

    def graph(self, tau: complex) -> np.ndarray:
        """tau phi + sum tau^k psi_k on the grid."""
        out = tau * self.pair.phi.values.astype(complex)
        p = tau
        for psi in self.psi:
            p = p * tau
            out = out + p * psi.values
        return out

    def reduced_rhs(self, q, linear: bool = False):
        """mu q + f(q) for the reduced one-dimensional flow."""
        out = self.mu * q
        if linear:
            return out
        p = q
        for c in self.reduced_coeffs:
            p = p * q
            out = out + c * p
        return out

    def reduced_poles(self) -> np.ndarray:
        """Zeros of mu q + f(q), including q = 0."""
        # numpy wants the highest power first
        poly = [*reversed(self.reduced_coeffs), self.mu, 0.0]
        while len(poly) > 2 and poly[0] == 0:
            poly = poly[1:]
        return np.roots(poly)


def expand_graph(eq: Equilibrium, pair: EigenPair, order: int = 8) -> ManifoldExpansion:
    if order < 2:
        raise DomainError(f"expansion order must be >= 2, got {order}")
    grid = eq.grid
    kk = grid.n_keep
    mask = grid.dealias_mask
    mu = pair.mu
    jac = linearization_matrix(grid, 2.0 * eq.profile.values)
    spectrum = np.linalg.eigvalsh(jac)

    phi = dst_forward(np.real(pair.phi.values))
    modes = [None, phi]  # modes[m] = psi_m, with psi_1 = phi
    coeffs = {}
    for k in range(2, order + 1):
        gap = np.min(np.abs(k * mu - spectrum))
        if gap < RESONANCE_TOL:
            raise ComputationError(f"order {k}: k*mu = {k * mu:.10g} is resonant with the spectrum (gap {gap:.3g})")
        g = np.zeros(grid.n_interior)
        for i in range(1, k):
            g += product_modes(modes[i], modes[k - i], mask)
        c_k = float(phi @ g)
        coeffs[k] = c_k
        rhs = g - c_k * phi
        for j in range(2, k):
            rhs -= (k - j + 1) * coeffs[j] * modes[k - j + 1]
        psi = np.zeros(grid.n_interior)
        psi[:kk] = np.linalg.solve(k * mu * np.eye(kk) - jac, rhs[:kk])
        psi -= (phi @ psi) * phi
        modes.append(psi)

    psis = tuple(StateField(grid, dst_inverse(m)) for m in modes[2:])
    return ManifoldExpansion(eq, pair, order, psis, tuple(coeffs[k] for k in range(2, order + 1)))


def invariance_residual(exp: ManifoldExpansion, q: complex) -> float:
    """Sup norm of W'(q) q' - [A_+ v + v^2] with v = W(q) - u_+."""
    grid = exp.eq.grid
    mask = grid.dealias_mask
    v = dst_forward(exp.graph(q))
    dv = exp.pair.phi.values.astype(complex)
    for k, psi in enumerate(exp.psi, start=2):
        dv = dv + k * q ** (k - 1) * psi.values
    lhs = dst_forward(dv) * exp.reduced_rhs(q)
    kk = grid.n_keep
    jac = linearization_matrix(grid, 2.0 * exp.eq.profile.values)
    rhs = product_modes(v, v, mask)
    rhs[:kk] += jac @ v[:kk]
    return float(np.abs(dst_inverse(lhs - rhs)).max())


def seed_initial(tau: complex, exp: ManifoldExpansion, r_max: float | None = None) -> StateField:
    r_max = exp.r_max if r_max is None else r_max
    if abs(tau) > r_max:
        raise DomainError(f"|tau| = {abs(tau):.4g} exceeds the seeding radius {r_max:.4g}")
    values = exp.eq.profile.values + exp.graph(complex(tau))
    return StateField(exp.eq.grid, values)


def manifold_coordinate(u: StateField, exp: ManifoldExpansion) -> complex:
    """Projection <phi, u - u_+>, the q coordinate of a state near u_+."""
    diff = u.values - exp.eq.profile.values
    return complex(u.grid.dx * np.sum(exp.pair.phi.values * diff))


def _segment_distance(p: complex, a: complex, b: complex) -> float:
    d = b - a
    s = ((p - a) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(p - (a + s * d))


def reduced_time_map(q0: complex, q1: complex, exp: ManifoldExpansion, linear: bool = False) -> complex:
    """Complex time the reduced flow needs to carry q0 to q1 along a straight segment."""
    q0, q1 = complex(q0), complex(q1)
    if q0 == q1:
        return 0j
    poles = np.array([0.0]) if linear else exp.reduced_poles()
    for p in poles:
        if _segment_distance(complex(p), q0, q1) < POLE_MARGIN:
            raise DomainError(f"segment {q0} -> {q1} passes within {POLE_MARGIN} of the pole {complex(p)}")
    d = q1 - q0

    def integrand(s):
        return d / exp.reduced_rhs(q0 + s * d, linear=linear)

    val, _ = scipy.integrate.quad(integrand, 0.0, 1.0, complex_func=True,
                                  epsabs=1e-14, epsrel=1e-13, limit=200)
    return complex(val)


def winding_time(exp: ManifoldExpansion, radius: float, half: bool = False,
                 rate: float | None = None, n_nodes: int = 512) -> complex:
    """Time integral of dq / (reduced rhs) around the circle |q| = radius.

    The full circle is integrated with the periodic trapezoid rule; ``half``
    integrates the upper semicircle from radius to -radius.  Passing ``rate``
    replaces the denominator by rate * q (a linear flow with that eigenvalue).
    """
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if rate is None:
        for p in exp.reduced_poles():
            if abs(abs(p) - radius) < POLE_MARGIN:
                raise DomainError(f"pole {complex(p)} lies on the circle of radius {radius}")

        def denom(q):
            return exp.reduced_rhs(q)
    else:
        def denom(q):
            return rate * q

    if half:
        def integrand(theta):
            q = radius * cmath.exp(1j * theta)
            return 1j * q / denom(q)

        val, _ = scipy.integrate.quad(integrand, 0.0, math.pi, complex_func=True,
                                      epsabs=1e-14, epsrel=1e-13)
        return complex(val)
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    q = radius * np.exp(1j * theta)
    return complex(np.sum(1j * q / denom(q)) * (2.0 * np.pi / n_nodes))


def reduced_half_period(exp: ManifoldExpansion, q0: float) -> float:
    """Imaginary time after which q' = i (mu q + f(q)) from real q0 > 0 is real again."""

    def rhs(_, y):
        q = complex(y[0], y[1])
        v = 1j * exp.reduced_rhs(q)
        return [v.real, v.imag]

    def crossing(_, y):
        return y[1]

    crossing.terminal = True
    crossing.direction = -1  # upper half-plane first, back through the negative axis

    span = 4.0 * math.pi / exp.mu
    sol = scipy.integrate.solve_ivp(rhs, (0.0, span), [q0, 0.0], events=crossing,
                                    rtol=1e-12, atol=1e-15, method="DOP853")
    hits = [t for t in sol.t_events[0] if t > 1e-9]
    if not hits:
        raise ComputationError("reduced flow did not return to the real axis")
    return float(hits[0])
