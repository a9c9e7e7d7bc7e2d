import cmath
import math

import numpy as np
import pytest

from spallstrip.equilibrium import EigenPair, boundary_slopes
from spallstrip.errors import ComputationError, DomainError
from spallstrip.manifold import (expand_graph, invariance_residual, reduced_half_period,
                                 reduced_time_map, seed_initial, winding_time)
from spallstrip.spatial import StateField, inner, norms


def test_psi2_dense_oracle(s64):
    # grid-space dense solve of (2 mu - A_+) psi = P(phi^2), restricted to kept modes
    g, exp = s64.grid, s64.exp
    k = g.n_keep
    s = g.sine_matrix[:, :k]
    phi = s64.pair.phi.values
    proj = s @ (g.dx * s.T)  # grid -> kept modes -> grid
    lap = s @ np.diag(g.eigenvalues[:k]) @ (g.dx * s.T)
    a = lap + proj @ np.diag(2 * s64.eq.profile.values) @ proj
    rhs = proj @ (phi**2)
    c2 = g.dx * phi @ rhs
    rhs = rhs - c2 * phi
    m = 2 * s64.pair.mu * proj - a
    psi2 = np.linalg.lstsq(m, rhs, rcond=None)[0]
    psi2 = proj @ psi2
    psi2 -= g.dx * (phi @ psi2) * phi
    assert exp.reduced_coeffs[0] == pytest.approx(c2, rel=1e-10)
    assert np.abs(exp.psi[0].values - psi2).max() < 1e-10


def test_psi_orthogonal_and_real(s128):
    exp = s128.exp
    for psi in exp.psi:
        assert np.isrealobj(psi.values)
        assert abs(inner(psi.values, s128.pair.phi.values, s128.grid.dx)) < 1e-10


def test_invariance(s128):
    for q in (0.01, 0.05j, 0.05 * cmath.exp(2j)):
        assert invariance_residual(s128.exp, q) < 1e-10


def test_graph_quadratic_at_zero(s128):
    exp = s128.exp
    prev = None
    for tau in (0.04, 0.02, 0.01, 0.005):
        ratio = norms(StateField(s128.grid, exp.graph(tau) - tau * s128.pair.phi.values))[1] / tau
        if prev is not None:
            assert ratio == pytest.approx(prev / 2, rel=0.05)
        prev = ratio


def test_tangency_constant_stable(s64, s128):
    def const(s):
        tau = 0.03
        u = seed_initial(tau, s.exp).values - s.eq.profile.values - tau * s.pair.phi.values
        return norms(StateField(s.grid, u))[1] / tau**2

    assert const(s64) == pytest.approx(const(s128), rel=1e-3)


def test_seed_basics(s128):
    exp = s128.exp
    assert np.array_equal(seed_initial(0, exp).values, s128.eq.profile.values)
    tau = 0.013 + 0.007j
    assert np.allclose(seed_initial(tau.conjugate(), exp).values, np.conj(seed_initial(tau, exp).values),
                       rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        seed_initial(1.01 * exp.r_max, exp)


def test_imaginary_seed_positive(s128):
    u = seed_initial(0.05j, s128.exp)
    im = StateField(s128.grid, u.values.imag)
    assert np.all(im.values > 0)
    assert min(boundary_slopes(im)) > 0
    assert np.abs(im.values - 0.05 * s128.pair.phi.values).max() < 0.05**2 * 10


def test_truncation_consistency(s128):
    lo = expand_graph(s128.eq, s128.pair, 6)
    hi = expand_graph(s128.eq, s128.pair, 10)
    tau = 0.05
    assert np.abs(seed_initial(tau, lo).values - seed_initial(tau, hi).values).max() <= tau**6


def test_order_and_resonance(s128):
    with pytest.raises(DomainError):
        expand_graph(s128.eq, s128.pair, 1)
    # 2 mu on top of the second eigenvalue
    fake = EigenPair(s128.pairs[1].mu / 2, s128.pair.phi)
    with pytest.raises(ComputationError, match="order 2"):
        expand_graph(s128.eq, fake, 3)


def test_reduced_time_map(s128):
    exp, mu = s128.exp, s128.pair.mu
    assert reduced_time_map(0.01, 0.01, exp) == 0
    q0, q1 = 0.01, 0.013 + 0.004j
    assert reduced_time_map(q0, q1, exp, linear=True) == pytest.approx(cmath.log(q1 / q0) / mu, rel=1e-12)
    # explicit estimate for short segments
    for q in (0.0105, 0.01 + 0.0005j):
        t = reduced_time_map(q0, q, exp)
        assert abs(t) <= 2 * abs(q - q0) / abs(exp.reduced_rhs(q0))
    with pytest.raises(DomainError):
        reduced_time_map(-0.01, 0.01, exp)


def test_winding_radius_independent(s128):
    exp, mu = s128.exp, s128.pair.mu
    for r in (0.01, 0.02, 0.05):
        assert abs(winding_time(exp, r) - 2j * math.pi / mu) < 1e-8


def test_half_winding_linear_and_zero_analogue(s128):
    exp, mu = s128.exp, s128.pair.mu
    assert winding_time(exp, 0.02, half=True, rate=mu) == pytest.approx(1j * math.pi / mu, abs=1e-12)
    rate = -math.pi**2 / 4
    assert winding_time(exp, 0.02, rate=rate) == pytest.approx(-8j / math.pi, abs=1e-12)
    assert abs(winding_time(exp, 0.02, half=True, rate=rate)) == pytest.approx(4 / math.pi, abs=1e-12)


def test_winding_pole_on_contour(s128):
    poles = [p for p in s128.exp.reduced_poles() if abs(p) > 1e-9]
    with pytest.raises(DomainError):
        winding_time(s128.exp, abs(poles[0]))
    with pytest.raises(DomainError):
        winding_time(s128.exp, 0.0)


def test_reduced_half_period(s128):
    assert reduced_half_period(s128.exp, 0.02) == pytest.approx(math.pi / s128.pair.mu, rel=1e-10)
