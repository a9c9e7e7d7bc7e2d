import cmath
import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from spallstrip import quadode
from spallstrip.errors import DomainError
from spallstrip.quadode import (HalfLine, OdePoint, SolutionDisk, conserved_quantity, enclosing_disk,
                                line_curvature, min_angle, ode_flow, supnorm_bound)

finite = st.floats(-10, 10, allow_nan=False)
upper = st.builds(complex, st.floats(-5, 5), st.floats(0.01, 5))


def test_flow_identity_at_zero_time():
    assert ode_flow(0, 1 + 2j).value == 1 + 2j


def test_flow_matches_rk_integration():
    sol = scipy.integrate.solve_ivp(lambda t, y: y**2, (0, 0.5), [1.0], rtol=1e-12, atol=1e-14)
    assert ode_flow(0.5, 1).value == pytest.approx(2.0, abs=1e-12)
    assert abs(sol.y[0, -1] - 2.0) < 1e-10


def test_flow_blows_up_at_pole():
    assert ode_flow(1, 1).is_infinite
    assert ode_flow(1 + 1e-16, 1).is_infinite
    assert not ode_flow(0.999, 1).is_infinite


def test_zero_data_stays_zero():
    assert ode_flow(3 + 4j, 0).value == 0


def test_infinity_marker_has_no_value():
    with pytest.raises(DomainError):
        complex(OdePoint.infinity())


def test_conserved_quantity_examples():
    assert conserved_quantity(1) == 0
    assert conserved_quantity(1j) == -1
    assert conserved_quantity(ode_flow(0.3, 1 + 1j).value) == pytest.approx(-0.5, abs=1e-15)
    with pytest.raises(DomainError):
        conserved_quantity(0)


@settings(max_examples=300, deadline=None)
@given(u0=st.builds(complex, finite, finite).filter(lambda z: abs(z) > 1e-3), t=st.floats(0, 50))
def test_conservation_along_real_time(u0, t):
    u = ode_flow(t, u0)
    if u.is_infinite or abs(1 / u0 - t) < 1e-6:
        return
    h0 = conserved_quantity(u0)
    assert abs(conserved_quantity(u.value) - h0) <= 1e-12 * max(1.0, abs(1 / u0), t)


@settings(max_examples=200, deadline=None)
@given(u0=st.builds(complex, finite, finite), t=st.builds(complex, finite, finite))
def test_conjugation(u0, t):
    a, b = ode_flow(t, u0), ode_flow(t.conjugate(), u0.conjugate())
    assert a.is_infinite == b.is_infinite
    if not a.is_infinite:
        assert b.value == pytest.approx(a.value.conjugate(), rel=1e-14, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(u0=upper)
def test_disk_invariance(u0):
    disk = enclosing_disk([u0])
    for tau in np.geomspace(1e-4, 10 * disk.radius, 60):
        assert disk.contains(ode_flow(tau, u0).value, tol=1e-12)


def test_real_data_blows_up_exactly_at_inverse():
    for u0 in (0.3, 1.0, 7.5):
        for t in np.linspace(0, 1 / u0, 50, endpoint=False):
            assert not ode_flow(t, u0).is_infinite
        assert ode_flow(1 / u0, u0).is_infinite


def test_enclosing_disk_examples():
    assert enclosing_disk([1 + 1j]).radius == 1
    assert enclosing_disk([0.7j]).radius == pytest.approx(0.35)
    assert enclosing_disk([1 + 1j, 2 + 1j]).radius == 2.5
    with pytest.raises(DomainError):
        enclosing_disk([1 + 1j, 2])
    with pytest.raises(DomainError):
        enclosing_disk([])


@given(st.lists(upper, min_size=1, max_size=20))
def test_enclosing_disk_contains_samples(zs):
    assert np.all(enclosing_disk(zs).contains(zs, tol=1e-12))


def test_solution_disk_geometry():
    d = SolutionDisk(2.0)
    assert d.center == 2j
    assert d.contains(0, tol=1e-15)
    with pytest.raises(DomainError):
        SolutionDisk(0)


def test_min_angle_examples():
    assert min_angle([1j]) == pytest.approx(math.pi / 2)
    assert min_angle([1 + 1j]) == pytest.approx(math.pi / 4)
    assert min_angle([1 + 1j, -1 + 1j]) == pytest.approx(math.pi / 4)
    with pytest.raises(DomainError):
        min_angle([])
    with pytest.raises(DomainError):
        min_angle([-1j])


def test_half_line():
    h = HalfLine(math.pi / 4)
    assert h.point(2) == pytest.approx(math.sqrt(2) * (1 + 1j))
    assert h.is_left_of(1j) and not h.is_left_of(1 + 0.1j)
    with pytest.raises(DomainError):
        HalfLine(0.0)


def test_supnorm_bound_examples():
    assert supnorm_bound(0, 2, math.pi / 3) == pytest.approx(2)
    assert supnorm_bound(4, 1, math.pi / 4) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        supnorm_bound(1, 1, math.pi)
    with pytest.raises(DomainError):
        supnorm_bound(1, 0, 1.0)


def test_supnorm_bound_branch_switch():
    # for phi = pi/2 the first branch covers all t, since alpha t = 0 < 1/s0
    for t in (0.0, 1.0, 100.0):
        assert supnorm_bound(t, 2.0, math.pi / 2) == pytest.approx((t**2 + 0.25) ** -0.5)
    # elsewhere the branches do not meet at the switch point; the second one is a
    # looser bound, the tight maximum there is 1/(beta t)
    phi, s0 = math.pi / 3, 1.0
    t_sw = 1 / (s0 * math.cos(phi))
    left = supnorm_bound(t_sw * (1 - 1e-12), s0, phi)
    assert left == pytest.approx(1 / (math.sin(phi) * t_sw), rel=1e-9)
    assert supnorm_bound(t_sw, s0, phi, tight=True) == pytest.approx(left, rel=1e-9)
    assert supnorm_bound(t_sw, s0, phi) >= left


@settings(max_examples=300, deadline=None)
@given(t=st.floats(0, 100), s0=st.floats(0.01, 50), phi=st.floats(0.01, math.pi - 0.01),
       frac=st.floats(0.0, 1.0))
def test_flow_obeys_decay_bound(t, s0, phi, frac):
    # every start on the segment (0, s0 e^{i phi}] is covered
    s = max(frac, 1e-6) * s0
    u = ode_flow(t, s * cmath.exp(1j * phi))
    assert abs(u.value) <= supnorm_bound(t, s0, phi, tight=True) * (1 + 1e-12)
    assert supnorm_bound(t, s0, phi, tight=True) <= supnorm_bound(t, s0, phi) * (1 + 1e-15)


def test_supnorm_bound_decays():
    vals = [supnorm_bound(t, 1.0, 0.7) for t in np.geomspace(10, 1e6, 20)]
    assert all(a > b for a, b in zip(vals[:-1], vals[1:]))
    assert vals[-1] < 1e-5


def test_line_curvature_examples():
    assert line_curvature(0, 1, math.pi / 2) == pytest.approx(2)
    assert line_curvature(1, 1, math.pi / 2) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        line_curvature(0, 0, 1.0)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0, 20), t=st.floats(0.01, 20), phi=st.floats(0.01, math.pi - 0.01))
def test_line_curvature_positive(s, t, phi):
    assert line_curvature(s, t, phi) > 0


def test_line_curvature_matches_image_curve():
    # s -> U(t) started at s e^{i phi}: compare with Re(i z' conj z'') by differences
    t, phi, h = 0.7, 1.1, 1e-4
    e = cmath.exp(1j * phi)
    for s in (0.2, 1.0, 3.0):
        z = [ode_flow(t, (s + k * h) * e).value for k in (-1, 0, 1)]
        d1 = (z[2] - z[0]) / (2 * h)
        d2 = (z[2] - 2 * z[1] + z[0]) / h**2
        assert (1j * d1 * d2.conjugate()).real == pytest.approx(line_curvature(s, t, phi), rel=1e-5)


def test_vectorised_flow():
    u0 = np.array([0, 1, 2 + 1j])
    out = quadode.ode_flow_array(1.0, u0)
    assert out[0] == 0 and np.isinf(out[1])
    assert out[2] == pytest.approx(ode_flow(1.0, 2 + 1j).value)
