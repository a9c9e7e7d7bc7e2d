import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spallstrip.errors import DomainError
from spallstrip.spatial import (ModeVector, SpatialGrid, StateField, from_modes, laplacian, norms,
                                square_dealiased, to_modes)


def test_grid_points():
    g = SpatialGrid(15)
    x = g.points
    assert np.all(np.diff(x) > 0) and x[0] > -1 and x[-1] < 1
    assert np.allclose(np.diff(x), g.dx)
    with pytest.raises(DomainError):
        SpatialGrid(0)


def test_basis_vectors_map_to_unit_coefficients():
    g = SpatialGrid(32)
    a = to_modes(StateField(g, g.basis(1))).coeffs
    assert np.allclose(a, np.eye(32)[0], atol=1e-14)
    a = to_modes(StateField(g, 3 * g.basis(2))).coeffs
    assert np.allclose(a, 3 * np.eye(32)[1], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 200), seed=st.integers(0, 2**32 - 1))
def test_round_trip_and_naive_transform(n, seed):
    rng = np.random.default_rng(seed)
    g = SpatialGrid(n)
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    m = to_modes(StateField(g, f))
    naive = g.sine_matrix.T @ f * g.dx / 1.0
    assert np.allclose(m.coeffs, naive, atol=1e-12 * np.abs(f).max() * n)
    back = from_modes(m, g).values
    assert np.abs(back - f).max() < 1e-12 * np.abs(f).max()


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 200), seed=st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    rng = np.random.default_rng(seed)
    g = SpatialGrid(n)
    f = StateField(g, rng.standard_normal(n) + 1j * rng.standard_normal(n))
    _, l2 = norms(f)
    assert l2**2 == pytest.approx(np.sum(np.abs(to_modes(f).coeffs) ** 2), rel=1e-10)


def test_length_mismatch():
    g = SpatialGrid(8)
    with pytest.raises(DomainError):
        StateField(g, np.zeros(7))
    with pytest.raises(DomainError):
        ModeVector(g, np.zeros(9))
    with pytest.raises(DomainError):
        from_modes(ModeVector(g, np.zeros(8)), SpatialGrid(9))


def test_laplacian_eigenvalues():
    g = SpatialGrid(16)
    e = np.eye(16)
    assert laplacian(ModeVector(g, e[0])).coeffs[0] == pytest.approx(-np.pi**2 / 4)
    assert laplacian(ModeVector(g, e[1])).coeffs[1] == pytest.approx(-np.pi**2)
    assert np.all(laplacian(ModeVector(g, np.zeros(16))).coeffs == 0)


def test_laplacian_symmetric():
    rng = np.random.default_rng(1)
    g = SpatialGrid(40)
    u, v = rng.standard_normal(40), rng.standard_normal(40)
    lu = laplacian(ModeVector(g, u)).coeffs
    lv = laplacian(ModeVector(g, v)).coeffs
    assert lu @ v == pytest.approx(u @ lv, rel=1e-15)


def test_laplacian_spectral_convergence():
    g = SpatialGrid(32)
    x = g.points
    lap = from_modes(laplacian(to_modes(StateField(g, np.sin(np.pi * (x + 1))))), g).values
    assert np.abs(lap + np.pi**2 * np.sin(np.pi * (x + 1))).max() < 1e-12

    # sinh(e_1) extends smoothly as an odd function about x = +-1
    def fxx(x):
        s = np.sin(np.pi * (x + 1) / 2)
        c = np.cos(np.pi * (x + 1) / 2)
        k = np.pi / 2
        return -k**2 * s * np.cosh(s) + k**2 * c**2 * np.sinh(s)

    errs = []
    for n in (8, 16, 32):
        g = SpatialGrid(n)
        f = np.sinh(np.sin(np.pi * (g.points + 1) / 2))
        lap = from_modes(laplacian(to_modes(StateField(g, f))), g).values
        errs.append(np.abs(lap - fxx(g.points)).max())
    assert errs[1] < 1e-3 * errs[0] and errs[2] < 1e-10


def test_square_dealiased():
    g = SpatialGrid(64)
    assert np.all(square_dealiased(StateField(g, np.zeros(64))).values == 0)
    f = StateField(g, 0.7 * g.basis(1))
    out = square_dealiased(f)
    assert np.isrealobj(out.values)
    # e_1^2 = (1 - cos(pi (x+1)))/2 on a 4x finer grid, restricted to the kept modes
    fine = SpatialGrid(4 * 64 + 3)
    ref = to_modes(StateField(fine, (0.7 * fine.basis(1)) ** 2)).coeffs[: g.n_keep]
    got = to_modes(out).coeffs[: g.n_keep]
    assert np.abs(got - ref)[:8].max() < 1e-4
    # the grid sees the square exactly in low modes up to aliasing of the slow tail
    assert np.abs(to_modes(out).coeffs[g.n_keep:]).max() < 1e-15


def test_square_of_resolved_field_is_exact():
    g = SpatialGrid(96)
    f = g.basis(1) + 0.3j * g.basis(3)
    out = square_dealiased(StateField(g, f)).values
    # f^2 has a sine series with slowly decaying tail, so compare in the kept modes
    exact = to_modes(StateField(g, f**2)).coeffs
    got = to_modes(StateField(g, out)).coeffs
    assert np.allclose(got[: g.n_keep], exact[: g.n_keep], atol=1e-13)


def test_norms():
    g = SpatialGrid(63)
    assert norms(StateField(g, np.zeros(63))) == (0.0, 0.0)
    sup, l2 = norms(StateField(g, 1j * g.basis(1)))
    assert sup == pytest.approx(1.0, abs=1e-15)
    big = SpatialGrid(4001)
    assert norms(StateField(big, big.basis(1)))[1] == pytest.approx(1.0, abs=1e-12)
