import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prandtl_lab.grid import (Field, Grid2D, dx_m, dy_j, fd_weights,
                              integrate_y_from_zero, linf, weighted_l2)


@pytest.fixture(scope="module")
def g():
    return Grid2D(128, 257)


def test_grid_invariants(g):
    assert g.y_nodes[0] == 0.0
    assert g.y_nodes[-1] == g.Ymax
    assert np.allclose(np.diff(g.y_nodes), g.dy)
    with pytest.raises(ValueError):
        Grid2D(100, 257)    # not a power of two
    with pytest.raises(ValueError):
        Grid2D(128, 16)     # Ny too small


def test_fd_weights_match_classic():
    # 5-point centered first derivative on a unit grid
    w = fd_weights(np.arange(5.0), 2.0, 1)
    assert np.allclose(w, [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])


def test_dx_of_constant_is_zero(g):
    f = Field(g, np.ones((g.Nx, g.Ny)))
    assert linf(dx_m(f, 1)) < 1e-14
    assert linf(dx_m(f, 3)) < 1e-12


def test_dx2_eigenfunction(g):
    f = Field.from_function(g, lambda X, Y: np.sin(2 * np.pi * X / g.Lx) * np.exp(-Y))
    expect = -((2 * np.pi / g.Lx) ** 2)
    assert np.allclose(dx_m(f, 2).values, expect * f.values, atol=1e-11)


def test_dx3_against_finite_differences():
    g = Grid2D(256, 65, Lx=2 * np.pi, Ymax=10.0)
    rng = np.random.default_rng(3)
    # band-limited random field: modes up to 8, 1/k^2 amplitudes
    vals = np.zeros((g.Nx, g.Ny))
    X, Y = np.meshgrid(g.x_nodes, g.y_nodes, indexing="ij")
    for k in range(1, 9):
        ck, sk = rng.normal(size=2) / k**2
        vals += (ck * np.cos(k * X) + sk * np.sin(k * X)) * np.exp(-Y / 3.0)
    f = Field(g, vals)
    spectral = dx_m(f, 3).values

    # independent oracle: three applications of 8th-order centered differences
    hx = g.Lx / g.Nx
    w = fd_weights(hx * np.arange(-4.0, 5.0), 0.0, 1)
    def cdiff(a):
        out = np.zeros_like(a)
        for off, wk in zip(range(-4, 5), w):
            out += wk * np.roll(a, -off, axis=0)
        return out
    fd = cdiff(cdiff(cdiff(vals)))
    rel = np.max(np.abs(spectral - fd)) / np.max(np.abs(spectral))
    assert rel <= 1e-6


def test_dx_guard(g):
    f = Field.zeros(g)
    with pytest.raises(ValueError, match="anti-aliasing"):
        dx_m(f, g.Nx // 4 + 1)


def test_dy2_polynomial_exact(g):
    f = Field.from_function(g, lambda X, Y: Y**2)
    assert np.allclose(dy_j(f, 2).values, 2.0, atol=1e-8)


def test_dy1_exponential(g):
    f = Field.from_function(g, lambda X, Y: np.exp(-Y))
    err = np.abs(dy_j(f, 1).values + f.values)
    assert err[:, 3:-3].max() < 1e-4          # interior O(dy^4)
    assert err.max() < 1e-3                   # one-sided rows included


def test_dy5_refinement_order():
    errs = []
    # the pair stays below the rounding floor of the 1/dy^5 amplification
    for ny in (129, 257):
        g = Grid2D(64, ny, Ymax=10.0)
        f = Field.from_function(g, lambda X, Y: np.sin(Y))
        err = np.max(np.abs(dy_j(f, 5).values - np.cos(g.y_nodes)[None, :]))
        errs.append(err)
    order = np.log2(errs[0] / errs[1])
    assert order >= 3.0


def test_weighted_l2_zero_and_constant(g):
    assert weighted_l2(Field.zeros(g), 1.5) == 0.0
    one = Field(g, np.ones((g.Nx, g.Ny)))
    assert np.isclose(weighted_l2(one, 0.0), np.sqrt(g.Lx * g.Ymax), rtol=1e-12)


def test_weighted_l2_against_quadrature():
    """Trapezoid values converge at 2nd order to the dense quadrature oracle."""
    yy = np.linspace(0, 30.0, 240001)
    from scipy.integrate import trapezoid
    ref = np.sqrt(2 * np.pi * trapezoid((1 + yy) ** 2 * np.exp(-2 * yy), yy))
    errs = []
    for ny in (257, 513):
        g = Grid2D(32, ny)
        f = Field.from_function(g, lambda X, Y: np.exp(-Y))
        errs.append(abs(weighted_l2(f, 1.0) - ref))
    assert errs[0] <= 3e-6 * ref
    assert np.log2(errs[0] / errs[1]) >= 1.8


def test_parseval_consistency(g):
    rng = np.random.default_rng(11)
    vals = rng.normal(size=(g.Nx, g.Ny)) * np.exp(-g.y_nodes / 4)[None, :]
    f = Field(g, vals)
    direct = weighted_l2(f, 0.0)
    spec = np.fft.rfft(vals, axis=0)
    c = np.full(g.Nx // 2 + 1, 2.0)
    c[0] = c[-1] = 1.0
    wy = g.trapz_weights()
    modal = np.sqrt(np.sum((c[:, None] * np.abs(spec) ** 2 * g.Lx / g.Nx**2) @ wy))
    assert abs(direct - modal) <= 1e-10 * direct


def test_integrate_y(g):
    one = Field(g, np.ones((g.Nx, g.Ny)))
    out = integrate_y_from_zero(one)
    assert np.allclose(out.values, g.y_nodes[None, :], atol=1e-12)
    cosf = Field.from_function(g, lambda X, Y: np.cos(Y))
    out = integrate_y_from_zero(cosf)
    assert np.max(np.abs(out.values - np.sin(g.y_nodes)[None, :])) < 5e-3  # O(dy^2)
    assert linf(integrate_y_from_zero(Field.zeros(g))) == 0.0


def test_linf(g):
    assert linf(Field.zeros(g)) == 0.0
    vals = np.zeros((g.Nx, g.Ny))
    vals[5, 7] = 3.5
    assert linf(Field(g, vals)) == 3.5
    f = Field.from_function(g, lambda X, Y: np.sin(2 * np.pi * X / g.Lx) * np.exp(-Y))
    assert linf(f) <= 1.0
    assert linf(f) >= 1.0 - 2e-2


def test_derivatives_commute(g):
    f = Field.from_function(g, lambda X, Y: np.sin(2 * np.pi * X / g.Lx) * Y**3)
    lhs = dy_j(dx_m(f, 2), 2)
    rhs = dx_m(dy_j(f, 2), 2)
    scale = weighted_l2(f, 0.0)
    assert weighted_l2(lhs - rhs, 0.0) <= 1e-8 * scale


def test_dx_composition(g):
    f = Field.from_function(g, lambda X, Y: np.sin(3 * 2 * np.pi * X / g.Lx) * np.exp(-Y))
    a = dx_m(dx_m(f, 2), 3)
    b = dx_m(f, 5)
    assert weighted_l2(a - b, 0.0) <= 1e-10 * max(weighted_l2(b, 0.0), 1e-30)


def test_field_rejects_nan(g):
    vals = np.zeros((g.Nx, g.Ny))
    vals[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        Field(g, vals)


@settings(max_examples=10, deadline=None)
@given(k=st.integers(min_value=1, max_value=8), m=st.integers(min_value=1, max_value=2))
def test_dx_eigenvalue_property(k, m):
    g = Grid2D(64, 33, Ymax=5.0)
    f = Field.from_function(g, lambda X, Y: np.sin(k * X) * (1 + Y))
    got = dx_m(dx_m(f, m), m)
    # tolerance covers spectral rounding amplified by the top retained mode
    tol = 1e-7 * max(float(k) ** (2 * m), (g.Nx / 2.0) ** (2 * m) * 1e-6)
    assert np.allclose(got.values, (-1.0) ** m * float(k) ** (2 * m) * f.values, atol=tol)


def test_truncation_validator(g):
    from prandtl_lab.grid import truncation_check
    slow = Field.from_function(g, lambda X, Y: np.exp(-Y / 10.0))
    with pytest.warns(UserWarning, match="truncation"):
        assert not truncation_check(slow, name="slow-decay field")
    import warnings as _w
    compact = Field.from_function(g, lambda X, Y: np.exp(-Y) * (Y < 10))
    with _w.catch_warnings():
        _w.simplefilter("error")
        assert truncation_check(compact)
    assert truncation_check(Field.zeros(g))
