"""Discretization of the periodic strip R/(Lx Z) x [0, Ymax].

The x direction is periodic and uniform (FFT-ready), the y direction is a
uniform truncation of the half-line.  All tangential derivatives are spectral
(exact on band-limited data); normal derivatives use finite-difference
stencils of order >= 4 in the interior with one-sided closures at y=0 and
y=Ymax (order 4 for derivative orders 1..3, order 3 for 4 and 5).

Conventions used throughout the package:
    * fields are (Nx, Ny) arrays, axis 0 = x, axis 1 = y;
    * <y> denotes the weight 1 + y;
    * integrals over x use the exact mean of the trigonometric interpolant
      (rectangle rule on a periodic uniform grid), integrals over y use the
      trapezoid rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Grid2D", "Field", "fd_weights"]


def fd_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at ``x0``.

    Fornberg's recursion; exact for polynomials of degree < len(nodes).
    """
    n = len(nodes)
    if order >= n:
        raise ValueError(f"need at least {order + 1} nodes for derivative order {order}")
    # c[j, m] = weight of nodes[j] for the m-th derivative
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for m in range(mn, 0, -1):
                    c[i, m] = c1 * (m * c[i - 1, m - 1] - c5 * c[i - 1, m]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for m in range(mn, 0, -1):
                c[j, m] = (c4 * c[j, m] - m * c[j, m - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


# stencil sizes: (interior centered, boundary one-sided) per y-derivative order
_STENCIL_PTS = {1: (5, 5), 2: (5, 6), 3: (7, 7), 4: (7, 8), 5: (9, 9)}


@dataclass
class Grid2D:
    """Uniform tensor grid on [0, Lx) x [0, Ymax].

    Nx must be a power of two (transform efficiency), Ny >= 32.  y_nodes[0]=0
    and y_nodes[-1]=Ymax exactly.
    """

    Nx: int
    Ny: int
    Lx: float = 2.0 * np.pi
    Ymax: float = 30.0
    x_nodes: np.ndarray = field(init=False, repr=False)
    y_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.Nx < 4 or (self.Nx & (self.Nx - 1)) != 0:
            raise ValueError(f"Nx must be a power of two >= 4, got {self.Nx}")
        if self.Ny < 32:
            raise ValueError(f"Ny must be at least 32, got {self.Ny}")
        if self.Lx <= 0 or self.Ymax <= 0:
            raise ValueError("Lx and Ymax must be positive")
        self.x_nodes = self.Lx * np.arange(self.Nx) / self.Nx
        self.y_nodes = np.linspace(0.0, self.Ymax, self.Ny)
        self._dy_mats: dict[int, np.ndarray] = {}
        self._k = 2.0 * np.pi * np.fft.rfftfreq(self.Nx, d=self.Lx / self.Nx)

    @property
    def dy(self) -> float:
        return self.Ymax / (self.Ny - 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers of the rfft modes, k_j = 2*pi*j/Lx."""
        return self._k

    def trapz_weights(self) -> np.ndarray:
        w = np.full(self.Ny, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w

    def deriv_matrix_y(self, j: int) -> np.ndarray:
        """Dense Ny x Ny matrix applying the j-th y-derivative to a y-row."""
        if j not in _STENCIL_PTS:
            raise ValueError(f"y-derivative order must be 1..5, got {j}")
        if j in self._dy_mats:
            return self._dy_mats[j]
        if self.Ny < j + 6:
            raise ValueError(f"Ny={self.Ny} too small for derivative order {j}")
        n_int, n_bnd = _STENCIL_PTS[j]
        half = (n_int - 1) // 2
        y = self.y_nodes
        D = np.zeros((self.Ny, self.Ny))
        for i in range(self.Ny):
            if half <= i <= self.Ny - 1 - half:
                lo = i - half
                D[i, lo:lo + n_int] = fd_weights(y[lo:lo + n_int], y[i], j)
            else:
                lo = min(max(i - (n_bnd - 1) // 2, 0), self.Ny - n_bnd)
                D[i, lo:lo + n_bnd] = fd_weights(y[lo:lo + n_bnd], y[i], j)
        self._dy_mats[j] = D
        return D

    def same_as(self, other: "Grid2D") -> bool:
        return (self.Nx == other.Nx and self.Ny == other.Ny
                and self.Lx == other.Lx and self.Ymax == other.Ymax)


class Field:
    """Real scalar samples on a Grid2D; asserts finiteness on construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.Nx, grid.Ny):
            raise ValueError(f"expected shape {(grid.Nx, grid.Ny)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite entries")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid2D) -> "Field":
        return cls(grid, np.zeros((grid.Nx, grid.Ny)))

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "Field":
        X, Y = np.meshgrid(grid.x_nodes, grid.y_nodes, indexing="ij")
        return cls(grid, fn(X, Y))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other):
        return Field(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def _vals(x):
    return x.values if isinstance(x, Field) else x


# Modes whose amplitude sits below this fraction of the spectral peak are
# rounding debris; k^m multipliers would amplify them above genuine content
# at high derivative orders, so they are zeroed before differentiation.
SPEC_FLOOR = 1e-12


def clean_spectrum(spec: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(spec))
    if peak == 0.0:
        return spec
    out = spec.copy()
    out[np.abs(out) < SPEC_FLOOR * peak] = 0.0
    return out


def dx_m(f: Field, m: int) -> Field:
    """Spectral m-th x-derivative: mode k is multiplied by (ik)^m.

    m = 0 returns a copy.  m is capped at Nx/4, the anti-aliasing guard that
    also bounds the Gevrey-norm truncation order Mmax.
    """
    g = f.grid
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    if m > g.Nx // 4:
        raise ValueError(
            f"x-derivative order m={m} exceeds the anti-aliasing guard Nx/4={g.Nx // 4}")
    if m == 0:
        return f.copy()
    spec = clean_spectrum(np.fft.rfft(f.values, axis=0))
    spec *= (1j * g.wavenumbers[:, None]) ** m
    return Field(g, np.fft.irfft(spec, n=g.Nx, axis=0))


def dx_m_spec(grid: Grid2D, spec: np.ndarray, m: int) -> Field:
    """Same as dx_m but starting from a cached (pre-cleaned) rfft spectrum."""
    if m > grid.Nx // 4:
        raise ValueError(
            f"x-derivative order m={m} exceeds the anti-aliasing guard Nx/4={grid.Nx // 4}")
    mult = (1j * grid.wavenumbers[:, None]) ** m
    return Field(grid, np.fft.irfft(spec * mult, n=grid.Nx, axis=0))


def dy_j(f: Field, j: int) -> Field:
    """Finite-difference j-th y-derivative, j in 1..5.

    Order 4 in the interior; one-sided closures of order 4 (j<=3) or 3
    (j in {4,5}) at the boundaries.  Exact on polynomials up to the stencil
    degree, which the tests rely on.
    """
    D = f.grid.deriv_matrix_y(j)
    return Field(f.grid, f.values @ D.T)


def weighted_l2(f: Field, ellw: float) -> float:
    """|| <y>^ellw f ||_{L^2} with <y> = 1+y; trapezoid in y, exact mean in x."""
    g = f.grid
    wy = g.trapz_weights() * (1.0 + g.y_nodes) ** (2.0 * ellw)
    colsq = np.einsum("ij,ij->j", f.values, f.values) * (g.Lx / g.Nx)
    return float(np.sqrt(np.dot(colsq, wy)))


def integrate_y_from_zero(f: Field) -> Field:
    """Cumulative trapezoid antiderivative in y, vanishing at y=0."""
    g = f.grid
    out = np.empty_like(f.values)
    out[:, 0] = 0.0
    np.cumsum(0.5 * g.dy * (f.values[:, 1:] + f.values[:, :-1]), axis=1, out=out[:, 1:])
    return Field(g, out)


def linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def truncation_check(f: Field, tol: float = 1e-8, name: str = "field") -> bool:
    """Warn when |f| at y=Ymax exceeds tol * max|f| (unsafe y-truncation)."""
    peak = np.max(np.abs(f.values))
    if peak == 0.0:
        return True
    edge = np.max(np.abs(f.values[:, -1]))
    if edge > tol * peak:
        warnings.warn(
            f"{name}: magnitude {edge:.3e} at y=Ymax exceeds {tol:.1e} of max {peak:.3e}; "
            "y-truncation may be unsafe", stacklevel=2)
        return False
    return True
