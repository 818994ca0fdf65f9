"""Cartesian finite differences on the unit square with dimension splitting.

Unknowns are the interior nodes (x_i, y_j) = ((i+1) hx, (j+1) hy), stored
with x fastest: index = j*nx + i.  A_1 is the second difference along x,
A_2 along y; Dirichlet values adjacent to the boundary are folded into the
sources g_1(t), g_2(t).  Stage solves run the Thomas algorithm on every
grid line at once.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import AffineOperator, Layout, SplitSystem


class TridiagonalBreakdown(ArithmeticError):
    pass


@dataclass(frozen=True)
class CartesianGrid:
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("need at least one interior point per direction")

    @classmethod
    def square(cls, k: int) -> "CartesianGrid":
        """k interior points per direction, h = 1/(k+1)."""
        return cls(k, k)

    @classmethod
    def from_h(cls, h: float) -> "CartesianGrid":
        k = round(1.0 / h) - 1
        if abs((k + 1) * h - 1.0) > 1e-12:
            raise ValueError(f"1/h must be an integer, got h={h}")
        return cls.square(k)

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx + 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny + 1)

    @property
    def h(self) -> float:
        if self.nx != self.ny:
            raise ValueError("mesh width differs per direction")
        return self.hx

    @property
    def m(self) -> int:
        return self.nx * self.ny

    @property
    def x(self) -> np.ndarray:
        return self.hx * np.arange(1, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return self.hy * np.arange(1, self.ny + 1)

    def mesh(self):
        """Coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y, indexing="xy")

    def restrict(self, fn, *args) -> np.ndarray:
        """Flat vector of fn(x, y, *args) at the interior nodes."""
        X, Y = self.mesh()
        return np.broadcast_to(np.asarray(fn(X, Y, *args), dtype=float), X.shape).ravel().copy()

    @property
    def layout(self) -> Layout:
        return Layout("cartesian", (self.nx, self.ny))


@dataclass
class DirichletData:
    boundary_value: Callable  # (x, y, t) -> value on the boundary


# --- tridiagonal solves -------------------------------------------------------

def thomas_solve(diag_lower, diag_main, diag_upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system by Gaussian elimination without pivoting.

    ``diag_lower`` and ``diag_upper`` have length n-1.  ``rhs`` may have shape
    (n,) or (n, k) for k right-hand sides with the same matrix.
    """
    lo = np.asarray(diag_lower, dtype=float)
    up = np.asarray(diag_upper, dtype=float)
    b = np.array(diag_main, dtype=float)
    d = np.array(rhs, dtype=float)
    n = b.size
    if lo.size != n - 1 or up.size != n - 1 or d.shape[0] != n:
        raise ValueError("inconsistent tridiagonal system sizes")
    for k in range(1, n):
        if b[k - 1] == 0.0:
            raise TridiagonalBreakdown("tridiagonal breakdown: zero pivot")
        w = lo[k - 1] / b[k - 1]
        b[k] -= w * up[k - 1]
        d[k] -= w * d[k - 1]
    if b[n - 1] == 0.0:
        raise TridiagonalBreakdown("tridiagonal breakdown: zero pivot")
    d[n - 1] /= b[n - 1]
    for k in range(n - 2, -1, -1):
        d[k] = (d[k] - up[k] * d[k + 1]) / b[k]
    return d


class ConstantTridiagonal:
    """LU factors of tridiag(lower, main, upper) with constant diagonals.

    The factorization is shared by every grid line, so it is computed once and
    applied to all lines simultaneously.
    """

    def __init__(self, n: int, lower: float, main: float, upper: float):
        self.n = n
        self.upper = upper
        piv = np.empty(n)
        mult = np.empty(n)
        piv[0] = main
        mult[0] = 0.0
        for k in range(1, n):
            if piv[k - 1] == 0.0:
                raise TridiagonalBreakdown("tridiagonal breakdown: zero pivot")
            mult[k] = lower / piv[k - 1]
            piv[k] = main - mult[k] * upper
        if piv[-1] == 0.0:
            raise TridiagonalBreakdown("tridiagonal breakdown: zero pivot")
        self.piv = piv
        self.mult = mult

    def solve(self, d: np.ndarray) -> np.ndarray:
        """Solve in place along axis 0 of ``d`` (shape (n, lines))."""
        piv, mult, c = self.piv, self.mult, self.upper
        for k in range(1, self.n):
            d[k] -= mult[k] * d[k - 1]
        d[-1] /= piv[-1]
        for k in range(self.n - 2, -1, -1):
            d[k] -= c * d[k + 1]
            d[k] /= piv[k]
        return d


# --- directional operators -------------------------------------------------

def _second_difference(U: np.ndarray, axis: int) -> np.ndarray:
    """Unscaled second difference with zero Dirichlet padding along ``axis``."""
    out = -2.0 * U
    if axis == 1:
        out[:, 1:] += U[:, :-1]
        out[:, :-1] += U[:, 1:]
    else:
        out[1:, :] += U[:-1, :]
        out[:-1, :] += U[1:, :]
    return out


class DirectionalDiffusion:
    """eps * d^2/dx^2 (direction ``"x"``) or d^2/dy^2 (``"y"``) with line solves."""

    def __init__(self, grid: CartesianGrid, direction: str, eps: float = 1.0, workers: int = 1):
        if direction not in ("x", "y"):
            raise ValueError("direction must be 'x' or 'y'")
        self.grid = grid
        self.direction = direction
        self.axis = 1 if direction == "x" else 0
        self.line_length = grid.nx if direction == "x" else grid.ny
        h = grid.hx if direction == "x" else grid.hy
        self.coef = eps / h**2
        self.workers = workers
        self._factors: dict[float, ConstantTridiagonal] = {}

    def apply(self, v: np.ndarray) -> np.ndarray:
        U = np.asarray(v, dtype=float).reshape(self.grid.ny, self.grid.nx)
        return (self.coef * _second_difference(U, self.axis)).ravel()

    def factor(self, gamma: float) -> ConstantTridiagonal:
        fac = self._factors.get(gamma)
        if fac is None:
            c = gamma * self.coef
            fac = ConstantTridiagonal(self.line_length, -c, 1.0 + 2.0 * c, -c)
            if len(self._factors) > 8:
                self._factors.clear()
            self._factors[gamma] = fac
        return fac

    def stage_solve(self, rhs: np.ndarray, gamma: float) -> np.ndarray:
        """(I - gamma*A)^{-1} rhs, one Thomas solve per grid line."""
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        rhs = np.asarray(rhs, dtype=float)
        if gamma == 0:
            return rhs.copy()
        fac = self.factor(gamma)
        U = rhs.reshape(self.grid.ny, self.grid.nx)
        # lines along axis 0 of D, one column per line
        D = np.array(U.T if self.axis == 1 else U, order="C")
        n_lines = D.shape[1]
        if self.workers <= 1 or n_lines < 2:
            fac.solve(D)
        else:
            chunks = np.array_split(np.arange(n_lines), self.workers)
            with ThreadPoolExecutor(self.workers) as pool:
                parts = list(pool.map(lambda idx: fac.solve(np.array(D[:, idx])), chunks))
            for idx, part in zip(chunks, parts):
                D[:, idx] = part
        return (D.T if self.axis == 1 else D).ravel()


def stage_solve_direction(grid: CartesianGrid, direction: str, gamma: float, rhs,
                          eps: float = 1.0, workers: int = 1) -> np.ndarray:
    return DirectionalDiffusion(grid, direction, eps, workers).stage_solve(rhs, gamma)


def _boundary_source(grid: CartesianGrid, direction: str, eps: float, bc: DirichletData):
    """g(t): eps/h^2 times the Dirichlet neighbours of the first/last node of each line."""
    nx, ny = grid.nx, grid.ny
    x, y = grid.x, grid.y

    if direction == "x":
        coef = eps / grid.hx**2

        def g(t):
            G = np.zeros((ny, nx))
            G[:, 0] += coef * np.broadcast_to(bc.boundary_value(0.0, y, t), (ny,))
            G[:, -1] += coef * np.broadcast_to(bc.boundary_value(1.0, y, t), (ny,))
            return G.ravel()
    else:
        coef = eps / grid.hy**2

        def g(t):
            G = np.zeros((ny, nx))
            G[0, :] += coef * np.broadcast_to(bc.boundary_value(x, 0.0, t), (nx,))
            G[-1, :] += coef * np.broadcast_to(bc.boundary_value(x, 1.0, t), (nx,))
            return G.ravel()

    return g


def build_heat_dimsplit(grid: CartesianGrid, eps: float, bc: DirichletData,
                        source: Callable | None = None, reaction: Callable | None = None,
                        workers: int = 1) -> SplitSystem:
    """u_t = eps (u_xx + u_yy) + source(x, y, t) + reaction(u).

    F_0 holds the source and reaction terms, F_1 and F_2 the x- and
    y-differences together with their boundary values.
    """
    X, Y = grid.mesh()

    def explicit(t, v):
        out = np.zeros(grid.m)
        if source is not None:
            out += np.broadcast_to(source(X, Y, t), X.shape).ravel()
        if reaction is not None:
            out += reaction(v)
        return out

    parts = []
    for direction in ("x", "y"):
        op = DirectionalDiffusion(grid, direction, eps, workers)
        parts.append(AffineOperator(
            apply=op.apply,
            source=_boundary_source(grid, direction, eps, bc),
            stage_solve=op.stage_solve,
            name=f"A_{direction}",
        ))
    return SplitSystem(explicit, parts, grid.m, grid.layout)
