"""Uniform grids, nodal fields, and mirror-closed finite-difference calculus.

Zero-flux boundaries are realized with mirror ghost nodes: next to the first
node the ghost copies the first interior neighbour (g = z[1]), and likewise
at the far end.  Applying the same mirror to the discrete Laplacian closes
the second boundary condition, so the discrete bilaplacian is exactly the
square of the Laplacian operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched grid operands."""


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform node-centered grid on an interval (1D) or rectangle (2D).

    ``bounds[k] = (a, b)`` and ``npts[k]`` give the extent and node count of
    axis k.  Nodes sit at a + i*h with h = (b - a)/(n - 1), both endpoints
    included.
    """

    bounds: tuple[tuple[float, float], ...]
    npts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.npts) <= 2 or len(self.bounds) != len(self.npts):
            raise GridError("grid must be 1D or 2D with one (a, b) pair per axis")
        for (a, b), n in zip(self.bounds, self.npts):
            if n < 4:
                raise GridError(f"need at least 4 nodes per axis, got {n}")
            if not (math.isfinite(a) and math.isfinite(b) and b > a):
                raise GridError(f"bad axis extent ({a}, {b})")

    @classmethod
    def line(cls, a: float, b: float, n: int) -> SpaceGrid:
        return cls(((float(a), float(b)),), (int(n),))

    @classmethod
    def rect(cls, a, b, n, a2=None, b2=None, n2=None) -> SpaceGrid:
        """Rectangle (a,b) x (a2,b2); the second axis defaults to the first."""
        a2 = a if a2 is None else a2
        b2 = b if b2 is None else b2
        n2 = n if n2 is None else n2
        return cls(
            ((float(a), float(b)), (float(a2), float(b2))),
            (int(n), int(n2)),
        )

    @property
    def dim(self) -> int:
        return len(self.npts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.npts

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.npts))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for (a, b), n in zip(self.bounds, self.npts))

    def axis_coords(self, axis: int) -> np.ndarray:
        a, b = self.bounds[axis]
        return np.linspace(a, b, self.npts[axis])

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like ``self.shape`` (x first, then y)."""
        axes = [self.axis_coords(k) for k in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights per node, shaped like ``self.shape``."""
        per_axis = []
        for hk, n in zip(self.h, self.npts):
            w = np.full(n, hk)
            w[0] = w[-1] = hk / 2.0
            per_axis.append(w)
        if self.dim == 1:
            return per_axis[0]
        return np.multiply.outer(per_axis[0], per_axis[1])


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, T] into ``n_steps`` steps."""

    T: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0):
            raise GridError(f"final time must be positive, got {self.T}")
        if self.n_steps < 1:
            raise GridError(f"need at least one time step, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)


@dataclass(frozen=True)
class Field:
    """Nodal values of one unknown at one time level (flat, read-only)."""

    grid: SpaceGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != self.grid.n_nodes:
            raise GridError(
                f"field has {vals.size} values for a grid of {self.grid.n_nodes} nodes"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def nd(self) -> np.ndarray:
        """Values shaped like the grid ((n,) in 1D, (nx, ny) in 2D)."""
        return self.values.reshape(self.grid.shape)

    @classmethod
    def full(cls, grid: SpaceGrid, value: float) -> Field:
        return cls(grid, np.full(grid.n_nodes, float(value)))

    @classmethod
    def zeros(cls, grid: SpaceGrid) -> Field:
        return cls.full(grid, 0.0)

    @classmethod
    def sample(cls, grid: SpaceGrid, fn) -> Field:
        """Evaluate ``fn`` on the coordinate meshes and wrap the result."""
        return cls(grid, np.asarray(fn(*grid.meshes()), dtype=float))


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed sequence of fields on one grid, stored as one array."""

    grid: SpaceGrid
    time: TimeGrid
    values: np.ndarray  # (n_steps + 1, n_nodes)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        expected = (self.time.n_steps + 1, self.grid.n_nodes)
        if vals.shape != expected:
            raise GridError(f"trajectory shape {vals.shape} != {expected}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n_levels(self) -> int:
        return self.time.n_steps + 1

    def field(self, n: int) -> Field:
        return Field(self.grid, self.values[n])

    @classmethod
    def zeros(cls, grid: SpaceGrid, time: TimeGrid) -> Trajectory:
        return cls(grid, time, np.zeros((time.n_steps + 1, grid.n_nodes)))

    @classmethod
    def from_fields(cls, time: TimeGrid, fields) -> Trajectory:
        fields = list(fields)
        grid = fields[0].grid
        return cls(grid, time, np.stack([f.values for f in fields]))


def _require_same_grid(y: Field, z: Field) -> None:
    if y.grid != z.grid:
        raise GridError("fields live on different grids")


def _lap_axis(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    v = np.moveaxis(v, axis, 0)
    d = np.empty_like(v)
    d[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    d[0] = 2.0 * (v[1] - v[0])      # mirror ghost: g = v[1]
    d[-1] = 2.0 * (v[-2] - v[-1])
    return np.moveaxis(d, 0, axis) / (h * h)


def _lap_nd(v: np.ndarray, grid: SpaceGrid) -> np.ndarray:
    out = _lap_axis(v, 0, grid.h[0])
    for axis in range(1, grid.dim):
        out += _lap_axis(v, axis, grid.h[axis])
    return out


def laplacian(z: Field) -> Field:
    """Second-difference Laplacian with zero-flux mirror closure."""
    return Field(z.grid, _lap_nd(z.nd, z.grid))


def bilaplacian(z: Field) -> Field:
    """Square of the mirror-closed Laplacian (both flux conditions)."""
    g = z.grid
    return Field(g, _lap_nd(_lap_nd(z.nd, g), g))


def _backward_diff_axis(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    # First entry is 0: the one-sided difference at the zero-flux face.
    v = np.moveaxis(v, axis, 0)
    d = np.zeros_like(v)
    d[1:] = (v[1:] - v[:-1]) / h
    return np.moveaxis(d, 0, axis)


def diff_backward(z: Field) -> Field:
    """1D backward difference (z_i - z_{i-1})/h, zero at the first node."""
    if z.grid.dim != 1:
        raise GridError("diff_backward is 1D only; 2D differences are internal "
                        "to seminorm_h1")
    return Field(z.grid, _backward_diff_axis(z.values, 0, z.grid.h[0]))


def inner_product(y: Field, z: Field) -> float:
    """Trapezoid-weighted nodal inner product (weights sum to the volume)."""
    _require_same_grid(y, z)
    w = y.grid.weights().reshape(-1)
    return float(w @ (y.values * z.values))


def norm_l2(z: Field) -> float:
    return math.sqrt(inner_product(z, z))


def seminorm_h1(z: Field) -> float:
    """h-weighted sum of squared per-axis backward differences."""
    g = z.grid
    total = 0.0
    for axis in range(g.dim):
        d = _backward_diff_axis(z.nd, axis, g.h[axis])
        total += float(np.sum(d * d))
    return math.sqrt(math.prod(g.h) * total)


def seminorm_h2(z: Field) -> float:
    """h-weighted sum of squared Laplacian values."""
    g = z.grid
    lap = _lap_nd(z.nd, g)
    return math.sqrt(math.prod(g.h) * float(np.sum(lap * lap)))


def norm_max(z: Field) -> float:
    return float(np.abs(z.values).max())


def mass(z: Field) -> float:
    """Trapezoid quadrature of the field over the domain."""
    w = z.grid.weights().reshape(-1)
    return float(w @ z.values)
