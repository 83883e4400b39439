"""Uniform grids, stencils and local support sets.

DOFs of a :class:`Grid2D` are linearized row-major over arrays of shape
``(ny, nx)``: ``index = iy * nx + ix``. Two-dimensional stencil offsets are
``(di, dj)`` pairs where ``di`` moves along y (rows) and ``dj`` along x
(columns); they are kept in lexicographic order, which is also the row-major
order of the offset block.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import BoundarySupportError, StencilError

__all__ = [
    "Grid1D",
    "Grid2D",
    "Stencil",
    "SupportSet",
    "build_stencil_1d",
    "build_block_stencil_2d",
    "build_cross_stencil",
    "support_set",
    "support_indices",
    "adjacency_order_support",
]


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid with ``n`` nodes at ``x0 + i*dx``."""

    n: int
    dx: float
    x0: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"Grid1D needs n >= 3, got {self.n}")
        if not self.dx > 0:
            raise ValueError(f"Grid1D needs dx > 0, got {self.dx}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "x0", float(self.x0))

    @classmethod
    def covering(cls, a: float, b: float, dx: float, periodic: bool = True):
        """Grid starting at ``a`` with spacing ``dx`` and the largest node
        count that stays inside ``[a, b]``."""
        n = int(np.floor((b - a) / dx + 1e-9)) + 1
        return cls(n=n, dx=dx, x0=a, periodic=periodic)

    @classmethod
    def periodic_interval(cls, a: float, b: float, n: int):
        """``n`` nodes on ``[a, b)`` so the wrap-around spacing is ``dx`` too."""
        return cls(n=n, dx=(b - a) / n, x0=a, periodic=True)

    @property
    def num_dofs(self) -> int:
        return self.n

    @property
    def length(self) -> float:
        """Period of the grid (``n * dx``)."""
        return self.n * self.dx

    @property
    def shape(self) -> tuple:
        return (self.n,)

    def coordinate(self, i: int) -> float:
        return self.x0 + i * self.dx

    @property
    def coordinates(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    def to_dict(self) -> dict:
        return {"kind": "Grid1D", "n": self.n, "dx": self.dx, "x0": self.x0,
                "periodic": self.periodic}


@dataclass(frozen=True)
class Grid2D:
    """Uniform 2D grid with ``nx * ny`` nodes, row-major linearization."""

    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple = (0.0, 0.0)
    periodic: bool = True

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"Grid2D needs nx, ny >= 3, got {self.nx}, {self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("Grid2D needs dx, dy > 0")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "dy", float(self.dy))
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @classmethod
    def unit_square(cls, dx: float, periodic: bool = True):
        """Periodic grid on ``[0, 1) x [0, 1)`` with equal spacing."""
        n = int(round(1.0 / dx))
        return cls(nx=n, ny=n, dx=1.0 / n, dy=1.0 / n, periodic=periodic)

    @property
    def num_dofs(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    def index(self, iy: int, ix: int) -> int:
        return iy * self.nx + ix

    def unravel(self, i: int) -> tuple:
        return divmod(int(i), self.nx)

    @property
    def mesh(self) -> tuple:
        """``(X, Y)`` coordinate arrays of shape ``(ny, nx)``."""
        x = self.origin[0] + self.dx * np.arange(self.nx)
        y = self.origin[1] + self.dy * np.arange(self.ny)
        return np.meshgrid(x, y, indexing="xy")

    def to_dict(self) -> dict:
        return {"kind": "Grid2D", "nx": self.nx, "ny": self.ny, "dx": self.dx,
                "dy": self.dy, "origin": list(self.origin),
                "periodic": self.periodic}


Grid = Union[Grid1D, Grid2D]


def grid_from_dict(data: dict) -> Grid:
    kind = data.get("kind")
    if kind == "Grid1D":
        return Grid1D(n=data["n"], dx=data["dx"], x0=data["x0"],
                      periodic=data["periodic"])
    if kind == "Grid2D":
        return Grid2D(nx=data["nx"], ny=data["ny"], dx=data["dx"],
                      dy=data["dy"], origin=tuple(data["origin"]),
                      periodic=data["periodic"])
    raise ValueError(f"unknown grid kind {kind!r}")


@dataclass(frozen=True)
class Stencil:
    """Ordered offsets defining a local support pattern.

    ``offsets`` is a tuple of ints (1D) or of ``(di, dj)`` pairs (2D), sorted
    ascending / lexicographically. ``m`` and ``l`` are the left and right
    widths of a 1D stencil; ``None`` in 2D.
    """

    offsets: tuple
    m: int | None = None
    l: int | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        offs = tuple(self.offsets)
        if not offs:
            raise StencilError("empty stencil")
        if isinstance(offs[0], (tuple, list, np.ndarray)):
            offs = tuple(sorted({(int(a), int(b)) for a, b in offs}))
            zero = (0, 0)
        else:
            offs = tuple(sorted({int(o) for o in offs}))
            zero = 0
        if len(offs) != len(tuple(self.offsets)):
            raise StencilError("stencil offsets must be unique")
        if zero not in offs:
            raise StencilError("stencil must contain the zero offset")
        object.__setattr__(self, "offsets", offs)

    @property
    def dim(self) -> int:
        return 2 if isinstance(self.offsets[0], tuple) else 1

    @property
    def size(self) -> int:
        return len(self.offsets)

    @property
    def center_position(self) -> int:
        """Position of the zero offset inside ``offsets``."""
        return self.offsets.index((0, 0) if self.dim == 2 else 0)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=int)

    def to_dict(self) -> dict:
        offs = [list(o) for o in self.offsets] if self.dim == 2 else list(self.offsets)
        return {"offsets": offs, "m": self.m, "l": self.l, "name": self.name}

    @classmethod
    def from_dict(cls, data: dict) -> "Stencil":
        offs = data["offsets"]
        if offs and isinstance(offs[0], list):
            offs = [tuple(o) for o in offs]
        return cls(offsets=tuple(offs), m=data.get("m"), l=data.get("l"),
                   name=data.get("name", ""))


@dataclass(frozen=True)
class SupportSet:
    """Resolved local support ``Q_i`` of DOF ``center``."""

    center: int
    members: tuple

    @property
    def r(self) -> int:
        return len(self.members)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=int)


def build_stencil_1d(m: int, l: int) -> Stencil:
    """Stencil ``{-m, ..., 0, ..., +l}``."""
    if m < 0 or l < 0:
        raise StencilError("stencil widths must be nonnegative")
    if m + l < 1:
        raise StencilError("degenerate stencil: m = l = 0")
    return Stencil(offsets=tuple(range(-m, l + 1)), m=m, l=l,
                   name=f"1d[{m},{l}]")


def build_block_stencil_2d(halfwidth: int) -> Stencil:
    """Square ``(2h+1) x (2h+1)`` block of offsets."""
    if halfwidth < 1:
        raise StencilError("halfwidth must be >= 1")
    rng = range(-halfwidth, halfwidth + 1)
    side = 2 * halfwidth + 1
    return Stencil(offsets=tuple(itertools.product(rng, rng)),
                   name=f"block{side}x{side}")


def build_cross_stencil(order: int, dim: int = 2) -> Stencil:
    """All offsets within taxicab distance ``order`` of the origin."""
    if order < 1:
        raise StencilError("adjacency order must be >= 1")
    if dim == 1:
        return build_stencil_1d(order, order)
    rng = range(-order, order + 1)
    offs = tuple((a, b) for a, b in itertools.product(rng, rng)
                 if abs(a) + abs(b) <= order)
    return Stencil(offsets=offs, name=f"adjacency{order}")


def _wrap_check_1d(grid: Grid1D, raw: np.ndarray) -> np.ndarray:
    if grid.periodic:
        return np.mod(raw, grid.n)
    if raw.min() < 0 or raw.max() >= grid.n:
        raise BoundarySupportError("stencil overhangs a non-periodic boundary")
    return raw


def support_indices(grid: Grid, stencil: Stencil) -> np.ndarray:
    """Member indices of every DOF's support, shape ``(num_dofs, r)``.

    Row ``i`` equals ``support_set(grid, i, stencil).members``. On a
    non-periodic grid this raises as soon as any DOF overhangs.
    """
    offs = stencil.as_array()
    if isinstance(grid, Grid1D):
        if stencil.dim != 1:
            raise StencilError("1D grid needs a 1D stencil")
        raw = np.arange(grid.n)[:, None] + offs[None, :]
        return _wrap_check_1d(grid, raw)
    if stencil.dim != 2:
        raise StencilError("2D grid needs a 2D stencil")
    iy, ix = np.divmod(np.arange(grid.num_dofs), grid.nx)
    ry = iy[:, None] + offs[None, :, 0]
    rx = ix[:, None] + offs[None, :, 1]
    if grid.periodic:
        ry, rx = np.mod(ry, grid.ny), np.mod(rx, grid.nx)
    elif ry.min() < 0 or rx.min() < 0 or ry.max() >= grid.ny or rx.max() >= grid.nx:
        raise BoundarySupportError("stencil overhangs a non-periodic boundary")
    return ry * grid.nx + rx


def support_set(grid: Grid, i: int, stencil: Stencil) -> SupportSet:
    """Resolve the stencil around DOF ``i``, wrapping on periodic grids."""
    if not 0 <= i < grid.num_dofs:
        raise IndexError(f"DOF index {i} out of range [0, {grid.num_dofs})")
    offs = stencil.as_array()
    if isinstance(grid, Grid1D):
        if stencil.dim != 1:
            raise StencilError("1D grid needs a 1D stencil")
        members = _wrap_check_1d(grid, i + offs)
    else:
        if stencil.dim != 2:
            raise StencilError("2D grid needs a 2D stencil")
        iy, ix = grid.unravel(i)
        ry, rx = iy + offs[:, 0], ix + offs[:, 1]
        if grid.periodic:
            ry, rx = np.mod(ry, grid.ny), np.mod(rx, grid.nx)
        elif ry.min() < 0 or rx.min() < 0 or ry.max() >= grid.ny or rx.max() >= grid.nx:
            raise BoundarySupportError(
                f"stencil around DOF {i} overhangs a non-periodic boundary")
        members = ry * grid.nx + rx
    return SupportSet(center=int(i), members=tuple(int(v) for v in members))


def adjacency_order_support(grid: Grid, i: int, order: int) -> SupportSet:
    """DOFs within graph distance ``order`` of ``i`` on the nearest-neighbour
    graph (2 neighbours in 1D, 4 in 2D); taxicab ball on a uniform grid."""
    dim = 1 if isinstance(grid, Grid1D) else 2
    return support_set(grid, i, build_cross_stencil(order, dim=dim))


def stencil_from_offsets(offsets: Sequence) -> Stencil:
    return Stencil(offsets=tuple(offsets))
