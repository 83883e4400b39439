"""Ground-truth snapshot generators.

Analytic solutions for 1D linear diffusion and advection, and a fixed-step
RK4 finite-difference solver for the periodic 2D viscous Burgers' equation.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .exceptions import BlowUpError
from .mesh import Grid, Grid1D, Grid2D, grid_from_dict

__all__ = [
    "SnapshotSet",
    "DiffusionConfig",
    "AdvectionConfig",
    "BurgersConfig",
    "diffusion_analytic",
    "diffusion_derivatives",
    "advection_analytic",
    "advection_derivatives",
    "burgers_initial",
    "burgers_rhs",
    "burgers_solve",
]


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """State trajectory on a grid; column ``k`` of ``states`` is ``u(t_k)``.

    Parameters
    ----------
    states : (n, N+1) ndarray
        Snapshot matrix, one row per DOF.
    dt : float
        Uniform time step between columns.
    t0 : float
        Time of the first column.
    grid : Grid1D or Grid2D, optional
        Grid the rows live on.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0
    grid: Optional[Grid] = None

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim != 2:
            raise ValueError("states must be a 2D array (n, N+1)")
        if states.shape[1] < 3:
            raise ValueError("need at least 3 snapshots (N >= 2)")
        if not np.all(np.isfinite(states)):
            raise ValueError("snapshot states must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.grid is not None and self.grid.num_dofs != states.shape[0]:
            raise ValueError("grid size does not match the number of rows")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def num_steps(self) -> int:
        """Number of transition pairs ``N``."""
        return self.states.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.states.shape[1])

    def to_csv(self, path) -> None:
        """Write ``# grid: {json}``, a ``n,dt,t0`` header and one row per DOF."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            if self.grid is not None:
                fh.write("# grid: " + json.dumps(self.grid.to_dict(),
                                                 sort_keys=True) + "\n")
            writer = csv.writer(fh)
            writer.writerow(["n", "dt", "t0"])
            writer.writerow([self.n, repr(self.dt), repr(self.t0)])
            for row in self.states:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, grid: Optional[Grid] = None) -> "SnapshotSet":
        path = Path(path)
        with path.open(newline="") as fh:
            lines = fh.read().splitlines()
        if lines and lines[0].startswith("# grid:"):
            if grid is None:
                grid = grid_from_dict(json.loads(lines[0][len("# grid:"):]))
            lines = lines[1:]
        rows = list(csv.reader(lines))
        if rows[0] != ["n", "dt", "t0"]:
            raise ValueError(f"{path}: malformed snapshot header")
        n, dt, t0 = int(rows[1][0]), float(rows[1][1]), float(rows[1][2])
        states = np.array([[float(v) for v in r] for r in rows[2:]])
        if states.shape[0] != n:
            raise ValueError(f"{path}: header says {n} rows, found {states.shape[0]}")
        return cls(states=states, dt=dt, t0=t0, grid=grid)


@dataclass(frozen=True)
class DiffusionConfig:
    """``u_t = c u_xx`` sampled on ``[0, T]`` every ``dt``."""

    c: float = 1.0
    dx: float = 0.24
    dt: float = 0.01
    T: float = 10.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("diffusivity c must be positive")


def _cos_pi(x):
    return np.cos(np.pi * x)


@dataclass(frozen=True)
class AdvectionConfig:
    """``u_t = c u_x`` with a periodic initial profile ``u0``."""

    c: float = 1.0
    u0: Callable = field(default=_cos_pi, compare=False)
    dt: float = 0.01
    T: float = 5.0

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("transport speed c must be nonzero")


@dataclass(frozen=True)
class BurgersConfig:
    """``u_t = c u (u_x + u_y) + nu (u_xx + u_yy)`` on the periodic unit square."""

    c: float = 0.1
    nu: float = 1e-3
    alpha: float = 1.0
    mu: float = 10.0
    dx: float = 0.02
    dt: float = 0.01
    T: float = 10.0
    substeps: int = 1

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")


def _time_count(T: float, dt: float) -> int:
    return int(round(T / dt))


def diffusion_analytic(grid: Grid1D, cfg: DiffusionConfig, N: Optional[int] = None,
                       t0: float = 0.0) -> SnapshotSet:
    """Snapshots of ``cos(x) exp(-c t)`` at ``t_k = t0 + k dt``.

    ``N`` defaults to ``round(T / dt)`` transitions.
    """
    if N is None:
        N = _time_count(cfg.T, cfg.dt)
    t = t0 + cfg.dt * np.arange(N + 1)
    states = np.outer(np.cos(grid.coordinates), np.exp(-cfg.c * t))
    return SnapshotSet(states=states, dt=cfg.dt, t0=t0, grid=grid)


def diffusion_derivatives(x: float, times: np.ndarray, c: float):
    """``(u, du/dx, du/dt)`` time series of the diffusion solution at ``x``."""
    decay = np.exp(-c * np.asarray(times, dtype=float))
    return np.cos(x) * decay, -np.sin(x) * decay, -c * np.cos(x) * decay


def _wrap(x, x0: float, length: float):
    return x0 + np.mod(x - x0, length)


def advection_analytic(grid: Grid1D, cfg: AdvectionConfig, N: Optional[int] = None,
                       c: Optional[float] = None) -> SnapshotSet:
    """Snapshots of ``u0(x + c t)`` with the argument wrapped into the period.

    ``c`` overrides ``cfg.c`` (useful for the no-transport case ``c = 0``).
    """
    speed = cfg.c if c is None else c
    if N is None:
        N = _time_count(cfg.T, cfg.dt)
    t = cfg.dt * np.arange(N + 1)
    arg = grid.coordinates[:, None] + speed * t[None, :]
    arg = _wrap(arg, grid.x0, grid.length)
    states = np.broadcast_to(np.asarray(cfg.u0(arg), dtype=float), arg.shape)
    return SnapshotSet(states=states, dt=cfg.dt, grid=grid)


def advection_derivatives(x: float, times: np.ndarray, c: float = 1.0,
                          wavenumber: float = np.pi):
    """``(u, du/dx, du/dt)`` for ``u = cos(k (x + c t))``."""
    phase = wavenumber * (x + c * np.asarray(times, dtype=float))
    u = np.cos(phase)
    dudx = -wavenumber * np.sin(phase)
    return u, dudx, c * dudx


def burgers_initial(grid: Grid2D, alpha: float, mu: float) -> np.ndarray:
    """Gaussian bump ``alpha exp(-mu (x-.5)^2) exp(-mu (y-.5)^2)``, flattened
    row-major."""
    X, Y = grid.mesh
    return (alpha * np.exp(-mu * (X - 0.5) ** 2) * np.exp(-mu * (Y - 0.5) ** 2)).ravel()


def burgers_rhs(u: np.ndarray, dx: float, dy: float, c: float, nu: float) -> np.ndarray:
    """Semi-discrete Burgers right-hand side on a periodic ``(ny, nx)`` field.

    First derivatives use the second-order forward difference
    ``(-3 u_i + 4 u_{i+1} - u_{i+2}) / (2 h)``, diffusion the second-order
    central difference.
    """
    ux = (-3.0 * u + 4.0 * np.roll(u, -1, axis=1) - np.roll(u, -2, axis=1)) / (2.0 * dx)
    uy = (-3.0 * u + 4.0 * np.roll(u, -1, axis=0) - np.roll(u, -2, axis=0)) / (2.0 * dy)
    lap = ((np.roll(u, 1, axis=1) - 2.0 * u + np.roll(u, -1, axis=1)) / dx**2
           + (np.roll(u, 1, axis=0) - 2.0 * u + np.roll(u, -1, axis=0)) / dy**2)
    return c * u * (ux + uy) + nu * lap


def burgers_solve(grid: Grid2D, cfg: BurgersConfig, u0: Optional[np.ndarray] = None,
                  guard: float = 1e6) -> SnapshotSet:
    """Integrate periodic 2D Burgers with classical RK4.

    The RK4 step is ``cfg.dt / cfg.substeps``; a snapshot is stored every
    ``cfg.dt``. ``u0`` defaults to :func:`burgers_initial` with the config's
    ``alpha`` and ``mu``.

    Raises
    ------
    BlowUpError
        If ``max|u|`` exceeds ``guard`` or turns non-finite.
    """
    if not grid.periodic:
        raise ValueError("burgers_solve needs a periodic grid")
    if u0 is None:
        u0 = burgers_initial(grid, cfg.alpha, cfg.mu)
    u = np.array(u0, dtype=float).reshape(grid.shape)
    N = _time_count(cfg.T, cfg.dt)
    h = cfg.dt / cfg.substeps

    def f(v):
        return burgers_rhs(v, grid.dx, grid.dy, cfg.c, cfg.nu)

    out = np.empty((grid.num_dofs, N + 1))
    out[:, 0] = u.ravel()
    for k in range(1, N + 1):
        for _ in range(cfg.substeps):
            k1 = f(u)
            k2 = f(u + 0.5 * h * k1)
            k3 = f(u + 0.5 * h * k2)
            k4 = f(u + h * k3)
            u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        peak = np.max(np.abs(u))
        if not np.isfinite(peak) or peak > guard:
            raise BlowUpError(f"Burgers solution left the guard at step {k} "
                              f"(t = {k * cfg.dt:.4g})")
        out[:, k] = u.ravel()
    return SnapshotSet(states=out, dt=cfg.dt, grid=grid)
