"""Closed forms, Taylor approximations and stability diagnostics.

Covers the minimum-norm coefficients of diffusion data, the first-order Taylor
approximation of the local least-squares solution for 1D linear problems, the
resulting sampling-CFL bound, Gershgorin row-norm checks and spectral radii.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy import linalg as la
from scipy import sparse

from .exceptions import DegenerateDataError, StencilError
from .manufactured import SnapshotSet
from .mesh import Grid, Grid1D, Stencil
from .snapshot import FeatureKind, FeatureMap
from .solver import CoefficientVector

__all__ = [
    "NearSingularWarning",
    "TaylorGeometry",
    "TaylorDataCoeffs",
    "TaylorBeta",
    "StabilityReport",
    "diffusion_closed_form_beta",
    "diffusion_taylor_beta",
    "consistency_sum",
    "taylor_geometry",
    "taylor_data_coeffs",
    "series_from_snapshots",
    "taylor_first_order_beta",
    "sufficient_stability_check",
    "sampling_cfl_bound",
    "gershgorin_check",
    "spectral_radius",
    "circulant_eigenvalues",
]

DENSE_LIMIT = 4000


class NearSingularWarning(UserWarning):
    """Sampling point where ``cos(x_i)`` is numerically zero."""


def _linear_map(r: int) -> FeatureMap:
    return FeatureMap(FeatureKind.LINEAR, r)


def diffusion_closed_form_beta(xQ, x_i: float, c: float, dt: float) -> CoefficientVector:
    """Minimum-norm coefficients for data ``cos(x) exp(-c t)``:
    ``beta_j = exp(-c dt) cos(x_j) cos(x_i) / sum_k cos(x_k)^2``."""
    cq = np.cos(np.asarray(xQ, dtype=float))
    energy = float(np.sum(cq ** 2))
    if energy == 0.0:
        raise DegenerateDataError("cos(x_j) vanishes on the whole support")
    beta = np.exp(-c * dt) * cq * np.cos(x_i) / energy
    return CoefficientVector(beta, _linear_map(cq.size))


def diffusion_taylor_beta(x_i: float, c: float, dt: float, dx: float):
    """Small-step approximation of the 3-point diffusion coefficients.

    Returns ``(beta, l1)`` with
    ``beta = (1 - c dt) / (3 + 2 tau^2) * (1 + tau, 1, 1 - tau)``,
    ``tau = tan(x_i) dx``.
    """
    if abs(np.cos(x_i)) < 1e-8:
        warnings.warn(f"cos(x_i) = {np.cos(x_i):.3g} is near zero; the Taylor "
                      "coefficients are stable but may be inaccurate",
                      NearSingularWarning, stacklevel=2)
    tau = np.tan(x_i) * dx
    beta = (1.0 - c * dt) / (3.0 + 2.0 * tau ** 2) * np.array([1.0 + tau, 1.0, 1.0 - tau])
    vec = CoefficientVector(beta, _linear_map(3))
    return vec, float(np.sum(np.abs(beta)))


def consistency_sum(beta: Union[CoefficientVector, np.ndarray]) -> float:
    """Sum of the linear coefficients (1 for a scheme preserving constants)."""
    if isinstance(beta, CoefficientVector):
        return float(np.sum(beta.linear))
    return float(np.sum(np.asarray(beta, dtype=float)))


@dataclass(frozen=True)
class TaylorGeometry:
    """Stencil moments of ``{-m, ..., l}``."""

    m: int
    l: int
    c1: float
    c2: float
    c3: float

    @property
    def det(self) -> float:
        return self.c1 * self.c2 - self.c3 ** 2

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.m, self.l + 1)


def taylor_geometry(m: int, l: int) -> TaylorGeometry:
    if m < 0 or l < 0 or m + l < 1:
        raise StencilError("degenerate stencil: need m, l >= 0 and m + l >= 1")
    c1 = m + l + 1
    c2 = (m * (m + 1) * (2 * m + 1) + l * (l + 1) * (2 * l + 1)) / 6.0
    c3 = (l - m) * (m + l + 1) / 2.0
    geom = TaylorGeometry(m=m, l=l, c1=float(c1), c2=c2, c3=c3)
    assert geom.det > 0, "c1 c2 - c3^2 must be positive for m + l >= 1"
    return geom


@dataclass(frozen=True)
class TaylorDataCoeffs:
    """Inner products of the ``u``, ``du/dx`` and ``du/dt`` series at a DOF.

    ``g`` here is ``u . du/dt``, unrelated to the ridge block weight.
    """

    a: float
    b: float
    d: float
    g: float
    e: float

    @property
    def gram_det(self) -> float:
        return self.a * self.b - self.d ** 2

    def scaled(self, s: float) -> "TaylorDataCoeffs":
        return TaylorDataCoeffs(*(s * v for v in (self.a, self.b, self.d, self.g, self.e)))


def taylor_data_coeffs(u_series, dudx_series, dudt_series) -> TaylorDataCoeffs:
    u = np.asarray(u_series, dtype=float)
    ux = np.asarray(dudx_series, dtype=float)
    ut = np.asarray(dudt_series, dtype=float)
    if not (u.shape == ux.shape == ut.shape):
        raise ValueError("u, du/dx and du/dt series must have equal lengths")
    return TaylorDataCoeffs(a=float(u @ u), b=float(ux @ ux), d=float(u @ ux),
                            g=float(u @ ut), e=float(ux @ ut))


def series_from_snapshots(snap: SnapshotSet, i: int):
    """``(u, du/dx, du/dt)`` at DOF ``i`` of a periodic 1D snapshot set.

    Central differences in space and forward differences in time; all series
    have length ``N`` (times ``t_0 ... t_{N-1}``).
    """
    grid = snap.grid
    if not isinstance(grid, Grid1D) or not grid.periodic:
        raise ValueError("finite-difference series need a periodic Grid1D")
    S = snap.states
    n = S.shape[0]
    u = S[i, :-1]
    dudx = (S[(i + 1) % n, :-1] - S[(i - 1) % n, :-1]) / (2.0 * grid.dx)
    dudt = (S[i, 1:] - S[i, :-1]) / snap.dt
    return u, dudx, dudt


@dataclass(frozen=True)
class TaylorBeta:
    """Affine coefficient profile ``beta_j = (K1 + j K2) / denominator``."""

    K1: float
    K2: float
    denominator: float
    m: int
    l: int

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.m, self.l + 1)

    @property
    def values(self) -> np.ndarray:
        return (self.K1 + self.offsets * self.K2) / self.denominator

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.values)))

    def as_coefficients(self) -> CoefficientVector:
        return CoefficientVector(self.values, _linear_map(self.m + self.l + 1))


def taylor_first_order_beta(geom: TaylorGeometry, coeffs: TaylorDataCoeffs,
                            dx: float, dt: float, tol: float = 1e-12) -> TaylorBeta:
    """First-order Taylor approximation of the local minimum-norm solution.

    Raises
    ------
    DegenerateDataError
        If ``ab - d^2 <= tol * a * b`` (``u`` and ``du/dx`` series parallel).
    """
    a, b, d, g, e = coeffs.a, coeffs.b, coeffs.d, coeffs.g, coeffs.e
    det = a * b - d * d
    if not det > tol * abs(a * b) or det <= 0:
        raise DegenerateDataError("ab - d^2 vanishes: first-order basis is degenerate")
    c1, c2, c3 = geom.c1, geom.c2, geom.c3
    p = b * g - d * e
    q = a * e - g * d
    K1 = c2 * det + c2 * dt * p - (c3 * dt / dx) * q
    K2 = -c3 * det - dt * c3 * p + (c1 * dt / dx) * q
    return TaylorBeta(K1=K1, K2=K2, denominator=det * geom.det, m=geom.m, l=geom.l)


def sufficient_stability_check(tb: TaylorBeta, tol: float = 1e-12) -> bool:
    """``sum_j |K1 + j K2| <= denominator``, i.e. ``||beta||_1 <= 1``.

    ``tol`` absorbs roundoff at exact equality.
    """
    return bool(tb.l1 <= 1.0 + tol)


def sampling_cfl_bound(m: int, c: float) -> float:
    """Largest admissible ``dt/dx`` of the training data for a symmetric
    ``(2m+1)``-point stencil under transport speed ``c``."""
    if not c > 0:
        raise ValueError("transport speed must be positive")
    if m < 1:
        raise StencilError("half-width must be >= 1")
    return (m + 1) / (3.0 * c)


@dataclass
class StabilityReport:
    """Row-norm and spectral diagnostics for a linear operator."""

    row_l1_norms: np.ndarray
    max_row_l1: float
    sufficient_stable: bool
    spectral_radius: Optional[float] = None
    eigenvalues: Optional[np.ndarray] = None
    method: Optional[str] = None
    converged: bool = True
    stable: Optional[bool] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        eig = None
        if self.eigenvalues is not None:
            eig = [[float(z.real), float(z.imag)] for z in np.asarray(self.eigenvalues)]
        return {
            "row_l1_norms": [float(v) for v in self.row_l1_norms],
            "max_row_l1": float(self.max_row_l1),
            "sufficient_stable": bool(self.sufficient_stable),
            "spectral_radius": None if self.spectral_radius is None else float(self.spectral_radius),
            "eigenvalues": eig,
            "method": self.method,
            "converged": bool(self.converged),
            "stable": None if self.stable is None else bool(self.stable),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _linear_operator(obj):
    """Return ``(scipy sparse or dense matrix, notes)`` for a model, operator,
    array or stack of coefficient rows."""
    from .sfom import DiscreteModel, SparseLinearOperator

    notes = []
    if isinstance(obj, DiscreteModel):
        if obj.H is not None or obj.c is not None:
            msg = "quadratic/constant terms ignored: criterion covers the linear operator"
            warnings.warn(msg, stacklevel=3)
            notes.append(msg)
        return obj.A.csr, notes
    if isinstance(obj, SparseLinearOperator):
        return obj.csr, notes
    if sparse.issparse(obj):
        return obj.tocsr(), notes
    return np.atleast_2d(np.asarray(obj, dtype=float)), notes


def gershgorin_check(obj, tol: float = 0.0) -> StabilityReport:
    """Row l1 norms of the linear operator; sufficient-stable iff all ``<= 1 + tol``.

    ``obj`` may be a :class:`~sfomkit.sfom.DiscreteModel`, a sparse operator,
    a square matrix, or an array whose rows are coefficient vectors.
    """
    M, notes = _linear_operator(obj)
    norms = np.asarray(abs(M).sum(axis=1)).ravel()
    peak = float(norms.max()) if norms.size else 0.0
    return StabilityReport(row_l1_norms=norms, max_row_l1=peak,
                           sufficient_stable=bool(peak <= 1.0 + tol), notes=notes)


def _power_radius(M, tol: float, maxiter: int, seed: int = 0):
    """Dominant eigenvalue magnitude; handles a real dominant eigenvalue or a
    complex-conjugate pair via a two-term recurrence fit."""
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(maxiter):
        y1 = M @ x
        ny1 = np.linalg.norm(y1)
        if ny1 == 0.0:
            return 0.0, True
        lam = float(x @ y1)
        if np.linalg.norm(y1 - lam * x) <= tol * max(ny1, 1e-300):
            return abs(lam), True
        y2 = M @ y1
        basis = np.column_stack([y1, x])
        coef, *_ = np.linalg.lstsq(basis, -y2, rcond=None)
        resid = np.linalg.norm(y2 + basis @ coef)
        roots = np.roots([1.0, coef[0], coef[1]])
        estimate = float(np.max(np.abs(roots)))
        if resid <= tol * max(np.linalg.norm(y2), 1e-300):
            return estimate, True
        x = y1 / ny1
    return estimate, False


def spectral_radius(obj, mode: str = "auto", tol: float = 1e-8, maxiter: int = 10_000,
                    stability_tol: float = 1e-8) -> StabilityReport:
    """Spectral radius and full diagnostics of the linear operator.

    ``mode="dense"`` computes every eigenvalue (``n <= 4000``), ``"power"``
    estimates the dominant magnitude, and ``"auto"`` picks dense when allowed.
    """
    M, notes = _linear_operator(obj)
    report = gershgorin_check(M)
    report.notes.extend(notes)
    n = M.shape[0]
    if M.shape[0] != M.shape[1]:
        raise ValueError("spectral radius needs a square operator")
    if mode == "auto":
        mode = "dense" if n <= DENSE_LIMIT else "power"
    if mode == "dense":
        if n > DENSE_LIMIT:
            raise ValueError(f"dense mode limited to n <= {DENSE_LIMIT}")
        dense = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        eig = la.eigvals(dense, check_finite=True)
        order = np.lexsort((eig.imag, eig.real))
        report.eigenvalues = eig[order]
        report.spectral_radius = float(np.max(np.abs(eig))) if n else 0.0
        report.method = "dense"
    elif mode == "power":
        rho, ok = _power_radius(M, tol, maxiter)
        report.spectral_radius = rho
        report.method = "power"
        report.converged = ok
        if not ok:
            msg = f"power iteration did not converge in {maxiter} iterations"
            warnings.warn(msg, stacklevel=2)
            report.notes.append(msg)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    report.stable = bool(report.sufficient_stable
                         or report.spectral_radius <= 1.0 + stability_tol)
    return report


def circulant_eigenvalues(linear_beta, grid: Grid, stencil: Stencil) -> np.ndarray:
    """Eigenvalues of the periodic operator whose every row applies
    ``linear_beta`` over ``stencil`` (exact, via the FFT of its kernel)."""
    beta = np.asarray(linear_beta, dtype=float)
    offs = stencil.as_array()
    if isinstance(grid, Grid1D):
        kernel = np.zeros(grid.n)
        np.add.at(kernel, np.mod(offs, grid.n), beta)
        return np.fft.fft(kernel)
    kernel = np.zeros(grid.shape)
    np.add.at(kernel, (np.mod(offs[:, 0], grid.ny), np.mod(offs[:, 1], grid.nx)), beta)
    return np.fft.fft2(kernel).ravel()
