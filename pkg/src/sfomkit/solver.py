"""Least-squares solvers: SVD minimum-norm, block-weighted ridge, L-curve."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import linalg as la

from .snapshot import FeatureMap, LocalProblem

__all__ = [
    "SvdFactors",
    "RidgeConfig",
    "CoefficientVector",
    "LCurvePoint",
    "LCurveResult",
    "svd",
    "min_norm_solve",
    "min_norm_solve_batch",
    "ridge_solve",
    "RidgeWorkspace",
    "l_curve_select",
    "menger_curvature",
]

DEFAULT_RANK_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD ``M = Phi @ diag(sigma) @ Psi.T``.

    Applied to ``D.T`` this gives the spatial basis ``Phi`` (p x q), the
    singular values and the temporal basis ``Psi`` (N x q), ``q = min(p, N)``.
    """

    Phi: np.ndarray
    sigma: np.ndarray
    Psi: np.ndarray

    @property
    def q(self) -> int:
        return self.sigma.size

    def rank(self, rank_cutoff: float = DEFAULT_RANK_CUTOFF) -> int:
        if self.sigma.size == 0 or self.sigma[0] == 0:
            return 0
        return int(np.count_nonzero(self.sigma >= rank_cutoff * self.sigma[0]))

    def reconstruct(self) -> np.ndarray:
        return (self.Phi * self.sigma) @ self.Psi.T


def svd(M) -> SvdFactors:
    """Thin SVD with a deterministic sign: the largest-magnitude entry of each
    left singular vector is positive."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("svd input must be finite")
    U, s, Vt = la.svd(M, full_matrices=False, lapack_driver="gesdd")
    if U.size:
        pivot = np.argmax(np.abs(U), axis=0)
        signs = np.sign(U[pivot, np.arange(U.shape[1])])
        signs[signs == 0] = 1.0
        U = U * signs
        Vt = Vt * signs[:, None]
    return SvdFactors(Phi=U, sigma=s, Psi=Vt.T)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Inferred ``beta`` with its block layout.

    ``rank`` is the numerical rank used by the minimum-norm solve (``None``
    for ridge solutions).
    """

    values: np.ndarray
    fmap: FeatureMap
    support: Optional[tuple] = None
    rank: Optional[int] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.fmap.dim:
            raise ValueError(f"beta has {values.size} entries, map expects {self.fmap.dim}")
        object.__setattr__(self, "values", values)

    def _block(self, name):
        return self.values[self.fmap.blocks[name]]

    @property
    def linear(self) -> np.ndarray:
        return self._block("linear")

    @property
    def quadratic(self) -> np.ndarray:
        return self._block("quadratic")

    @property
    def constant(self) -> np.ndarray:
        return self._block("constant")

    @property
    def rank_deficient_zero(self) -> bool:
        return self.rank == 0

    def norm(self, ord=2) -> float:
        return float(np.linalg.norm(self.values, ord=ord))


def min_norm_solve(prob: LocalProblem, rank_cutoff: float = DEFAULT_RANK_CUTOFF,
                   factors: Optional[SvdFactors] = None) -> CoefficientVector:
    """Minimum-norm least-squares ``beta = Phi Sigma^+ Psi^T d``.

    Singular values below ``rank_cutoff * sigma_1`` are dropped. An all-zero
    ``D`` yields ``beta = 0`` with ``rank == 0``.
    """
    f = svd(prob.D.T) if factors is None else factors
    k = f.rank(rank_cutoff)
    if k == 0:
        return CoefficientVector(np.zeros(prob.fmap.dim), prob.fmap,
                                 support=prob.centers, rank=0)
    coef = (f.Psi[:, :k].T @ prob.d) / f.sigma[:k]
    beta = f.Phi[:, :k] @ coef
    return CoefficientVector(beta, prob.fmap, support=prob.centers, rank=k)


def min_norm_solve_batch(D: np.ndarray, d: np.ndarray,
                         rank_cutoff: float = DEFAULT_RANK_CUTOFF):
    """Minimum-norm solutions of a stack of problems.

    ``D`` is ``(B, N, p)`` and ``d`` is ``(B, N)``; returns ``(betas, ranks)``
    of shapes ``(B, p)`` and ``(B,)``. Each problem is reduced by a thin QR
    before the SVD, which leaves the singular values unchanged.
    """
    D = np.asarray(D, dtype=float)
    d = np.asarray(d, dtype=float)
    if D.shape[1] > D.shape[2]:
        Q, R = np.linalg.qr(D)
        rhs = np.einsum("bnp,bn->bp", Q, d)
    else:
        R, rhs = D, d
    U, s, Vt = np.linalg.svd(R, full_matrices=False)
    top = s[:, :1]
    keep = (s >= rank_cutoff * top) & (top > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(keep, 1.0 / s, 0.0)
    coef = np.einsum("bkq,bk->bq", U, rhs) * inv
    betas = np.einsum("bqp,bq->bp", Vt, coef)
    return betas, keep.sum(axis=1)


@dataclass(frozen=True)
class RidgeConfig:
    """Penalty ``eta * sum_j w_j beta_j^2`` with ``w = 1`` on linear and
    constant features and ``w = g`` on quadratic ones."""

    eta: float
    g: float = 1.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not self.g > 0:
            raise ValueError("g must be positive")

    def weights(self, fmap: FeatureMap) -> np.ndarray:
        return self.eta * fmap.block_weights(self.g)


class RidgeWorkspace:
    """Cached Gram data of one problem for repeated ridge solves."""

    def __init__(self, prob: LocalProblem):
        if not (np.all(np.isfinite(prob.D)) and np.all(np.isfinite(prob.d))):
            raise ValueError("ridge data must be finite")
        self.prob = prob
        self.gram = prob.D.T @ prob.D
        self.rhs = prob.D.T @ prob.d

    def solve(self, cfg: RidgeConfig) -> CoefficientVector:
        if not cfg.eta > 0:
            raise ValueError("ridge_solve needs eta > 0; use min_norm_solve for eta = 0")
        w = cfg.weights(self.prob.fmap)
        lhs = self.gram + np.diag(w)
        beta = la.cho_solve(la.cho_factor(lhs, lower=True), self.rhs)
        return CoefficientVector(beta, self.prob.fmap, support=self.prob.centers)


def ridge_solve(prob: LocalProblem, cfg: RidgeConfig) -> CoefficientVector:
    """``argmin ||D beta - d||^2 + ||W^{1/2} beta||^2`` via the normal equations."""
    return RidgeWorkspace(prob).solve(cfg)


def menger_curvature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Signed discrete curvature at interior polyline vertices.

    Entry ``k`` is the inverse circumradius of points ``k, k+1, k+2``,
    positive for counter-clockwise turns; length ``len(x) - 2``.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    ax, ay = x[1:-1] - x[:-2], y[1:-1] - y[:-2]
    bx, by = x[2:] - x[1:-1], y[2:] - y[1:-1]
    cross = ax * by - ay * bx
    la_ = np.hypot(ax, ay)
    lb = np.hypot(bx, by)
    lc = np.hypot(x[2:] - x[:-2], y[2:] - y[:-2])
    denom = la_ * lb * lc
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(denom > 0, 2.0 * cross / denom, 0.0)
    return kappa


@dataclass
class LCurvePoint:
    eta: float
    g: float
    residual: float
    solution_norm: float
    spectral_radius: Optional[float] = None


@dataclass
class LCurveResult:
    """Every tested candidate plus the selected pair.

    ``solution_norm`` is the weighted seminorm ``||W_g^{1/2} beta||`` that the
    penalty acts on (equal to ``||beta||`` when ``g = 1``).
    """

    points: List[LCurvePoint]
    corners: dict
    selected_eta: float
    selected_g: float
    beta: CoefficientVector
    boundary_corner: dict = field(default_factory=dict)

    def curve(self, g: float):
        pts = [p for p in self.points if p.g == g]
        return (np.array([p.eta for p in pts]), np.array([p.residual for p in pts]),
                np.array([p.solution_norm for p in pts]))

    def to_rows(self) -> list:
        rows = []
        for p in self.points:
            corner = self.corners.get(p.g)
            rows.append({
                "eta": p.eta, "g": p.g, "residual": p.residual,
                "solution_norm": p.solution_norm,
                "spectral_radius": p.spectral_radius,
                "is_corner": corner is not None and corner == p.eta,
                "is_selected": p.eta == self.selected_eta and p.g == self.selected_g,
            })
        return rows


def _corner_candidates(kappa: np.ndarray) -> list:
    """Vertex indices of positive local curvature maxima, strongest first."""
    idx = []
    for j, k in enumerate(kappa):
        if k <= 0:
            continue
        left = kappa[j - 1] if j > 0 else -np.inf
        right = kappa[j + 1] if j + 1 < kappa.size else -np.inf
        if k >= left and k >= right:
            idx.append(j)
    idx.sort(key=lambda j: (-kappa[j], j))
    return [j + 1 for j in idx]


def l_curve_select(prob: LocalProblem, eta_grid: Sequence[float],
                   g_grid: Sequence[float] = (1.0,),
                   stability: Optional[Callable[[CoefficientVector], float]] = None,
                   stability_tol: float = 1e-8) -> LCurveResult:
    """Choose ``(eta, g)`` from L-curve corners.

    For each ``g`` the candidate corners are the positive local maxima of
    the discrete curvature of the ``(log rho, log theta)`` polyline, strongest
    first. ``stability`` maps a ``beta`` to the spectral radius of its linear
    operator; the corner of a curve is its strongest candidate with radius
    ``<= 1 + stability_tol``, or the strongest candidate when none passes.
    Curves without a positive curvature vertex fall back to the smallest
    ``eta`` and are flagged in ``boundary_corner``. Across ``g``, stable
    corners win and ties go to the smallest residual; if none is stable the
    smallest radius wins. Without ``stability`` every corner counts as stable.
    """
    etas = np.sort(np.asarray(eta_grid, dtype=float))
    if etas.size < 3:
        raise ValueError("L-curve curvature needs at least 3 eta values")
    ws = RidgeWorkspace(prob)
    points: List[LCurvePoint] = []
    betas = {}
    corners, flagged = {}, {}
    screened = []
    for g in g_grid:
        g = float(g)
        w = prob.fmap.block_weights(g)
        rho, theta, curve_pts = [], [], []
        for eta in etas:
            beta = ws.solve(RidgeConfig(eta=float(eta), g=g))
            betas[(float(eta), g)] = beta
            rho.append(prob.residual(beta.values))
            theta.append(float(np.sqrt(np.sum(w * beta.values ** 2))))
            curve_pts.append(LCurvePoint(float(eta), g, rho[-1], theta[-1]))
        points.extend(curve_pts)
        kappa = menger_curvature(np.log(np.maximum(rho, 1e-300)),
                                 np.log(np.maximum(theta, 1e-300)))
        cands = _corner_candidates(kappa)
        flagged[g] = not cands
        if not cands:
            cands = [0]
        chosen = None
        for k in cands:
            beta = betas[(float(etas[k]), g)]
            radius = None if stability is None else float(stability(beta))
            curve_pts[k].spectral_radius = radius
            stable = radius is None or radius <= 1.0 + stability_tol
            if stable:
                chosen = (k, radius, True)
                break
            if chosen is None:
                chosen = (k, radius, False)
        k, radius, stable = chosen
        corners[g] = float(etas[k])
        key = (0, rho[k]) if stable else (1, radius)
        screened.append((key, g, float(etas[k])))
    screened.sort(key=lambda item: item[0])
    _, g_sel, eta_sel = screened[0]
    return LCurveResult(points=points, corners=corners, selected_eta=eta_sel,
                        selected_g=g_sel, beta=betas[(eta_sel, g_sel)],
                        boundary_corner=flagged)


def log_grid(lo: float, hi: float, num: int) -> np.ndarray:
    """``num`` log-spaced values on ``[lo, hi]``."""
    return np.logspace(math.log10(lo), math.log10(hi), num)
