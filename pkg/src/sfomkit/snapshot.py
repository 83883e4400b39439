"""Feature maps and (augmented) local least-squares problems."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .manufactured import SnapshotSet
from .mesh import Stencil, SupportSet, support_set

__all__ = [
    "FeatureKind",
    "FeatureMap",
    "LocalProblem",
    "AugmentationPlan",
    "feature_vector",
    "feature_matrix",
    "assemble_local",
    "augment",
    "sample_augmentation_indices",
]


class FeatureKind(str, enum.Enum):
    LINEAR = "linear"
    LINEAR_HADAMARD_QUADRATIC = "linear_hadamard_quadratic"
    LINEAR_QUADRATIC_CONSTANT = "linear_quadratic_constant"


@dataclass(frozen=True)
class FeatureMap:
    """Monomial layout of ``f(u_Q)`` for a support of size ``r``.

    * ``LINEAR``: ``u_Q`` (dimension ``r``).
    * ``LINEAR_HADAMARD_QUADRATIC``: ``[u_Q ; u_i u_Q]`` (``2r``).
    * ``LINEAR_QUADRATIC_CONSTANT``: ``[u_Q ; u_a u_b (a <= b) ; 1]``
      (``r + r(r+1)/2 + 1``), quadratic pairs in upper-triangular row order.
    """

    kind: FeatureKind
    r: int

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        if self.r < 1:
            raise ValueError("support cardinality must be >= 1")

    @property
    def num_quadratic(self) -> int:
        if self.kind is FeatureKind.LINEAR:
            return 0
        if self.kind is FeatureKind.LINEAR_HADAMARD_QUADRATIC:
            return self.r
        return self.r * (self.r + 1) // 2

    @property
    def has_constant(self) -> bool:
        return self.kind is FeatureKind.LINEAR_QUADRATIC_CONSTANT

    @property
    def dim(self) -> int:
        return self.r + self.num_quadratic + int(self.has_constant)

    @property
    def blocks(self) -> dict:
        """Slices of the ``linear``, ``quadratic`` and ``constant`` blocks."""
        q = self.num_quadratic
        return {
            "linear": slice(0, self.r),
            "quadratic": slice(self.r, self.r + q),
            "constant": slice(self.r + q, self.dim),
        }

    def block_weights(self, g: float = 1.0) -> np.ndarray:
        """Per-feature multipliers: ``g`` on quadratic entries, 1 elsewhere."""
        w = np.ones(self.dim)
        w[self.blocks["quadratic"]] = g
        return w

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "r": self.r}


def feature_matrix(UQ: np.ndarray, center: np.ndarray, fmap: FeatureMap) -> np.ndarray:
    """Row-wise feature vectors for ``UQ`` of shape ``(N, r)``.

    ``center`` holds ``u_i`` per row (used by the Hadamard map only).
    """
    UQ = np.atleast_2d(np.asarray(UQ, dtype=float))
    if UQ.shape[1] != fmap.r:
        raise ValueError(f"support values have {UQ.shape[1]} entries, map expects {fmap.r}")
    if fmap.kind is FeatureKind.LINEAR:
        return UQ.copy()
    if fmap.kind is FeatureKind.LINEAR_HADAMARD_QUADRATIC:
        center = np.asarray(center, dtype=float).reshape(-1, 1)
        return np.hstack([UQ, center * UQ])
    a, b = np.triu_indices(fmap.r)
    return np.hstack([UQ, UQ[:, a] * UQ[:, b], np.ones((UQ.shape[0], 1))])


def feature_vector(uQ, center_value: float, fmap: FeatureMap) -> np.ndarray:
    """``f(u_Q)`` for a single state."""
    uQ = np.asarray(uQ, dtype=float)
    if uQ.ndim != 1 or uQ.size != fmap.r:
        raise ValueError(f"expected {fmap.r} support values, got shape {uQ.shape}")
    return feature_matrix(uQ[None, :], np.array([center_value]), fmap)[0]


@dataclass(frozen=True, eq=False)
class LocalProblem:
    """Data ``(D, d)`` of ``min ||D beta - d||`` for one or more DOFs.

    Row ``k`` of ``D`` is ``f(u_Q^k)`` and ``d[k]`` is ``u_i^{k+1}``; augmented
    problems stack blocks for several centres in ``centers`` order.
    """

    D: np.ndarray
    d: np.ndarray
    centers: tuple
    fmap: FeatureMap
    dx: Optional[float] = None
    dt: Optional[float] = None

    def __post_init__(self):
        if self.D.ndim != 2 or self.d.ndim != 1 or self.D.shape[0] != self.d.shape[0]:
            raise ValueError("D must be (rows, p) and d must be (rows,)")
        if self.D.shape[1] != self.fmap.dim:
            raise ValueError("D column count does not match the feature map")

    @property
    def shape(self) -> tuple:
        return self.D.shape

    def residual(self, beta) -> float:
        return float(np.linalg.norm(self.D @ np.asarray(beta, dtype=float) - self.d))


def _grid_dx(snap: SnapshotSet):
    return None if snap.grid is None else snap.grid.dx


def _local_block(states: np.ndarray, i: int, members: np.ndarray, fmap: FeatureMap):
    if members.min() < 0 or members.max() >= states.shape[0] or not 0 <= i < states.shape[0]:
        raise IndexError("support indices out of range of the snapshot set")
    UQ = states[members, :-1].T
    D = feature_matrix(UQ, states[i, :-1], fmap)
    return D, states[i, 1:].copy()


def assemble_local(snap: SnapshotSet, i: int, support: SupportSet,
                   fmap: FeatureMap) -> LocalProblem:
    """Snapshot matrix and shifted target for DOF ``i``."""
    if support.r != fmap.r:
        raise ValueError("support size does not match the feature map")
    D, d = _local_block(snap.states, i, support.as_array(), fmap)
    return LocalProblem(D=D, d=d, centers=(int(i),), fmap=fmap,
                        dx=_grid_dx(snap), dt=snap.dt)


@dataclass(frozen=True)
class AugmentationPlan:
    """DOFs whose local problems are stacked into one shared problem."""

    indices: tuple
    seed: Optional[int] = None
    requested: Optional[float] = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError("augmentation indices must be unique")
        if any(i < 0 for i in idx):
            raise ValueError("augmentation indices must be nonnegative")
        object.__setattr__(self, "indices", idx)


def sample_augmentation_indices(n: int, count: Optional[int] = None,
                                fraction: Optional[float] = None,
                                seed: int = 0) -> AugmentationPlan:
    """Draw augmentation DOFs uniformly without replacement.

    Exactly one of ``count`` and ``fraction`` is given; a fraction maps to
    ``max(1, round(fraction * n))`` DOFs.
    """
    if (count is None) == (fraction is None):
        raise ValueError("give exactly one of count and fraction")
    if fraction is not None:
        if not 0 < fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        k = max(1, int(round(fraction * n)))
        requested = float(fraction)
    else:
        k = int(count)
        requested = float(count)
    if k > n or k < 1:
        raise ValueError(f"cannot draw {k} of {n} DOFs")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    return AugmentationPlan(indices=tuple(int(i) for i in idx), seed=seed,
                            requested=requested)


def augment(snap: SnapshotSet, plan: AugmentationPlan, stencil: Stencil,
            fmap: FeatureMap) -> LocalProblem:
    """Stack the local problems of ``plan.indices`` (in plan order)."""
    if snap.grid is None:
        raise ValueError("augmentation needs a snapshot set with a grid")
    if stencil.size != fmap.r:
        raise ValueError("mixed feature dimensions: stencil and map disagree")
    n = snap.n
    if any(i >= n for i in plan.indices):
        raise IndexError("augmentation index out of range")
    Ds, ds = [], []
    for i in plan.indices:
        members = support_set(snap.grid, i, stencil).as_array()
        D, d = _local_block(snap.states, i, members, fmap)
        Ds.append(D)
        ds.append(d)
    return LocalProblem(D=np.vstack(Ds), d=np.concatenate(ds), centers=plan.indices,
                        fmap=fmap, dx=_grid_dx(snap), dt=snap.dt)


def stack_problems(problems: Sequence[LocalProblem]) -> LocalProblem:
    """Vertically stack already-assembled problems sharing one feature map."""
    fmap = problems[0].fmap
    if any(p.fmap != fmap for p in problems):
        raise ValueError("mixed feature dimensions")
    centers = tuple(c for p in problems for c in p.centers)
    return LocalProblem(D=np.vstack([p.D for p in problems]),
                        d=np.concatenate([p.d for p in problems]),
                        centers=centers, fmap=fmap, dx=problems[0].dx,
                        dt=problems[0].dt)
