"""Sparse discrete-time models assembled from inferred coefficients.

A model advances ``u^{k+1} = A u^k + q(u^k) + c`` where the quadratic part
``q`` is either the Hadamard form ``(H u) * u`` or a sum over unique support
pairs ``sum_p h_p u_a u_b``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse

from .mesh import Grid, Stencil, support_indices
from .snapshot import FeatureKind, FeatureMap
from .solver import CoefficientVector

__all__ = [
    "SparseLinearOperator",
    "QuadraticHadamardOperator",
    "PairQuadraticOperator",
    "DiscreteModel",
    "RolloutResult",
    "assemble_shared",
    "assemble_per_dof",
    "step",
    "rollout",
    "average_error",
    "load_model",
]

MODEL_FORMAT = "sfomkit-model"
MODEL_FORMAT_VERSION = 1


class SparseLinearOperator:
    """Row-compressed ``n x n`` operator with sorted column indices per row."""

    def __init__(self, matrix):
        csr = sparse.csr_array(matrix, dtype=float)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError("operator must be square")
        csr.sum_duplicates()
        csr.sort_indices()
        self._csr = csr

    @classmethod
    def from_rows(cls, cols: np.ndarray, vals: np.ndarray, n: int):
        """Build from per-row column indices and values, both ``(n, r)``.
        Repeated columns within a row are summed."""
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if cols.shape != vals.shape or cols.shape[0] != n:
            raise ValueError("cols and vals must both be (n, r)")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(n), cols.shape[1])
        coo = sparse.coo_array((vals.ravel(), (rows, cols.ravel())), shape=(n, n))
        return cls(coo.tocsr())

    @classmethod
    def from_csr_arrays(cls, n: int, indptr, indices, data):
        return cls(sparse.csr_array((np.asarray(data, float), np.asarray(indices, np.int64),
                                     np.asarray(indptr, np.int64)), shape=(n, n)))

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    @property
    def csr(self):
        return self._csr

    def nnz_per_row(self) -> np.ndarray:
        return np.diff(self.indptr)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self._csr @ u

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def row_l1_norms(self) -> np.ndarray:
        return np.asarray(abs(self._csr).sum(axis=1)).ravel()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self._csr.sum(axis=1)).ravel()

    def to_dict(self) -> dict:
        return {"indptr": self.indptr.tolist(), "indices": self.indices.tolist(),
                "data": self.data.tolist()}

    @classmethod
    def from_dict(cls, n: int, data: dict):
        return cls.from_csr_arrays(n, data["indptr"], data["indices"], data["data"])


class QuadraticHadamardOperator(SparseLinearOperator):
    """``H`` in the term ``(H u) * u``."""

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.matvec(u) * u


class PairQuadraticOperator:
    """Row-local quadratic term ``q_i(u) = sum_p h_{ip} u_{a_{ip}} u_{b_{ip}}``.

    ``a``, ``b`` and ``h`` are ``(n, P)`` arrays (one row per DOF).
    """

    def __init__(self, a, b, h):
        self.a = np.asarray(a, dtype=np.int64)
        self.b = np.asarray(b, dtype=np.int64)
        self.h = np.asarray(h, dtype=float)
        if not (self.a.shape == self.b.shape == self.h.shape):
            raise ValueError("pair arrays must share a shape")

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        return np.sum(self.h * u[self.a] * u[self.b], axis=1)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "h": self.h.tolist()}

    @classmethod
    def from_dict(cls, n: int, data: dict):
        return cls(data["a"], data["b"], data["h"])


QuadraticOperator = Union[QuadraticHadamardOperator, PairQuadraticOperator]


@dataclass(eq=False)
class RolloutResult:
    """States visited by :func:`rollout`.

    ``trajectory`` has one column per stored state (all steps, or only the
    initial and last state when ``store="last"``). ``status`` is
    ``"completed"`` or ``"diverged"``; ``diverged_step`` is the first step
    whose state left the guard.
    """

    trajectory: np.ndarray
    status: str
    steps_taken: int
    diverged_step: Optional[int] = None

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[:, -1]

    @property
    def completed(self) -> bool:
        return self.status == "completed"


@dataclass(eq=False)
class DiscreteModel:
    """Inferred sparse full-order model ``u' = A u + q(u) + c``."""

    A: SparseLinearOperator
    H: Optional[QuadraticOperator] = None
    c: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.A.n
        if self.H is not None and self.H.n != n:
            raise ValueError("H dimension does not match A")
        if self.c is not None:
            self.c = np.asarray(self.c, dtype=float).ravel()
            if self.c.size != n:
                raise ValueError("c dimension does not match A")

    @property
    def n(self) -> int:
        return self.A.n

    def step(self, u: np.ndarray) -> np.ndarray:
        return step(self, u)

    def rollout(self, u0, K: int, guard: float = 1e6, store: str = "all") -> RolloutResult:
        return rollout(self, u0, K, guard=guard, store=store)

    def to_dict(self) -> dict:
        out = {"format": MODEL_FORMAT, "version": MODEL_FORMAT_VERSION, "n": self.n,
               "A": self.A.to_dict(), "H": None, "c": None,
               "metadata": self.metadata}
        if isinstance(self.H, QuadraticHadamardOperator):
            out["H"] = {"kind": "hadamard", **self.H.to_dict()}
        elif isinstance(self.H, PairQuadraticOperator):
            out["H"] = {"kind": "pairs", **self.H.to_dict()}
        if self.c is not None:
            out["c"] = self.c.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteModel":
        if data.get("format") != MODEL_FORMAT:
            raise ValueError("not a sfomkit model file")
        n = int(data["n"])
        A = SparseLinearOperator.from_dict(n, data["A"])
        H = None
        if data.get("H") is not None:
            kind = data["H"].get("kind")
            if kind == "hadamard":
                H = QuadraticHadamardOperator.from_dict(n, data["H"])
            elif kind == "pairs":
                H = PairQuadraticOperator.from_dict(n, data["H"])
            else:
                raise ValueError(f"unknown quadratic operator kind {kind!r}")
        c = None if data.get("c") is None else np.asarray(data["c"], dtype=float)
        return cls(A=A, H=H, c=c, metadata=dict(data.get("metadata", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))


def load_model(path) -> DiscreteModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from exc
    try:
        return DiscreteModel.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from exc


def _assemble(rows: np.ndarray, grid: Grid, stencil: Stencil, fmap: FeatureMap,
              metadata: Optional[dict]) -> DiscreteModel:
    """``rows`` is ``(n, p)``: one coefficient vector per DOF."""
    if stencil.size != fmap.r:
        raise ValueError("feature map does not match the stencil size")
    if not grid.periodic:
        raise ValueError("model assembly needs a periodic grid")
    n = grid.num_dofs
    cols = support_indices(grid, stencil)
    blocks = fmap.blocks
    A = SparseLinearOperator.from_rows(cols, rows[:, blocks["linear"]], n)
    H = None
    c = None
    if fmap.kind is FeatureKind.LINEAR_HADAMARD_QUADRATIC:
        H = QuadraticHadamardOperator.from_rows(cols, rows[:, blocks["quadratic"]], n)
    elif fmap.kind is FeatureKind.LINEAR_QUADRATIC_CONSTANT:
        ia, ib = np.triu_indices(fmap.r)
        H = PairQuadraticOperator(cols[:, ia], cols[:, ib], rows[:, blocks["quadratic"]])
        c = rows[:, blocks["constant"]][:, 0].copy()
    meta = {"stencil": stencil.to_dict(), "feature_map": fmap.to_dict(),
            "grid": grid.to_dict()}
    meta.update(metadata or {})
    return DiscreteModel(A=A, H=H, c=c, metadata=meta)


def assemble_shared(beta: CoefficientVector, grid: Grid, stencil: Stencil,
                    metadata: Optional[dict] = None) -> DiscreteModel:
    """Use one coefficient vector for every row (translation-invariant model)."""
    rows = np.tile(beta.values, (grid.num_dofs, 1))
    return _assemble(rows, grid, stencil, beta.fmap, metadata)


def assemble_per_dof(betas: Sequence[CoefficientVector], grid: Grid, stencil: Stencil,
                     metadata: Optional[dict] = None) -> DiscreteModel:
    """Row ``i`` of the model comes from ``betas[i]``."""
    if len(betas) != grid.num_dofs:
        raise ValueError(f"need {grid.num_dofs} coefficient vectors, got {len(betas)}")
    fmap = betas[0].fmap
    if any(b.fmap != fmap for b in betas):
        raise ValueError("all coefficient vectors must share a feature map")
    rows = np.vstack([b.values for b in betas])
    return _assemble(rows, grid, stencil, fmap, metadata)


def step(model: DiscreteModel, u: np.ndarray) -> np.ndarray:
    """One model update ``A u + q(u) + c``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.n,):
        raise ValueError(f"state must have shape ({model.n},)")
    if not np.all(np.isfinite(u)):
        raise ValueError("state must be finite")
    out = model.A.matvec(u)
    if model.H is not None:
        out = out + model.H.apply(u)
    if model.c is not None:
        out = out + model.c
    return out


def rollout(model: DiscreteModel, u0, K: int, guard: float = 1e6,
            store: str = "all") -> RolloutResult:
    """Iterate :func:`step` ``K`` times, stopping once ``max|u| > guard``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if store not in ("all", "last"):
        raise ValueError("store must be 'all' or 'last'")
    u = np.asarray(u0, dtype=float).copy()
    traj = [u] if store == "last" else np.empty((model.n, K + 1))
    if store == "all":
        traj[:, 0] = u
    A = model.A.csr
    H, c = model.H, model.c
    for k in range(1, K + 1):
        nxt = A @ u
        if H is not None:
            nxt = nxt + H.apply(u)
        if c is not None:
            nxt = nxt + c
        u = nxt
        peak = np.max(np.abs(u))
        if not np.isfinite(peak) or peak > guard:
            if store == "all":
                traj[:, k] = u
                traj = traj[:, :k + 1]
            else:
                traj = np.column_stack([traj[0], u])
            return RolloutResult(trajectory=traj, status="diverged", steps_taken=k,
                                 diverged_step=k)
        if store == "all":
            traj[:, k] = u
    if store == "last":
        traj = np.column_stack([traj[0], u])
    return RolloutResult(trajectory=traj, status="completed", steps_taken=K)


def average_error(pred, ref, use_abs_max: bool = False) -> float:
    """Mean pointwise absolute error relative to ``max(ref)``, in percent.

    ``use_abs_max`` normalizes by ``max|ref|`` instead, for sign-changing
    fields.
    """
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if pred.shape != ref.shape:
        raise ValueError("pred and ref must have equal shapes")
    scale = np.max(np.abs(ref)) if use_abs_max else np.max(ref)
    if scale == 0:
        raise ValueError("max(ref) = 0: average error undefined")
    return float(np.mean(np.abs(pred - ref)) / scale * 100.0)
