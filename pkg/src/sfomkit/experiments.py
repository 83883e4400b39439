"""Experiment drivers: diffusion sweep, advection CFL map, Burgers study,
stability report and model simulation.

Each driver takes a config dataclass and returns an :class:`ExperimentResult`
whose tables are deterministic given the config (including its seed).
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import (
    circulant_eigenvalues,
    gershgorin_check,
    sampling_cfl_bound,
    spectral_radius,
    sufficient_stability_check,
    taylor_data_coeffs,
    taylor_first_order_beta,
    taylor_geometry,
)
from .exceptions import BlowUpError
from .manufactured import (
    AdvectionConfig,
    BurgersConfig,
    DiffusionConfig,
    SnapshotSet,
    advection_analytic,
    advection_derivatives,
    burgers_initial,
    burgers_solve,
    diffusion_analytic,
)
from .mesh import Grid1D, Grid2D, build_block_stencil_2d, build_stencil_1d, support_indices
from .sfom import DiscreteModel, assemble_per_dof, assemble_shared, average_error, load_model, rollout
from .snapshot import FeatureKind, FeatureMap, augment, sample_augmentation_indices
from .solver import CoefficientVector, l_curve_select, log_grid, min_norm_solve, min_norm_solve_batch

__all__ = [
    "INSTABILITY_TOL",
    "DiffusionSweepConfig",
    "AdvectionCflConfig",
    "BurgersRunConfig",
    "StabilityReportConfig",
    "SimulateConfig",
    "ResultTable",
    "ExperimentResult",
    "config_hash",
    "config_from_dict",
    "run_diffusion_sweep",
    "run_advection_cfl_map",
    "run_burgers",
    "run_stability_report",
    "run_simulate",
    "per_dof_betas",
    "burgers_model",
    "diffusion_cell",
    "advection_cell",
    "advection_grid",
    "write_outputs",
]

INSTABILITY_TOL = 1e-8
DIVERGENCE_GUARD = 1e6


def _tuple(values) -> tuple:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class DiffusionSweepConfig:
    """Per-DOF and augmented diffusion models over a ``(dx, dt)`` lattice."""

    experiment: str = "diffusion-sweep"
    c: float = 1.0
    x_min: float = -math.pi
    x_max: float = math.pi
    T: float = 10.0
    dx_values: tuple = tuple(np.geomspace(0.005, 0.3, 8).tolist())
    dt_values: tuple = tuple(np.geomspace(0.001, 0.1, 8).tolist())
    aug_fraction: float = 0.05
    modes: tuple = ("per_dof", "augmented")
    rank_cutoff: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dx_values", _tuple(self.dx_values))
        object.__setattr__(self, "dt_values", _tuple(self.dt_values))
        object.__setattr__(self, "modes", tuple(str(m) for m in self.modes))
        if not self.dx_values or not self.dt_values:
            raise ValueError("dx_values and dt_values must be nonempty")
        if min(self.dx_values) <= 0 or min(self.dt_values) <= 0:
            raise ValueError("grid spacings must be positive")
        if not set(self.modes) <= {"per_dof", "augmented"}:
            raise ValueError("modes must be drawn from 'per_dof' and 'augmented'")
        if not self.c > 0 or not self.T > 0:
            raise ValueError("c and T must be positive")


@dataclass(frozen=True)
class AdvectionCflConfig:
    """Per-DOF linear advection models over a ``(dx, dt)`` lattice.

    ``dx_values`` are snapped to ``2 / n`` with integer ``n`` so the grid is
    exactly periodic on ``[-1, 1)``. ``profile`` is ``"cos_pi"`` (the smooth
    periodic ``cos(pi x)``) or ``"cos"`` (``cos(x)`` wrapped, kinked at the
    boundary).
    """

    experiment: str = "advection-cfl-map"
    c: float = 1.0
    T: float = 5.0
    dx_values: tuple = tuple(np.linspace(0.005, 0.01, 8).tolist())
    dt_values: tuple = tuple(np.linspace(0.002, 0.02, 8).tolist())
    m_values: tuple = (1, 2)
    profile: str = "cos_pi"
    taylor_dof: int = 0
    rank_cutoff: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dx_values", _tuple(self.dx_values))
        object.__setattr__(self, "dt_values", _tuple(self.dt_values))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if min(self.dx_values) <= 0 or min(self.dt_values) <= 0:
            raise ValueError("grid spacings must be positive")
        if any(m < 1 for m in self.m_values):
            raise ValueError("stencil half-width m must be >= 1")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {sorted(PROFILES)}")
        if not self.c > 0:
            raise ValueError("transport speed c must be positive")


@dataclass(frozen=True)
class BurgersRunConfig:
    """2D Burgers: augmented Hadamard-quadratic model with L-curve selection."""

    experiment: str = "burgers"
    c: float = 0.1
    nu: float = 1e-3
    alpha: float = 1.0
    mu: float = 10.0
    dx: float = 0.02
    dt: float = 0.01
    T: float = 10.0
    halfwidth: int = 2
    aug_count: int = 500
    eta_min: float = 1e-5
    eta_max: float = 1.0
    eta_num: int = 30
    g_values: tuple = (10.0, 20.0, 50.0, 80.0, 100.0)
    sweep_alphas: tuple = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
    sweep_mus: tuple = (1.0, 2.0, 5.0, 7.0, 10.0, 15.0, 20.0)
    dense_spectrum: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("g_values", "sweep_alphas", "sweep_mus"):
            object.__setattr__(self, name, _tuple(getattr(self, name)))
        if self.aug_count < 1 or self.eta_num < 3:
            raise ValueError("need aug_count >= 1 and eta_num >= 3")
        if not 0 < self.eta_min < self.eta_max:
            raise ValueError("need 0 < eta_min < eta_max")


@dataclass(frozen=True)
class StabilityReportConfig:
    experiment: str = "stability-report"
    model: str = "model.json"
    mode: str = "auto"
    seed: int = 0


@dataclass(frozen=True)
class SimulateConfig:
    """Roll a saved model out from an initial condition.

    ``ic`` is ``"file"`` (column 0 of the snapshot CSV ``ic_file``; if it has
    at least ``steps + 1`` columns, column ``steps`` is the reference),
    ``"gaussian"`` (2D bump with ``alpha``, ``mu``) or ``"cosine"``
    (``cos(wavenumber * x)`` on a 1D grid).
    """

    experiment: str = "simulate"
    model: str = "model.json"
    ic: str = "gaussian"
    ic_file: str = ""
    alpha: float = 1.0
    mu: float = 10.0
    wavenumber: float = math.pi
    steps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.ic not in ("file", "gaussian", "cosine"):
            raise ValueError("ic must be 'file', 'gaussian' or 'cosine'")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


CONFIG_TYPES = {
    "diffusion-sweep": DiffusionSweepConfig,
    "advection-cfl-map": AdvectionCflConfig,
    "burgers": BurgersRunConfig,
    "stability-report": StabilityReportConfig,
    "simulate": SimulateConfig,
}


def config_from_dict(experiment: str, data: dict):
    """Build the config of ``experiment`` from a (JSON) dict, rejecting
    unknown keys."""
    cls = CONFIG_TYPES[experiment]
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {experiment} config keys: {sorted(unknown)}")
    data = dict(data)
    data["experiment"] = experiment
    return cls(**data)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def config_hash(cfg) -> str:
    """sha256 of the canonical JSON form of a config."""
    text = json.dumps(_jsonable(dataclasses.asdict(cfg)), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


@dataclass
class ResultTable:
    """Named columns, homogeneous rows and a provenance header."""

    columns: List[str]
    rows: List[dict]
    provenance: dict = field(default_factory=dict)
    sort_keys: Sequence[str] = ()

    def __post_init__(self):
        for row in self.rows:
            if set(row) != set(self.columns):
                raise ValueError(f"row keys {sorted(row)} do not match columns")
        if self.sort_keys:
            self.rows.sort(key=lambda r: tuple(_sort_value(r[k]) for k in self.sort_keys))

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def select(self, **where) -> List[dict]:
        return [r for r in self.rows if all(r[k] == v for k, v in where.items())]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.provenance):
            buf.write(f"# {key}: {self.provenance[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())


def _sort_value(v):
    if v is None:
        return (0, 0)
    if isinstance(v, str):
        return (1, v)
    return (0, v)


def _provenance(cfg) -> dict:
    return {"experiment": cfg.experiment, "config_sha256": config_hash(cfg),
            "seed": cfg.seed, "version": __version__}


@dataclass
class ExperimentResult:
    """Tables and artifacts produced by one driver run."""

    table: ResultTable
    summary: dict
    model: Optional[DiscreteModel] = None
    spectrum: Optional[np.ndarray] = None
    extra_tables: Dict[str, ResultTable] = field(default_factory=dict)


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write ``results.csv``, ``summary.json`` and, when present,
    ``model.json``, ``spectrum.csv`` and extra tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.table.to_csv(out / "results.csv")
    (out / "summary.json").write_text(
        json.dumps(_jsonable(result.summary), sort_keys=True, indent=2) + "\n")
    if result.model is not None:
        result.model.save(out / "model.json")
    if result.spectrum is not None:
        spec = ResultTable(["re", "im"], [{"re": float(z.real), "im": float(z.imag)}
                                          for z in np.asarray(result.spectrum)],
                           provenance=result.table.provenance)
        spec.to_csv(out / "spectrum.csv")
    for name, table in result.extra_tables.items():
        table.to_csv(out / f"{name}.csv")
    return out


def per_dof_betas(snap: SnapshotSet, stencil, fmap: FeatureMap,
                  rank_cutoff: float = 1e-10, chunk: int = 64) -> np.ndarray:
    """Minimum-norm coefficients of every DOF's local problem, ``(n, p)``.

    Only linear feature maps are batched; the result equals calling
    :func:`~sfomkit.solver.min_norm_solve` per DOF.
    """
    if fmap.kind is not FeatureKind.LINEAR:
        raise ValueError("batched per-DOF solves support the linear map only")
    cols = support_indices(snap.grid, stencil)
    X = snap.states
    out = np.empty((snap.n, fmap.dim))
    for lo in range(0, snap.n, chunk):
        hi = min(lo + chunk, snap.n)
        D = np.transpose(X[cols[lo:hi], :-1], (0, 2, 1))
        d = X[lo:hi, 1:]
        out[lo:hi], _ = min_norm_solve_batch(D, d, rank_cutoff)
    return out


def _linear_rows_model(rows: np.ndarray, grid, stencil, metadata) -> DiscreteModel:
    fmap = FeatureMap(FeatureKind.LINEAR, stencil.size)
    betas = [CoefficientVector(r, fmap) for r in rows]
    return assemble_per_dof(betas, grid, stencil, metadata=metadata)


def _rollout_record(model: DiscreteModel, snap: SnapshotSet) -> dict:
    res = rollout(model, snap.states[:, 0], snap.num_steps, guard=DIVERGENCE_GUARD,
                  store="last")
    err = average_error(res.final, snap.states[:, -1]) if res.completed else None
    return {"status": res.status, "diverged_step": res.diverged_step, "error_pct": err}


def _classify(radius: float, status: str) -> bool:
    return bool(radius > 1.0 + INSTABILITY_TOL or status == "diverged")


# ---------------------------------------------------------------- diffusion

DIFFUSION_COLUMNS = ["mode", "dx", "dt", "n", "N", "seed", "aug_indices", "error_pct",
                     "spectral_radius", "max_row_l1", "sufficient_stable", "status",
                     "diverged_step", "unstable"]


def diffusion_cell(dx: float, dt: float, mode: str, cfg: DiffusionSweepConfig) -> dict:
    """One ``(dx, dt, mode)`` row of the diffusion sweep."""
    grid = Grid1D.covering(cfg.x_min, cfg.x_max, dx, periodic=True)
    snap = diffusion_analytic(grid, DiffusionConfig(c=cfg.c, dx=dx, dt=dt, T=cfg.T))
    stencil = build_stencil_1d(1, 1)
    fmap = FeatureMap(FeatureKind.LINEAR, stencil.size)
    meta = {"dx": dx, "dt": dt, "mode": mode, "seed": cfg.seed}
    aug = ""
    if mode == "per_dof":
        rows = per_dof_betas(snap, stencil, fmap, cfg.rank_cutoff)
        model = _linear_rows_model(rows, grid, stencil, meta)
        report = spectral_radius(model, mode="dense")
        radius = report.spectral_radius
    else:
        plan = sample_augmentation_indices(grid.n, fraction=cfg.aug_fraction, seed=cfg.seed)
        beta = min_norm_solve(augment(snap, plan, stencil, fmap), cfg.rank_cutoff)
        model = assemble_shared(beta, grid, stencil, metadata=meta)
        # shared-row model on a wrapped grid is circulant: FFT spectrum is exact
        report = gershgorin_check(model)
        radius = float(np.max(np.abs(circulant_eigenvalues(beta.linear, grid, stencil))))
        aug = " ".join(str(i) for i in plan.indices)
    rec = _rollout_record(model, snap)
    return {"mode": mode, "dx": dx, "dt": dt, "n": grid.n, "N": snap.num_steps,
            "seed": cfg.seed, "aug_indices": aug, "error_pct": rec["error_pct"],
            "spectral_radius": radius, "max_row_l1": report.max_row_l1,
            "sufficient_stable": report.sufficient_stable, "status": rec["status"],
            "diverged_step": rec["diverged_step"],
            "unstable": _classify(radius, rec["status"])}


def _loglog_slope(x, y) -> Optional[float]:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def run_diffusion_sweep(cfg: DiffusionSweepConfig) -> ExperimentResult:
    rows = [diffusion_cell(dx, dt, mode, cfg)
            for dx in cfg.dx_values for dt in cfg.dt_values for mode in cfg.modes]
    table = ResultTable(DIFFUSION_COLUMNS, rows, _provenance(cfg),
                        sort_keys=("mode", "dx", "dt"))
    summary = {"provenance": table.provenance, "config": dataclasses.asdict(cfg),
               "per_dx": {}}
    for dx in cfg.dx_values:
        entry = {}
        per = table.select(mode="per_dof", dx=dx)
        if per:
            entry["per_dof_all_stable"] = not any(r["unstable"] for r in per)
            entry["per_dof_error_slope"] = _loglog_slope([r["dt"] for r in per],
                                                          [r["error_pct"] for r in per])
        aug = table.select(mode="augmented", dx=dx)
        if aug:
            unstable = [r["dt"] for r in aug if r["unstable"]]
            entry["augmented_unstable_dt"] = unstable
            stable = [r["dt"] for r in aug if not r["unstable"]]
            entry["augmented_stable_dt"] = stable
        summary["per_dx"][repr(dx)] = entry
    return ExperimentResult(table=table, summary=summary)


# ---------------------------------------------------------------- advection

def _cos_wrapped(x):
    return np.cos(x)


def _cos_pi(x):
    return np.cos(np.pi * x)


PROFILES = {"cos_pi": _cos_pi, "cos": _cos_wrapped}

ADVECTION_COLUMNS = ["m", "n", "dx", "dt", "ratio", "bound", "below_bound",
                     "taylor_l1", "taylor_sufficient_stable", "spectral_radius",
                     "max_row_l1", "error_pct", "status", "diverged_step", "unstable"]


def advection_grid(dx: float) -> Grid1D:
    """Periodic grid on ``[-1, 1)`` with ``n = round(2 / dx)`` nodes."""
    return Grid1D.periodic_interval(-1.0, 1.0, int(round(2.0 / dx)))


def taylor_advection_prediction(m: int, x_i: float, c: float, dx: float, dt: float,
                                N: int) -> tuple:
    """Row l1 norm and verdict of the first-order Taylor coefficients built
    from exact ``cos(pi (x + c t))`` derivative series at ``x_i``."""
    times = dt * np.arange(N)
    u, ux, ut = advection_derivatives(x_i, times, c=c)
    tb = taylor_first_order_beta(taylor_geometry(m, m), taylor_data_coeffs(u, ux, ut),
                                 dx, dt)
    return tb.l1, sufficient_stability_check(tb)


def advection_cell(m: int, dx: float, dt: float, cfg: AdvectionCflConfig) -> dict:
    """One ``(m, dx, dt)`` row of the CFL map."""
    grid = advection_grid(dx)
    acfg = AdvectionConfig(c=cfg.c, u0=PROFILES[cfg.profile], dt=dt, T=cfg.T)
    snap = advection_analytic(grid, acfg)
    stencil = build_stencil_1d(m, m)
    fmap = FeatureMap(FeatureKind.LINEAR, stencil.size)
    rows = per_dof_betas(snap, stencil, fmap, cfg.rank_cutoff)
    meta = {"dx": grid.dx, "dt": dt, "m": m, "profile": cfg.profile}
    model = _linear_rows_model(rows, grid, stencil, meta)
    report = spectral_radius(model, mode="dense")
    rec = _rollout_record(model, snap)
    ratio = dt / grid.dx
    bound = sampling_cfl_bound(m, cfg.c)
    x_i = grid.coordinate(cfg.taylor_dof % grid.n)
    tl1, tstable = taylor_advection_prediction(m, x_i, cfg.c, grid.dx, dt, snap.num_steps)
    return {"m": m, "n": grid.n, "dx": grid.dx, "dt": dt, "ratio": ratio, "bound": bound,
            "below_bound": bool(ratio <= bound), "taylor_l1": tl1,
            "taylor_sufficient_stable": tstable,
            "spectral_radius": report.spectral_radius, "max_row_l1": report.max_row_l1,
            "error_pct": rec["error_pct"], "status": rec["status"],
            "diverged_step": rec["diverged_step"],
            "unstable": _classify(report.spectral_radius, rec["status"])}


def run_advection_cfl_map(cfg: AdvectionCflConfig) -> ExperimentResult:
    rows = [advection_cell(m, dx, dt, cfg)
            for m in cfg.m_values for dx in cfg.dx_values for dt in cfg.dt_values]
    table = ResultTable(ADVECTION_COLUMNS, rows, _provenance(cfg),
                        sort_keys=("m", "dx", "dt"))
    summary = {"provenance": table.provenance, "config": dataclasses.asdict(cfg), "per_m": {}}
    for m in cfg.m_values:
        sub = table.select(m=m)
        stable = [r["ratio"] for r in sub if not r["unstable"]]
        unstable = [r["ratio"] for r in sub if r["unstable"]]
        t_ok = [r["ratio"] for r in sub if r["taylor_sufficient_stable"]]
        t_bad = [r["ratio"] for r in sub if not r["taylor_sufficient_stable"]]
        summary["per_m"][str(m)] = {
            "bound": sampling_cfl_bound(m, cfg.c),
            "max_stable_ratio": max(stable) if stable else None,
            "min_unstable_ratio": min(unstable) if unstable else None,
            "taylor_max_stable_ratio": max(t_ok) if t_ok else None,
            "taylor_min_unstable_ratio": min(t_bad) if t_bad else None,
        }
    return ExperimentResult(table=table, summary=summary)


# ---------------------------------------------------------------- burgers

SWEEP_COLUMNS = ["alpha", "mu", "status", "diverged_step", "error_pct", "reference"]
LCURVE_COLUMNS = ["g", "eta", "residual", "solution_norm", "spectral_radius",
                  "is_corner", "is_selected"]


def burgers_model(cfg: BurgersRunConfig, snap: Optional[SnapshotSet] = None):
    """Train the shared-coefficient Burgers model.

    Returns ``(model, lcurve, snap)``; the stability screen uses the exact
    circulant spectrum of the linear block.
    """
    grid = Grid2D.unit_square(cfg.dx)
    bcfg = BurgersConfig(c=cfg.c, nu=cfg.nu, alpha=cfg.alpha, mu=cfg.mu, dx=cfg.dx,
                         dt=cfg.dt, T=cfg.T)
    if snap is None:
        snap = burgers_solve(grid, bcfg, guard=DIVERGENCE_GUARD)
    stencil = build_block_stencil_2d(cfg.halfwidth)
    fmap = FeatureMap(FeatureKind.LINEAR_HADAMARD_QUADRATIC, stencil.size)
    plan = sample_augmentation_indices(grid.num_dofs, count=cfg.aug_count, seed=cfg.seed)
    prob = augment(snap, plan, stencil, fmap)

    def screen(beta):
        return float(np.max(np.abs(circulant_eigenvalues(beta.linear, grid, stencil))))

    lc = l_curve_select(prob, log_grid(cfg.eta_min, cfg.eta_max, cfg.eta_num),
                        cfg.g_values, stability=screen, stability_tol=INSTABILITY_TOL)
    meta = {"seed": cfg.seed, "eta": lc.selected_eta, "g": lc.selected_g,
            "dx": cfg.dx, "dt": cfg.dt, "aug_count": cfg.aug_count}
    model = assemble_shared(lc.beta, grid, stencil, metadata=meta)
    return model, lc, snap


def run_burgers(cfg: BurgersRunConfig) -> ExperimentResult:
    model, lc, snap = burgers_model(cfg)
    grid = snap.grid
    K = snap.num_steps
    train = rollout(model, snap.states[:, 0], K, guard=DIVERGENCE_GUARD, store="last")
    train_err = average_error(train.final, snap.states[:, -1]) if train.completed else None
    report = spectral_radius(model.A, mode="dense" if cfg.dense_spectrum else "power")
    rows = []
    for alpha in cfg.sweep_alphas:
        for mu in cfg.sweep_mus:
            bcfg = BurgersConfig(c=cfg.c, nu=cfg.nu, alpha=alpha, mu=mu, dx=cfg.dx,
                                 dt=cfg.dt, T=cfg.T)
            try:
                ref = burgers_solve(grid, bcfg, guard=DIVERGENCE_GUARD).states[:, -1]
                ref_status = "completed"
            except BlowUpError:
                ref, ref_status = None, "diverged"
            res = rollout(model, burgers_initial(grid, alpha, mu), K,
                          guard=DIVERGENCE_GUARD, store="last")
            err = (average_error(res.final, ref)
                   if res.completed and ref is not None else None)
            rows.append({"alpha": alpha, "mu": mu, "status": res.status,
                         "diverged_step": res.diverged_step, "error_pct": err,
                         "reference": ref_status})
    prov = _provenance(cfg)
    table = ResultTable(SWEEP_COLUMNS, rows, prov, sort_keys=("alpha", "mu"))
    lrows = [{k: r[k] for k in LCURVE_COLUMNS} for r in lc.to_rows()]
    ltable = ResultTable(LCURVE_COLUMNS, lrows, prov, sort_keys=("g", "eta"))
    radius = report.spectral_radius
    summary = {
        "provenance": prov, "config": dataclasses.asdict(cfg),
        "selected_eta": lc.selected_eta, "selected_g": lc.selected_g,
        "corners": {repr(g): e for g, e in lc.corners.items()},
        "boundary_corner": {repr(g): f for g, f in lc.boundary_corner.items()},
        "spectral_radius": radius, "spectrum_method": report.method,
        "eigenvalues_in_unit_disc": bool(radius <= 1.0 + INSTABILITY_TOL),
        "max_row_l1": report.max_row_l1,
        "training_status": train.status, "training_error_pct": train_err,
    }
    return ExperimentResult(table=table, summary=summary, model=model,
                            spectrum=report.eigenvalues, extra_tables={"lcurve": ltable})


# ---------------------------------------------------------------- model tools

REPORT_COLUMNS = ["row", "nnz", "row_l1", "consistency_sum"]


def run_stability_report(cfg: StabilityReportConfig) -> ExperimentResult:
    model = load_model(cfg.model)
    report = spectral_radius(model, mode=cfg.mode)
    sums = model.A.row_sums()
    nnz = model.A.nnz_per_row()
    rows = [{"row": i, "nnz": int(nnz[i]), "row_l1": float(report.row_l1_norms[i]),
             "consistency_sum": float(sums[i])} for i in range(model.n)]
    prov = _provenance(cfg)
    table = ResultTable(REPORT_COLUMNS, rows, prov, sort_keys=("row",))
    summary = {"provenance": prov, "model": str(cfg.model), "n": model.n,
               **{k: v for k, v in report.to_dict().items()
                  if k not in ("row_l1_norms", "eigenvalues")}}
    return ExperimentResult(table=table, summary=summary, spectrum=report.eigenvalues)


SIMULATE_COLUMNS = ["dof", "initial", "final", "reference"]


def _model_grid(model: DiscreteModel):
    from .mesh import grid_from_dict

    if "grid" not in model.metadata:
        raise ValueError("model metadata carries no grid; use ic='file'")
    return grid_from_dict(model.metadata["grid"])


def run_simulate(cfg: SimulateConfig) -> ExperimentResult:
    model = load_model(cfg.model)
    ref = None
    if cfg.ic == "file":
        snap = SnapshotSet.from_csv(cfg.ic_file)
        u0 = snap.states[:, 0]
        if snap.num_steps >= cfg.steps:
            ref = snap.states[:, cfg.steps]
    else:
        grid = _model_grid(model)
        if cfg.ic == "gaussian":
            if not isinstance(grid, Grid2D):
                raise ValueError("gaussian initial condition needs a 2D model")
            u0 = burgers_initial(grid, cfg.alpha, cfg.mu)
        else:
            if not isinstance(grid, Grid1D):
                raise ValueError("cosine initial condition needs a 1D model")
            u0 = np.cos(cfg.wavenumber * grid.coordinates)
    if u0.shape != (model.n,):
        raise ValueError(f"initial condition has {u0.size} DOFs, model has {model.n}")
    res = rollout(model, u0, cfg.steps, guard=DIVERGENCE_GUARD, store="last")
    final = res.final
    rows = [{"dof": i, "initial": float(u0[i]), "final": float(final[i]),
             "reference": None if ref is None else float(ref[i])} for i in range(model.n)]
    prov = _provenance(cfg)
    table = ResultTable(SIMULATE_COLUMNS, rows, prov, sort_keys=("dof",))
    err = average_error(final, ref) if (ref is not None and res.completed) else None
    summary = {"provenance": prov, "config": dataclasses.asdict(cfg),
               "status": res.status, "steps_taken": res.steps_taken,
               "diverged_step": res.diverged_step, "error_pct": err}
    return ExperimentResult(table=table, summary=summary)
