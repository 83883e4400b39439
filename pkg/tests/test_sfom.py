import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfomkit.mesh import Grid1D, Grid2D, build_block_stencil_2d, build_stencil_1d, support_indices
from sfomkit.sfom import (
    DiscreteModel,
    PairQuadraticOperator,
    QuadraticHadamardOperator,
    SparseLinearOperator,
    assemble_per_dof,
    assemble_shared,
    average_error,
    load_model,
    rollout,
    step,
)
from sfomkit.snapshot import FeatureKind, FeatureMap, feature_vector
from sfomkit.solver import CoefficientVector


def ftcs_model(n=50, r=0.4):
    beta = CoefficientVector([r, 1 - 2 * r, r], FeatureMap("linear", 3))
    return assemble_shared(beta, Grid1D(n=n, dx=1.0), build_stencil_1d(1, 1))


def test_shared_assembly_is_circulant():
    A = ftcs_model(n=6).A.toarray()
    assert np.allclose(A[0], [0.2, 0.4, 0, 0, 0, 0.4])
    assert np.allclose(A[3], [0, 0, 0.4, 0.2, 0.4, 0])


def test_duplicate_columns_are_summed():
    # a 5-point stencil on a 3-node ring hits each column more than once
    beta = CoefficientVector(np.ones(5), FeatureMap("linear", 5))
    m = assemble_shared(beta, Grid1D(n=3, dx=1.0), build_stencil_1d(2, 2))
    assert np.allclose(m.A.toarray(), [[1, 2, 2], [2, 1, 2], [2, 2, 1]])
    assert np.all(m.A.nnz_per_row() == 3)


def test_step_matches_feature_inner_products(rng):
    g = Grid2D(nx=6, ny=5, dx=0.2, dy=0.2)
    st2 = build_block_stencil_2d(1)
    for kind in (FeatureKind.LINEAR_HADAMARD_QUADRATIC, FeatureKind.LINEAR_QUADRATIC_CONSTANT):
        fm = FeatureMap(kind, st2.size)
        betas = [CoefficientVector(rng.standard_normal(fm.dim) * 0.1, fm)
                 for _ in range(g.num_dofs)]
        model = assemble_per_dof(betas, g, st2)
        u = rng.standard_normal(g.num_dofs)
        cols = support_indices(g, st2)
        ref = np.array([betas[i].values @ feature_vector(u[cols[i]], u[i], fm)
                        for i in range(g.num_dofs)])
        assert np.allclose(step(model, u), ref)


def test_step_validates_state():
    m = ftcs_model(n=5)
    with pytest.raises(ValueError):
        step(m, np.ones(4))
    with pytest.raises(ValueError):
        step(m, np.array([1.0, np.nan, 0, 0, 0]))


def test_rollout_completes_and_diverges():
    m = ftcs_model(n=8)
    u0 = np.cos(2 * np.pi * np.arange(8) / 8)
    res = rollout(m, u0, 20)
    assert res.completed and res.trajectory.shape == (8, 21)
    grow = DiscreteModel(A=SparseLinearOperator(2.0 * np.eye(3)))
    res = rollout(grow, np.ones(3), 100, guard=1e6)
    assert res.status == "diverged" and res.diverged_step == 20
    last = rollout(grow, np.ones(3), 100, guard=1e6, store="last")
    assert last.trajectory.shape == (3, 2) and last.diverged_step == 20


def test_rollout_store_last_matches_all():
    m = ftcs_model(n=10)
    u0 = np.random.default_rng(1).standard_normal(10)
    full = rollout(m, u0, 15)
    last = rollout(m, u0, 15, store="last")
    assert np.array_equal(full.final, last.final)


def test_model_json_round_trip(tmp_path, rng):
    g = Grid2D(nx=5, ny=5, dx=0.2, dy=0.2)
    st2 = build_block_stencil_2d(1)
    for kind in FeatureKind:
        fm = FeatureMap(kind, st2.size)
        beta = CoefficientVector(rng.standard_normal(fm.dim), fm)
        m = assemble_shared(beta, g, st2, metadata={"seed": 3, "eta": 1e-4})
        m.save(tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        u = rng.standard_normal(g.num_dofs)
        assert np.array_equal(step(back, u), step(m, u))
        assert back.metadata["seed"] == 3
        assert back.metadata["stencil"] == st2.to_dict()


def test_load_model_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ValueError):
        load_model(p)
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(ValueError):
        load_model(p)
    p.write_text(json.dumps({"format": "sfomkit-model", "version": 1}))
    with pytest.raises(ValueError):
        load_model(p)


def test_assembly_checks():
    fm = FeatureMap("linear", 3)
    with pytest.raises(ValueError):
        assemble_per_dof([CoefficientVector(np.ones(3), fm)] * 4, Grid1D(n=5, dx=1.0),
                         build_stencil_1d(1, 1))
    with pytest.raises(ValueError):
        assemble_shared(CoefficientVector(np.ones(3), fm),
                        Grid1D(n=5, dx=1.0, periodic=False), build_stencil_1d(1, 1))


def test_average_error():
    ref = np.array([1.0, 2.0, 4.0])
    assert average_error(ref + 0.4, ref) == pytest.approx(10.0)
    assert average_error(-ref, -ref + 0.3, use_abs_max=True) == pytest.approx(0.3 / 3.7 * 100)
    with pytest.raises(ValueError):
        average_error(np.zeros(3), np.zeros(3))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(3, 200), density=st.floats(0.01, 0.3), seed=st.integers(0, 2**16))
def test_sparse_matvec_equals_dense(n, density, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    op = SparseLinearOperator(M)
    u = rng.standard_normal(n)
    assert np.max(np.abs(op.matvec(u) - M @ u)) <= 1e-12
    restored = SparseLinearOperator.from_dict(n, op.to_dict())
    assert np.array_equal(restored.toarray(), op.toarray())


def test_quadratic_operators():
    u = np.array([1.0, 2.0, 3.0])
    H = QuadraticHadamardOperator(np.eye(3))
    assert np.allclose(H.apply(u), u * u)
    P = PairQuadraticOperator([[0], [1], [0]], [[1], [2], [2]], [[1.0], [2.0], [0.5]])
    assert np.allclose(P.apply(u), [2.0, 12.0, 1.5])
