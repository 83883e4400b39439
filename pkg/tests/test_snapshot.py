import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfomkit.manufactured import DiffusionConfig, SnapshotSet, diffusion_analytic
from sfomkit.mesh import Grid1D, build_stencil_1d, support_set
from sfomkit.snapshot import (
    AugmentationPlan,
    FeatureKind,
    FeatureMap,
    assemble_local,
    augment,
    feature_matrix,
    feature_vector,
    sample_augmentation_indices,
    stack_problems,
)


def test_feature_dimensions():
    assert FeatureMap(FeatureKind.LINEAR, 3).dim == 3
    assert FeatureMap(FeatureKind.LINEAR_HADAMARD_QUADRATIC, 25).dim == 50
    assert FeatureMap(FeatureKind.LINEAR_QUADRATIC_CONSTANT, 3).dim == 3 + 6 + 1


def test_feature_vectors_by_hand():
    u = np.array([1.0, 2.0, 3.0])
    had = feature_vector(u, 2.0, FeatureMap("linear_hadamard_quadratic", 3))
    assert np.array_equal(had, [1, 2, 3, 2, 4, 6])
    full = feature_vector(u, 2.0, FeatureMap("linear_quadratic_constant", 3))
    assert np.array_equal(full, [1, 2, 3, 1, 2, 3, 4, 6, 9, 1])


def test_block_weights():
    fm = FeatureMap(FeatureKind.LINEAR_QUADRATIC_CONSTANT, 2)
    assert np.array_equal(fm.block_weights(10.0), [1, 1, 10, 10, 10, 1])


def test_feature_width_mismatch():
    with pytest.raises(ValueError):
        feature_matrix(np.ones((4, 2)), np.ones(4), FeatureMap(FeatureKind.LINEAR, 3))


def _diffusion_snap(dx=0.24, dt=0.01, T=1.0):
    g = Grid1D.covering(-np.pi, np.pi, dx)
    return diffusion_analytic(g, DiffusionConfig(dx=dx, dt=dt, T=T))


def test_local_problem_rows_and_targets():
    snap = _diffusion_snap()
    s = build_stencil_1d(1, 1)
    prob = assemble_local(snap, 4, support_set(snap.grid, 4, s), FeatureMap("linear", 3))
    assert prob.shape == (snap.num_steps, 3)
    assert np.array_equal(prob.D[:, 1], snap.states[4, :-1])
    assert np.array_equal(prob.d, snap.states[4, 1:])


def test_diffusion_local_matrix_is_rank_one():
    snap = _diffusion_snap()
    s = build_stencil_1d(1, 1)
    prob = assemble_local(snap, 11, support_set(snap.grid, 11, s), FeatureMap("linear", 3))
    sv = np.linalg.svd(prob.D, compute_uv=False)
    assert sv[1] < 1e-12 * sv[0]
    xq = snap.grid.coordinates[[10, 11, 12]]
    expected = np.sum(np.exp(-2 * snap.times[:-1])) * np.sum(np.cos(xq) ** 2)
    assert sv[0] ** 2 == pytest.approx(expected, rel=1e-12)


def test_sampling_fraction_and_seed():
    p = sample_augmentation_indices(27, fraction=0.05, seed=0)
    assert len(p.indices) == 1
    assert p.indices == sample_augmentation_indices(27, fraction=0.05, seed=0).indices
    assert len(sample_augmentation_indices(2500, count=500, seed=0).indices) == 500
    with pytest.raises(ValueError):
        sample_augmentation_indices(10, count=3, fraction=0.1)
    with pytest.raises(ValueError):
        sample_augmentation_indices(10, count=11)


def test_augmented_stacking_order():
    snap = _diffusion_snap()
    s = build_stencil_1d(1, 1)
    fm = FeatureMap("linear", 3)
    plan = AugmentationPlan(indices=(3, 9))
    prob = augment(snap, plan, s, fm)
    N = snap.num_steps
    assert prob.shape == (2 * N, 3)
    a = assemble_local(snap, 3, support_set(snap.grid, 3, s), fm)
    b = assemble_local(snap, 9, support_set(snap.grid, 9, s), fm)
    both = stack_problems([a, b])
    assert np.array_equal(prob.D, both.D) and np.array_equal(prob.d, both.d)
    assert prob.centers == (3, 9)


def test_augment_rejects_bad_plans():
    snap = _diffusion_snap()
    with pytest.raises(ValueError):
        AugmentationPlan(indices=(1, 1))
    with pytest.raises(IndexError):
        augment(snap, AugmentationPlan(indices=(99,)), build_stencil_1d(1, 1),
                FeatureMap("linear", 3))
    with pytest.raises(ValueError):
        augment(snap, AugmentationPlan(indices=(1,)), build_stencil_1d(1, 1),
                FeatureMap("linear", 5))


@settings(max_examples=40, deadline=None)
@given(r=st.integers(1, 6), rows=st.integers(1, 5),
       kind=st.sampled_from(list(FeatureKind)), seed=st.integers(0, 2**16))
def test_feature_matrix_rowwise(r, rows, kind, seed):
    rng = np.random.default_rng(seed)
    UQ = rng.standard_normal((rows, r))
    ctr = rng.standard_normal(rows)
    fm = FeatureMap(kind, r)
    F = feature_matrix(UQ, ctr, fm)
    assert F.shape == (rows, fm.dim)
    for k in range(rows):
        assert np.array_equal(F[k], feature_vector(UQ[k], ctr[k], fm))
    assert np.array_equal(F[:, fm.blocks["linear"]], UQ)
