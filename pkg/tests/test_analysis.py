import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfomkit.analysis import (
    NearSingularWarning,
    TaylorDataCoeffs,
    circulant_eigenvalues,
    consistency_sum,
    diffusion_closed_form_beta,
    diffusion_taylor_beta,
    gershgorin_check,
    sampling_cfl_bound,
    series_from_snapshots,
    spectral_radius,
    sufficient_stability_check,
    taylor_data_coeffs,
    taylor_first_order_beta,
    taylor_geometry,
)
from sfomkit.exceptions import DegenerateDataError, StencilError
from sfomkit.manufactured import (
    AdvectionConfig,
    advection_analytic,
    advection_derivatives,
    diffusion_derivatives,
)
from sfomkit.mesh import Grid1D, Grid2D, build_block_stencil_2d, build_stencil_1d
from sfomkit.sfom import DiscreteModel, QuadraticHadamardOperator, SparseLinearOperator, assemble_shared
from sfomkit.snapshot import FeatureMap
from sfomkit.solver import CoefficientVector


def test_diffusion_taylor_at_origin():
    beta, l1 = diffusion_taylor_beta(0.0, 1.0, 0.01, 0.24)
    assert np.allclose(beta.values, 0.33)
    assert l1 == pytest.approx(0.99)


def test_diffusion_taylor_near_singular_warns():
    with pytest.warns(NearSingularWarning):
        diffusion_taylor_beta(np.pi / 2, 1.0, 0.01, 0.1)


def test_diffusion_taylor_always_sufficiently_stable():
    for x in np.linspace(-3.0, 3.0, 41):
        if abs(np.cos(x)) < 1e-3:
            continue
        _, l1 = diffusion_taylor_beta(x, 1.0, 0.01, 0.05)
        assert l1 <= 1.0


def test_closed_form_taylor_agreement():
    # second-order agreement of the exact and the approximate coefficients
    x, dx, dt = 0.4, 1e-3, 1e-4
    exact = diffusion_closed_form_beta([x - dx, x, x + dx], x, 1.0, dt).values
    approx, _ = diffusion_taylor_beta(x, 1.0, dt, dx)
    assert np.allclose(exact, approx.values, atol=5e-6)


def test_consistency_sum():
    b = CoefficientVector([0.2, 0.5, 0.3, 9.0], FeatureMap("linear_hadamard_quadratic", 2))
    assert consistency_sum(b) == pytest.approx(0.7)
    assert consistency_sum(np.array([0.4, 0.2, 0.4])) == pytest.approx(1.0)


def test_taylor_geometry_moments():
    g = taylor_geometry(1, 1)
    assert (g.c1, g.c2, g.c3) == (3.0, 2.0, 0.0)
    g = taylor_geometry(0, 2)
    assert (g.c1, g.c2, g.c3) == (3.0, 5.0, 3.0)
    assert g.det == pytest.approx(6.0)
    j = np.arange(-2, 4)
    g = taylor_geometry(2, 3)
    assert (g.c1, g.c2, g.c3) == (j.size, float(np.sum(j**2)), float(np.sum(j)))
    with pytest.raises(StencilError):
        taylor_geometry(0, 0)


def _advection_coeffs(x, dt, N, c=1.0):
    u, ux, ut = advection_derivatives(x, dt * np.arange(N), c=c)
    return taylor_data_coeffs(u, ux, ut)


def test_taylor_advection_l1_by_hand():
    # exact transport data: g = c d and e = c b so K1 = c2 det, K2 = c1 det c dt/dx
    dx, dt = 0.01, 0.004
    tb = taylor_first_order_beta(taylor_geometry(1, 1), _advection_coeffs(0.3, dt, 500),
                                 dx, dt)
    lam = dt / dx
    assert np.allclose(tb.values, [(2 - 3 * lam) / 6, 2 / 6, (2 + 3 * lam) / 6])
    assert np.sum(tb.values) == pytest.approx(1.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_taylor_flips_at_sampling_bound(m):
    bound = sampling_cfl_bound(m, 1.0)
    geom = taylor_geometry(m, m)
    dx = 0.005
    for ratio, expect in ((0.98 * bound, True), (bound, True), (1.02 * bound, False)):
        dt = ratio * dx
        tb = taylor_first_order_beta(geom, _advection_coeffs(-0.2, dt, 400), dx, dt)
        assert sufficient_stability_check(tb) is expect


def test_taylor_degenerate_for_separable_decay():
    u, ux, ut = diffusion_derivatives(0.3, np.linspace(0, 1, 50), 1.0)
    with pytest.raises(DegenerateDataError):
        taylor_first_order_beta(taylor_geometry(1, 1), taylor_data_coeffs(u, ux, ut),
                                0.1, 0.01)


def test_series_from_snapshots_close_to_exact():
    g = Grid1D.periodic_interval(-1.0, 1.0, 400)
    snap = advection_analytic(g, AdvectionConfig(dt=1e-4, T=0.05))
    u, ux, ut = series_from_snapshots(snap, 17)
    ue, uxe, ute = advection_derivatives(g.coordinate(17), snap.times[:-1])
    assert np.allclose(u, ue)
    assert np.max(np.abs(ux - uxe)) < 1e-3 * np.pi
    assert np.max(np.abs(ut - ute)) < 1e-3 * np.pi


def test_sampling_bound_values():
    assert sampling_cfl_bound(1, 1.0) == pytest.approx(2 / 3)
    assert sampling_cfl_bound(2, 1.0) == pytest.approx(1.0)
    assert sampling_cfl_bound(2, 2.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sampling_cfl_bound(1, 0.0)


def test_report_ftcs_boundary_case():
    n, r = 40, 0.4
    beta = CoefficientVector([r, 1 - 2 * r, r], FeatureMap("linear", 3))
    m = assemble_shared(beta, Grid1D(n=n, dx=1.0), build_stencil_1d(1, 1))
    rep = spectral_radius(m, mode="dense")
    assert np.allclose(rep.row_l1_norms, 1.0)
    assert rep.sufficient_stable and rep.stable
    assert rep.spectral_radius == pytest.approx(1.0, abs=1e-12)
    theta = 2 * np.pi * np.arange(n) / n
    expected = np.sort(1 - 2 * r * (1 - np.cos(theta)))
    assert np.allclose(np.sort(rep.eigenvalues.real), expected)


def test_report_scaled_identity_and_shift():
    rep = spectral_radius(0.9 * np.eye(5))
    assert rep.sufficient_stable and rep.stable and rep.spectral_radius == pytest.approx(0.9)
    shift = np.roll(np.eye(6), 1, axis=1)
    rep = spectral_radius(shift)
    assert rep.max_row_l1 == pytest.approx(1.0)
    assert rep.spectral_radius == pytest.approx(1.0)


def test_gershgorin_is_not_necessary():
    # row norm 1.5 but both eigenvalues 0.5
    M = np.array([[0.5, 1.0], [0.0, 0.5]])
    rep = spectral_radius(M)
    assert not rep.sufficient_stable and rep.stable


def test_power_mode_real_and_complex():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((30, 30)))
    M = Q @ np.diag(np.linspace(0.1, 0.95, 30)) @ Q.T
    assert spectral_radius(M, mode="power").spectral_radius == pytest.approx(0.95, rel=1e-6)
    rot = 0.8 * np.array([[np.cos(0.7), -np.sin(0.7)], [np.sin(0.7), np.cos(0.7)]])
    big = np.zeros((6, 6))
    big[:2, :2] = rot
    big[2:, 2:] = 0.3 * np.eye(4)
    rep = spectral_radius(big, mode="power")
    assert rep.spectral_radius == pytest.approx(0.8, rel=1e-6) and rep.converged


def test_spectral_radius_warns_on_quadratic_model():
    op = SparseLinearOperator(0.5 * np.eye(4))
    m = DiscreteModel(A=op, H=QuadraticHadamardOperator(np.eye(4)))
    with pytest.warns(UserWarning):
        rep = gershgorin_check(m)
    assert rep.notes


def test_circulant_eigenvalues_match_dense():
    rng = np.random.default_rng(5)
    g1 = Grid1D(n=12, dx=1.0)
    s1 = build_stencil_1d(2, 1)
    b1 = rng.standard_normal(4)
    m1 = assemble_shared(CoefficientVector(b1, FeatureMap("linear", 4)), g1, s1)
    ev = np.linalg.eigvals(m1.A.toarray())
    fft = circulant_eigenvalues(b1, g1, s1)
    assert np.max(np.min(np.abs(fft[:, None] - ev[None, :]), axis=1)) < 1e-10
    g2 = Grid2D(nx=7, ny=6, dx=0.1, dy=0.1)
    s2 = build_block_stencil_2d(1)
    b2 = rng.standard_normal(9)
    m2 = assemble_shared(CoefficientVector(b2, FeatureMap("linear", 9)), g2, s2)
    ev2 = np.linalg.eigvals(m2.A.toarray())
    assert np.max(np.abs(circulant_eigenvalues(b2, g2, s2))) == pytest.approx(
        np.max(np.abs(ev2)))


def test_report_json_round_trip():
    rep = spectral_radius(np.array([[0.0, -0.5], [0.5, 0.0]]))
    data = json.loads(rep.to_json())
    assert data["spectral_radius"] == pytest.approx(0.5)
    assert np.allclose(sorted(tuple(e) for e in data["eigenvalues"]), [(0.0, -0.5), (0.0, 0.5)])


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.1, 10), b=st.floats(0.1, 10), rho=st.floats(-0.9, 0.9),
       g=st.floats(-5, 5), e=st.floats(-5, 5), s=st.floats(1e-3, 1e3),
       m=st.integers(0, 3), l=st.integers(1, 3))
def test_taylor_scale_invariance(a, b, rho, g, e, s, m, l):
    d = rho * np.sqrt(a * b)
    coeffs = TaylorDataCoeffs(a=a, b=b, d=d, g=g, e=e)
    geom = taylor_geometry(m, l)
    base = taylor_first_order_beta(geom, coeffs, 0.01, 0.002).values
    scaled = taylor_first_order_beta(geom, coeffs.scaled(s), 0.01, 0.002).values
    assert np.allclose(base, scaled, rtol=1e-9, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**16))
def test_gershgorin_soundness(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.3)
    norms = np.abs(M).sum(axis=1)
    M = M / max(norms.max(), 1e-12) * rng.uniform(0.2, 1.0)
    rep = spectral_radius(M, mode="dense")
    if rep.sufficient_stable:
        assert rep.spectral_radius <= 1.0 + 1e-8
