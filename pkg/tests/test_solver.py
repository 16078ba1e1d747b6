import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conjpair import (
    CompatibilityError,
    DegenerateFieldError,
    DistToPoint,
    InvalidParameterError,
    NonConvergenceError,
    SizeError,
    SolverConfig,
    alternating_pair_solve,
    assemble_det_form,
    assemble_stiffness,
    build_ball_mesh,
    build_cube_mesh,
    conjugate_of,
    dense_eig_oracle,
    dual_conjugate_of,
    residual_report,
    sample_w,
    solve_in_hw,
    solve_neumann,
)
from conjpair.fields import gradient_norms
from conjpair.mesh import element_gradients
from conjpair.solver import energy_angle, gradient_l2, pair_operators

POINT = (0.0, 0.0, -2.0)


def mean_adjusted(mesh, f):
    return mesh.remove_mean(f)


# -- solve_neumann ---------------------------------------------------------


def test_neumann_zero_rhs(cube4):
    K = assemble_stiffness(cube4)
    np.testing.assert_array_equal(solve_neumann(K, np.zeros(cube4.n_vertices)), 0.0)


def test_neumann_recovers_consistent_solution(cube4):
    K = assemble_stiffness(cube4)
    x = cube4.coordinate(1) - cube4.coordinate(1).mean()
    got = solve_neumann(K, K @ x)
    assert np.abs(got - x).max() <= 1e-10


def test_neumann_random_compatible_rhs(cube8, rng):
    K = assemble_stiffness(cube8)
    f = rng.standard_normal(cube8.n_vertices)
    f -= f.mean()
    x = solve_neumann(K, f, mass=cube8.nodal_mass)
    assert np.linalg.norm(K @ x - f) / np.linalg.norm(f) <= 1e-12
    assert abs(cube8.mean(x)) <= 1e-14


def test_neumann_incompatible(cube2):
    K = assemble_stiffness(cube2)
    with pytest.raises(CompatibilityError):
        solve_neumann(K, np.ones(cube2.n_vertices))


def test_neumann_stagnation_reports_residual(cube4, rng):
    K = assemble_stiffness(cube4)
    f = rng.standard_normal(cube4.n_vertices)
    f -= f.mean()
    with pytest.raises(NonConvergenceError) as info:
        solve_neumann(K, f, SolverConfig(cg_maxit=2))
    assert 0 < info.value.residual < 1


def test_solver_config_validation():
    for kw in ({"tol": 0}, {"cg_tol": -1}, {"maxit": 0}, {"mode": "bogus"}, {"cg_maxit": 0}, {"noise": -1}):
        with pytest.raises(InvalidParameterError):
            SolverConfig(**kw)


# -- conjugate solves --------------------------------------------------------


def test_conjugate_of_affine(cube4):
    u = conjugate_of(cube4, cube4.coordinate(2), cube4.coordinate(3))
    assert np.abs(u - mean_adjusted(cube4, cube4.coordinate(1))).max() <= 1e-10


def test_conjugate_of_scaled_w(cube4):
    u = conjugate_of(cube4, cube4.coordinate(2), 2 * cube4.coordinate(3))
    assert np.abs(u - mean_adjusted(cube4, 2 * cube4.coordinate(1))).max() <= 1e-10


def test_conjugate_of_on_ball_is_mean_zero(ball2, rng):
    w = sample_w(DistToPoint(POINT), ball2)
    u = conjugate_of(ball2, rng.standard_normal(ball2.n_vertices), w)
    assert abs(ball2.mean(u)) <= 1e-14


def test_dual_conjugate_of_affine(cube4):
    v = dual_conjugate_of(cube4, cube4.coordinate(1), cube4.coordinate(3))
    assert np.abs(v - mean_adjusted(cube4, cube4.coordinate(2))).max() <= 1e-10


def test_dual_conjugate_weighted(cube4):
    # (0,0,2) ^ (2,0,0) = (0,4,0) = |grad w|^2 (0,1,0)
    w = 2 * cube4.coordinate(3)
    d = gradient_norms(cube4, w) ** 2
    np.testing.assert_allclose(d, 4.0)
    v = dual_conjugate_of(cube4, 2 * cube4.coordinate(1), w, weight=d)
    assert np.abs(v - mean_adjusted(cube4, cube4.coordinate(2))).max() <= 1e-10


def test_dual_of_constant_is_zero(cube4):
    v = dual_conjugate_of(cube4, np.full(cube4.n_vertices, 3.0), cube4.coordinate(3))
    np.testing.assert_array_equal(v, 0.0)


def test_gamma_weights_conjugate(cube4):
    # weight 2 everywhere halves u
    u = conjugate_of(cube4, cube4.coordinate(2), cube4.coordinate(3), gamma=np.full(cube4.n_tets, 2.0))
    assert np.abs(u - 0.5 * mean_adjusted(cube4, cube4.coordinate(1))).max() <= 1e-10


def test_quadratic_pair_error_decreases():
    errs = []
    for n in (4, 8):
        mesh = build_cube_mesh(n)
        x = mesh.vertices
        u = conjugate_of(mesh, 2 * x[:, 0] * x[:, 1], x[:, 2])
        errs.append(gradient_l2(mesh, u - mesh.remove_mean(x[:, 0] ** 2 - x[:, 1] ** 2)))
    assert errs[1] < 0.5 * errs[0]


# -- alternating solve ---------------------------------------------------------


@pytest.fixture(scope="module")
def cube4_pair():
    mesh = build_cube_mesh(4)
    w = mesh.coordinate(3)
    return mesh, w, alternating_pair_solve(mesh, w)


@pytest.fixture(scope="module")
def ball2_pair():
    mesh = build_ball_mesh(2)
    w = sample_w(DistToPoint(POINT), mesh)
    return mesh, w, alternating_pair_solve(mesh, w)


def test_affine_pair_attains_bound(cube4_pair):
    mesh, w, rep = cube4_pair
    assert rep.converged
    assert abs(rep.mu - 1.0) <= 1e-8
    r1, r2 = rep.residual_history[-1]
    assert r1 <= 1e-6 and r2 <= 1e-6
    # the pair lies in the affine (x1, x2) plane: u and v are affine in x1, x2
    for f in (rep.u, rep.v):
        g = element_gradients(mesh, f)
        assert np.abs(g - g.mean(axis=0)).max() <= 1e-6
        assert np.abs(g[:, 2]).max() <= 1e-6


def test_mean_zero_and_unit_energy(ball2_pair):
    mesh, w, rep = ball2_pair
    assert abs(mesh.mean(rep.u)) <= 1e-13 and abs(mesh.mean(rep.v)) <= 1e-13
    ops = pair_operators(mesh, w)
    assert rep.u @ ops.Ka @ rep.u == pytest.approx(1.0, rel=1e-12)
    assert rep.v @ ops.Kd @ rep.v == pytest.approx(1.0, rel=1e-12)
    # Rayleigh estimate is the coupling of the normalised pair
    assert rep.u @ ops.B @ rep.v == pytest.approx(rep.mu, rel=1e-9)


def test_mu_below_gradient_bound(ball2_pair):
    mesh, w, rep = ball2_pair
    assert rep.converged
    assert rep.mu < 1.0
    assert max(rep.mu_history) <= gradient_norms(mesh, w).max() + 1e-10


def test_mu_and_energy_step_monotone(ball2_pair, cube4_pair):
    for _, _, rep in (ball2_pair, cube4_pair):
        assert np.all(np.diff(rep.mu_history) >= -1e-12)
        assert np.all(np.diff(rep.step_history) <= 1e-12)


def test_strong_residuals_nonincreasing_when_exact_pair_exists(cube4_pair):
    res = np.array(cube4_pair[2].residual_history)
    assert np.all(np.diff(res[1:], axis=0) <= 1e-12)


def test_strong_residual_settles_on_floor_without_exact_pair(ball2_pair):
    # for non-affine w the pointwise residual converges to a positive limit
    res = np.array(ball2_pair[2].residual_history)[:, 0]
    assert res[-1] > 0.05
    assert abs(res[-1] - res[-2]) <= 1e-8


def test_hadamard_bound_every_iterate(cube4_pair):
    _, _, rep = cube4_pair
    assert max(rep.mu_history) <= 1.0 + 1e-12


def test_mu_increases_under_refinement(ball2_pair):
    _, _, rep2 = ball2_pair
    mesh = build_ball_mesh(3)
    rep3 = alternating_pair_solve(mesh, sample_w(DistToPoint(POINT), mesh))
    assert rep3.converged and rep3.mu > rep2.mu


def test_orthogonality_emerges(ball2_pair, cube4_pair):
    for mesh, w, rep in (ball2_pair, cube4_pair):
        res = residual_report(mesh, rep.u, rep.v, w)
        assert res.orth <= 10 * res.r2 + 1e-9


def _same_up_to_sign(a, b, tol):
    return min(np.abs(a - b).max(), np.abs(a + b).max()) <= tol


@settings(max_examples=6, deadline=None)
@given(shift=st.floats(-100, 100), scale=st.floats(0.01, 100))
def test_shift_scale_invariance(shift, scale):
    mesh, w = _BALL, _BALL_W
    v0 = mesh.coordinate(2) + 1e-3 * np.random.default_rng(1).standard_normal(mesh.n_vertices)
    a = alternating_pair_solve(mesh, w, v0=v0)
    b = alternating_pair_solve(mesh, w, v0=scale * v0 + shift)
    assert _same_up_to_sign(a.u, b.u, 1e-9) and _same_up_to_sign(a.v, b.v, 1e-9)


_BALL = build_ball_mesh(1)
_BALL_W = sample_w(DistToPoint(POINT), _BALL)


def test_converged_pair_is_fixed_point(ball2_pair):
    mesh, w, rep = ball2_pair
    again = alternating_pair_solve(mesh, w, v0=rep.v)
    assert again.converged
    assert abs(again.mu_history[0] - rep.mu) <= 1e-10 * rep.mu
    assert again.iterations <= 2


def test_degenerate_start_restarts(cube4):
    w = cube4.coordinate(3)
    rep = alternating_pair_solve(cube4, w, v0=w.copy())
    assert rep.restarts == 1 and "restart" in rep.notes[0]
    assert rep.converged and abs(rep.mu - 1) <= 1e-8


def test_constant_w_gives_up_after_restarts(cube2):
    with pytest.raises(DegenerateFieldError):
        alternating_pair_solve(cube2, np.ones(cube2.n_vertices))


def test_non_convergence_is_reported(ball2):
    w = sample_w(DistToPoint(POINT), ball2)
    rep = alternating_pair_solve(ball2, w, cfg=SolverConfig(maxit=3))
    assert not rep.converged
    assert rep.iterations == 3
    assert any("no convergence" in n for n in rep.notes)


def test_report_serialises(cube4_pair):
    d = cube4_pair[2].to_dict()
    assert {"mu", "iterations", "converged", "residuals"} <= set(d)


def test_weighted_modes_run(cube4):
    w = cube4.coordinate(3)
    for mode in ("weighted_w2", "gamma_absw"):
        rep = alternating_pair_solve(cube4, 2 * w, mode=mode)
        assert rep.converged
    rep = alternating_pair_solve(cube4, w, mode="gamma", gamma=np.full(cube4.n_tets, 2.0))
    assert rep.converged and abs(rep.mu - 1) <= 1e-8


def test_laminate_gamma_pair_is_exact():
    # gamma = 2 for x1 < 1/2 and 1 elsewhere admits the exact pair u = x2,
    # v piecewise linear in x1 with slope -gamma
    mesh = build_cube_mesh(4)
    gamma = np.where(mesh.centroids[:, 0] < 0.5, 2.0, 1.0)
    rep = alternating_pair_solve(mesh, mesh.coordinate(3), mode="gamma", gamma=gamma)
    res = residual_report(mesh, rep.u, rep.v, mesh.coordinate(3), gamma, "gamma")
    assert rep.converged
    assert abs(rep.mu - 1) <= 1e-8
    assert res.r1 <= 1e-6 and res.r2 <= 1e-6


# -- dense oracle ------------------------------------------------------------


def test_oracle_matches_power_iteration(cube2):
    w = cube2.coordinate(3)
    ops = pair_operators(cube2, w)
    spec = dense_eig_oracle(ops.Ka, ops.Kd, ops.B)
    rep = alternating_pair_solve(cube2, w)
    assert abs(spec.top - rep.mu) <= 1e-8
    z = np.concatenate([rep.u, rep.v])
    assert energy_angle(ops.Ka, ops.Kd, z, spec.top_space()) <= 1e-6


def test_oracle_spectrum_symmetric(ball2):
    ops = pair_operators(ball2, sample_w(DistToPoint(POINT), ball2))
    lam = dense_eig_oracle(ops.Ka, ops.Kd, ops.B).eigenvalues
    np.testing.assert_allclose(np.sort(lam), np.sort(-lam), atol=1e-10)


def test_oracle_top_equals_generalized_singular_value(ball2):
    # independent route: largest singular value of La^{-1} B Ld^{-T}
    # with K = L L^T restricted to mean-zero vectors
    ops = pair_operators(ball2, sample_w(DistToPoint(POINT), ball2))
    n = ball2.n_vertices
    Q = sla.null_space(np.ones((1, n)))
    La = np.linalg.cholesky(Q.T @ ops.Ka.toarray() @ Q)
    Ld = np.linalg.cholesky(Q.T @ ops.Kd.toarray() @ Q)
    M = sla.solve_triangular(La, Q.T @ ops.B.toarray() @ Q, lower=True)
    M = sla.solve_triangular(Ld, M.T, lower=True).T
    sigma = np.linalg.svd(M, compute_uv=False)[0]
    assert dense_eig_oracle(ops.Ka, ops.Kd, ops.B).top == pytest.approx(sigma, rel=1e-10)


def test_oracle_constant_w(cube2):
    ops = pair_operators(cube2, np.full(cube2.n_vertices, 2.0))
    assert np.abs(dense_eig_oracle(ops.Ka, ops.Kd, ops.B).eigenvalues).max() <= 1e-14


def test_oracle_size_limit(cube4):
    ops = pair_operators(cube4, cube4.coordinate(3))
    with pytest.raises(SizeError):
        dense_eig_oracle(ops.Ka, ops.Kd, ops.B, max_dof=100)


# -- H_w restricted solves ------------------------------------------------------


def test_hw_reproduces_functions_of_w(cube4):
    w = cube4.coordinate(3)
    K = assemble_stiffness(cube4)
    target = np.sin(3 * w)
    sol = solve_in_hw(cube4, w, K, K @ target, bins=5, return_info=True)
    cross = np.cross(element_gradients(cube4, sol.values), element_gradients(cube4, w))
    assert np.sqrt((cross**2).sum(axis=1) @ cube4.volumes) / gradient_l2(cube4, sol.values) <= 1e-8
    np.testing.assert_allclose(sol.values, cube4.remove_mean(target), atol=1e-10)


def test_hw_zero_rhs(cube4):
    K = assemble_stiffness(cube4)
    np.testing.assert_array_equal(solve_in_hw(cube4, cube4.coordinate(3), K, np.zeros(cube4.n_vertices), 4), 0.0)


@pytest.mark.parametrize("bins,expected_rank", [(1, 1), (3, 3), (5, 5), (13, 5)])
def test_hw_dimension_and_deflation(cube4, bins, expected_rank):
    K = assemble_stiffness(cube4)
    sol = solve_in_hw(cube4, cube4.coordinate(3), K, np.zeros(cube4.n_vertices), bins, return_info=True)
    assert sol.deflated == bins - expected_rank
    assert sol.dimension == cube4.interior_nodes.size + bins - sol.deflated


def test_hw_boundary_values_are_functions_of_w(cube4, rng):
    w = cube4.coordinate(3)
    K = assemble_stiffness(cube4)
    f = rng.standard_normal(cube4.n_vertices)
    f -= f.mean()
    v = solve_in_hw(cube4, w, K, f, bins=5)
    b = cube4.boundary_nodes
    for level in np.unique(w[b]):
        vals = v[b][w[b] == level]
        assert np.ptp(vals) <= 1e-12


def test_hw_rejects_zero_bins(cube2):
    with pytest.raises(InvalidParameterError):
        solve_in_hw(cube2, cube2.coordinate(3), assemble_stiffness(cube2), np.zeros(cube2.n_vertices), 0)


def test_det_form_used_by_pair_operators(cube2):
    ops = pair_operators(cube2, cube2.coordinate(3))
    assert abs(ops.B - assemble_det_form(cube2, cube2.coordinate(3))).max() == 0.0
