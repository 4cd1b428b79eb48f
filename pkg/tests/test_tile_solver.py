import dataclasses

import numpy as np
import pytest

from rispower.precoder import compute_sinr
from rispower.tile_solver import (DualState, To2Workspace, alpha_star,
                                  build_workspace, dual_function, grad_lambda,
                                  grad_mu, mse, optimal_receivers,
                                  regularity_check, solve_to2)
from rispower.tiles import GcQuadratics, effective_channels

from .conftest import complex_randn, random_workspace
from .oracles import central_diff, cvxpy_dual_value, cvxpy_to2


class TestOptimalReceivers:
    def test_zero_interference_closed_form(self):
        eff = np.array([[1.0 + 0j]])
        v = np.array([[1.0 + 0j]])
        g = optimal_receivers(eff, v, np.array([1.0]))
        assert np.isclose(g[0], 0.5)
        e = mse(g, eff, v, np.array([1.0]))
        assert np.isclose(e[0], 0.5)
        assert np.isclose(compute_sinr(v, eff, np.array([1.0]))[0], 1.0)

    def test_noise_limit(self, rng):
        eff = complex_randn(rng, (2, 3))
        v = complex_randn(rng, (3, 2))
        g = optimal_receivers(eff, v, np.array([1e12, 1e12]))
        assert np.max(np.abs(g)) < 1e-10
        e = mse(g, eff, v, np.array([1e12, 1e12]))
        assert np.allclose(e, 1.0, atol=1e-10)

    def test_mmse_identity(self, rng):
        for _ in range(20):
            eff = complex_randn(rng, (3, 4))
            v = complex_randn(rng, (4, 3))
            noise = rng.uniform(0.2, 2.0, 3)
            g = optimal_receivers(eff, v, noise)
            e = mse(g, eff, v, noise)
            sinr = compute_sinr(v, eff, noise)
            assert np.allclose(e, 1.0 / (1.0 + sinr), rtol=1e-12)


class TestMse:
    def test_trivial_estimator(self, rng):
        eff = complex_randn(rng, (2, 3))
        v = complex_randn(rng, (3, 2))
        e = mse(np.zeros(2, complex), eff, v, np.array([1.0, 1.0]))
        assert np.allclose(e, 1.0)

    def test_compact_equals_expanded(self):
        inst = random_workspace(7)
        eff = effective_channels(inst["alpha0"], inst["channels"], inst["cascaded"])
        compact = mse(inst["g"], eff, inst["v"], inst["noise"])
        expanded = inst["ws"].mse_values(inst["alpha0"])
        assert np.allclose(compact, expanded, rtol=1e-12)


def scalar_workspace(f=1.0, a=2.0, block=1.0, cap=1.0, eps=0.5, ridge=0.0):
    gc = GcQuadratics(blocks=np.array([[[block]]], complex),
                      elements_per_tile=int(cap))
    return To2Workspace(
        f=np.array([[f]], complex), a_mats=np.array([[[a]]], complex),
        const=np.array([1.0]), gc=gc, eps=np.array([eps]),
        power_cap=float(cap), ridge=ridge)


class TestAlphaStar:
    def test_zero_linear_term(self):
        inst = random_workspace(3)
        ws = dataclasses.replace(inst["ws"], f=np.zeros_like(inst["ws"].f))
        alpha = alpha_star(np.zeros(3), np.full(3, 0.1), ws)
        assert np.max(np.abs(alpha)) < 1e-12

    def test_scalar_division(self):
        ws = scalar_workspace(f=1.0, a=2.0, ridge=0.0)
        alpha = alpha_star(np.zeros(1), np.zeros(1), ws)
        assert np.isclose(alpha[0], 0.5)

    def test_lagrangian_stationarity(self):
        inst = random_workspace(11)
        ws = inst["ws"]
        rng = np.random.default_rng(0)
        lam = rng.uniform(0.1, 1.0, ws.n_users)
        mu = rng.uniform(0.1, 1.0, ws.gc.n_tiles)
        alpha = alpha_star(lam, mu, ws)
        n = ws.dim

        def lagrangian(z):
            a = z[:n] + 1j * z[n:]
            e = ws.mse_values(a)
            return float((1 + lam) @ e + mu @ ws.gc_values(a)
                         - lam @ ws.eps - ws.power_cap * np.sum(mu))

        grad = central_diff(lagrangian,
                            np.concatenate([alpha.real, alpha.imag]))
        assert np.max(np.abs(grad)) < 1e-9


class TestDualFunction:
    def test_multiplier_free_unconstrained_minimum(self):
        # K <= N_u keeps the summed curvature matrix positive definite
        inst = random_workspace(5, n_users=3, m=4, k=2, p=4)
        ws = inst["ws"]
        d = dual_function(np.zeros(3), np.zeros(2), ws)
        fbar = ws.f.sum(axis=0)
        a_sum = ws.a_mats.sum(axis=0)
        direct = (ws.const.sum()
                  - np.real(fbar @ np.linalg.solve(a_sum, fbar.conj())))
        assert abs(d - direct) < 1e-8

    def test_weak_duality(self):
        inst = random_workspace(9)
        ws = inst["ws"]
        alpha_feas = inst["alpha0"]
        assert np.all(ws.mse_values(alpha_feas) <= ws.eps + 1e-9)
        assert np.all(ws.gc_values(alpha_feas) <= ws.power_cap + 1e-9)
        primal_feas = float(np.sum(ws.mse_values(alpha_feas)))
        rng = np.random.default_rng(1)
        for _ in range(20):
            lam = rng.uniform(0, 2, ws.n_users)
            mu = rng.uniform(0, 2, ws.gc.n_tiles)
            assert dual_function(lam, mu, ws) <= primal_feas + 1e-9

    def test_matches_generic_convex_solver(self):
        inst = random_workspace(13, n_users=2, m=3, k=2, p=3)
        ws = inst["ws"]
        rng = np.random.default_rng(2)
        lam = rng.uniform(0.2, 1.0, 2)
        mu = rng.uniform(0.2, 1.0, 2)
        ours = dual_function(lam, mu, ws)
        ref = cvxpy_dual_value(ws, lam, mu)
        assert abs(ours - ref) < 1e-5 * max(1.0, abs(ref))


class TestDualGradients:
    def test_match_finite_differences(self):
        for seed in range(6):
            inst = random_workspace(100 + seed,
                                    n_users=int(2 + seed % 2),
                                    k=int(2 + (seed // 2) % 2), m=4, p=3)
            ws = inst["ws"]
            rng = np.random.default_rng(seed)
            lam = rng.uniform(0.1, 1.0, ws.n_users)
            mu = rng.uniform(0.1, 1.0, ws.gc.n_tiles)
            gl = grad_lambda(lam, mu, ws)
            gm = grad_mu(lam, mu, ws)
            fd_l = central_diff(lambda x: dual_function(x, mu, ws), lam)
            fd_m = central_diff(lambda x: dual_function(lam, x, ws), mu)
            assert np.max(np.abs(gl - fd_l) / np.maximum(np.abs(fd_l), 1e-9)) < 1e-6
            assert np.max(np.abs(gm - fd_m) / np.maximum(np.abs(fd_m), 1e-9)) < 1e-6

    def test_slack_mse_constraint_direction(self):
        inst = random_workspace(21)
        ws = dataclasses.replace(inst["ws"], eps=np.full(3, 10.0))
        lam = np.zeros(3)
        mu = np.full(3, 0.1)
        gl = grad_lambda(lam, mu, ws)
        e_vals = ws.mse_values(alpha_star(lam, mu, ws))
        assert np.allclose(gl, e_vals - ws.eps, atol=1e-6)
        assert np.all(gl < 0)

    def test_slack_gc_constraint_direction(self):
        inst = random_workspace(22)
        ws = inst["ws"]
        lam = np.full(3, 0.1)
        mu = np.full(3, 50.0)   # heavy penalty shrinks alpha far inside GC
        gm = grad_mu(lam, mu, ws)
        gc_vals = ws.gc_values(alpha_star(lam, mu, ws))
        assert np.allclose(gm, gc_vals - ws.power_cap, atol=1e-6)
        assert np.all(gm < 0)

    def test_duplicated_user_symmetry(self):
        inst = random_workspace(23, n_users=2, m=3, k=2, p=3)
        ws = inst["ws"]
        ws = dataclasses.replace(
            ws,
            f=np.stack([ws.f[0], ws.f[0]]),
            a_mats=np.stack([ws.a_mats[0], ws.a_mats[0]]),
            const=np.array([ws.const[0], ws.const[0]]),
            eps=np.array([ws.eps[0], ws.eps[0]]))
        lam = np.array([0.3, 0.3])
        mu = np.array([0.2, 0.5])
        gl = grad_lambda(lam, mu, ws)
        assert np.isclose(gl[0], gl[1], rtol=1e-10)

    def test_identical_tiles_symmetry(self):
        # permutation-invariant curvature and two identical tile blocks
        gc = GcQuadratics(blocks=np.array([[[3.0]], [[3.0]]], complex),
                          elements_per_tile=3)
        ws = To2Workspace(
            f=np.array([[1.0, 1.0]], complex),
            a_mats=np.array([np.eye(2)], dtype=complex),
            const=np.array([1.0]), gc=gc, eps=np.array([0.5]),
            power_cap=3.0, ridge=0.0)
        gm = grad_mu(np.array([0.2]), np.array([0.4, 0.4]), ws)
        assert np.isclose(gm[0], gm[1], rtol=1e-12)


class TestSolveTo2:
    def test_inactive_constraints_give_zero_multipliers(self):
        # both the MSE caps and the passivity budget left far from binding
        inst = random_workspace(31, n_users=3, m=4, k=2, p=4)
        ws = dataclasses.replace(inst["ws"], eps=np.full(3, 10.0),
                                 power_cap=1e6)
        alpha, state = solve_to2(ws)
        assert state.converged
        assert np.max(state.lam) < 1e-6
        assert np.max(state.mu) < 1e-4
        a_sum = ws.a_mats.sum(axis=0)
        unconstrained = np.linalg.solve(
            a_sum + ws.ridge * np.eye(ws.dim), ws.f.sum(axis=0).conj()).conj()
        assert np.max(np.abs(alpha - unconstrained)) < 1e-5

    def test_convergence_and_feasibility(self):
        for seed in (41, 42, 43):
            inst = random_workspace(seed)
            ws = inst["ws"]
            alpha, state = solve_to2(ws, max_iters=2000, anchor=inst["alpha0"])
            assert state.converged
            assert np.all(ws.mse_values(alpha) <= ws.eps + 1e-8)
            assert np.all(ws.gc_values(alpha) <= ws.power_cap * (1 + 1e-8))
            slack_l = state.lam * (ws.mse_values(alpha) - ws.eps)
            slack_m = state.mu * (ws.gc_values(alpha) - ws.power_cap)
            assert np.max(np.abs(slack_l)) < 1e-6
            assert np.max(np.abs(slack_m)) < 1e-6

    def test_dual_ascent_monotone(self):
        inst = random_workspace(44)
        _, state = solve_to2(inst["ws"], record_trace=True)
        duals = [row[1] for row in state.trace]
        assert all(b >= a - 1e-10 for a, b in zip(duals, duals[1:]))

    def test_matches_cvxpy_objective(self):
        for seed in (51, 52, 53):
            inst = random_workspace(seed, n_users=2, m=2, k=2, p=2)
            ws = inst["ws"]
            alpha, state = solve_to2(ws)
            ours = float(np.sum(ws.mse_values(alpha)))
            ref, _, _, _ = cvxpy_to2(ws)
            assert abs(ours - ref) < 1e-4 * max(1.0, abs(ref))

    def test_warm_start(self):
        inst = random_workspace(61)
        ws = inst["ws"]
        alpha, state = solve_to2(ws)
        alpha2, state2 = solve_to2(ws, warm=state)
        assert state2.n_iters <= max(2, state.n_iters)
        assert np.max(np.abs(alpha2 - alpha)) < 1e-5

    def test_iteration_cap_flags_nonconvergence(self):
        inst = random_workspace(62)
        _, state = solve_to2(inst["ws"], max_iters=1)
        assert not state.converged
        assert state.n_iters == 1


class TestRegularityCheck:
    def test_single_active_gc(self):
        inst = random_workspace(71)
        ws = inst["ws"]
        alpha = inst["alpha0"]
        report = regularity_check(alpha, ws, active_mse=[], active_gc=[0])
        assert report.independent
        assert report.rank == 1

    def test_duplicated_rows_dependent(self):
        inst = random_workspace(72)
        ws = inst["ws"]
        report = regularity_check(inst["alpha0"], ws, active_mse=[],
                                  active_gc=[0, 0])
        assert not report.independent
        assert report.rank == 1
        assert report.n_active == 2

    def test_no_active_constraints(self):
        inst = random_workspace(73)
        ws = dataclasses.replace(inst["ws"], eps=np.full(3, 100.0))
        alpha, _ = solve_to2(ws)
        report = regularity_check(alpha, ws, active_tol=1e-9)
        assert report.independent

    def test_converged_random_instances_regular(self):
        independent = 0
        total = 10
        for seed in range(total):
            inst = random_workspace(200 + seed)
            alpha, state = solve_to2(inst["ws"])
            report = regularity_check(alpha, inst["ws"])
            independent += int(report.independent)
        assert independent >= total - 1


def test_workspace_ridge_formula():
    inst = random_workspace(81)
    ws = inst["ws"]
    expected = 1e-10 * np.real(np.trace(ws.a_mats.sum(axis=0))) / ws.dim
    assert np.isclose(ws.ridge, expected)
