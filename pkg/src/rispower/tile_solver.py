"""Tile-configuration solve in the Lagrangian dual domain.

The subproblem minimizes the sum of per-user MSEs over the combination
coefficients alpha, subject to per-user MSE caps and per-tile passivity
quadratics.  For fixed nonnegative multipliers (lam, mu) the inner minimizer
alpha*(lam, mu) is available in closed form, as are the dual function and its
gradients, so the dual is maximized by projected gradient ascent with halving
backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalFailureError
from .tiles import GcQuadratics


def optimal_receivers(eff_channels: np.ndarray, V: np.ndarray,
                      noise_w: np.ndarray) -> np.ndarray:
    """MMSE scalar receive coefficients g_i = h_i v_i / (sum_j |h_i v_j|^2 + s_i^2)."""
    prods = eff_channels @ V                       # (N_u, N_u): h_i v_j
    denom = np.sum(np.abs(prods) ** 2, axis=1) + np.asarray(noise_w)
    return np.diag(prods) / denom


def mse(g: np.ndarray, eff_channels: np.ndarray, V: np.ndarray,
        noise_w: np.ndarray) -> np.ndarray:
    """Per-user MSE of the scaled estimate, 1 + |g|^2 (sum_j |h v_j|^2 + s^2) - 2Re[g^H h v]."""
    prods = eff_channels @ V
    total = np.sum(np.abs(prods) ** 2, axis=1) + np.asarray(noise_w)
    return np.real(1.0 + np.abs(g) ** 2 * total
                   - 2.0 * np.real(np.conj(g) * np.diag(prods)))


@dataclass(frozen=True)
class To2Workspace:
    """Per-instance constants of the dual solve.

    The per-user MSE is the quadratic E_i(alpha) = const_i - 2 Re[alpha f_i^H]
    + alpha A_i alpha^H with A_i Hermitian PSD; the passivity forms live in
    ``gc``.  ``eps`` holds the MSE caps actually enforced and ``power_cap``
    the per-tile passivity budget (the tile element count).
    """

    f: np.ndarray          # (N_u, N)
    a_mats: np.ndarray     # (N_u, N, N)
    const: np.ndarray      # (N_u,)
    gc: GcQuadratics
    eps: np.ndarray        # (N_u,)
    power_cap: float
    ridge: float

    @property
    def n_users(self) -> int:
        return self.f.shape[0]

    @property
    def dim(self) -> int:
        return self.f.shape[1]

    def mse_values(self, alpha: np.ndarray) -> np.ndarray:
        """E_i(alpha) in the expanded quadratic form, shape (N_u,)."""
        lin = np.real(alpha @ self.f.conj().T)
        a_alpha = np.einsum("n,inm->im", alpha, self.a_mats)
        quad = np.real(a_alpha @ alpha.conj())
        return self.const - 2.0 * lin + quad

    def gc_values(self, alpha: np.ndarray) -> np.ndarray:
        return self.gc.values(alpha)


def build_workspace(direct: np.ndarray, cascaded: np.ndarray, gc: GcQuadratics,
                    V: np.ndarray, g: np.ndarray, noise_w: np.ndarray,
                    mse_caps: np.ndarray, ridge_scale: float = 1e-10) -> To2Workspace:
    """Assemble the dual-solve constants for fixed (V, g, channels)."""
    n_users = direct.shape[0]
    t_mat = V @ V.conj().T
    f = np.empty((n_users, cascaded.shape[1]), complex)
    a_mats = np.empty((n_users, cascaded.shape[1], cascaded.shape[1]), complex)
    const = np.empty(n_users)
    for i in range(n_users):
        ht = cascaded[i]                           # (N, M)
        gi = g[i]
        ht_h = ht.conj().T
        f[i] = gi * np.conj(ht @ V[:, i]) - np.abs(gi) ** 2 * (direct[i] @ t_mat) @ ht_h
        a_i = np.abs(gi) ** 2 * (ht @ t_mat) @ ht_h
        a_mats[i] = 0.5 * (a_i + a_i.conj().T)
        const[i] = np.real(
            1.0
            - 2.0 * np.real(np.conj(gi) * (direct[i] @ V[:, i]))
            + np.abs(gi) ** 2 * (np.real(direct[i] @ t_mat @ direct[i].conj()) + noise_w[i])
        )
    n = cascaded.shape[1]
    ridge = ridge_scale * np.real(np.trace(a_mats.sum(axis=0))) / n
    return To2Workspace(
        f=f, a_mats=a_mats, const=const, gc=gc,
        eps=np.asarray(mse_caps, float), power_cap=float(gc.elements_per_tile),
        ridge=float(ridge),
    )


@dataclass(frozen=True)
class DualEval:
    """Everything the ascent loop needs at one multiplier point."""

    alpha: np.ndarray
    dual_value: float
    primal_value: float
    gap: float              # |primal - dual| / max(1, |primal|)
    grad_lam: np.ndarray
    grad_mu: np.ndarray
    mse: np.ndarray
    gc: np.ndarray


def _evaluate(lam: np.ndarray, mu: np.ndarray, ws: To2Workspace) -> DualEval:
    """Closed-form inner minimizer, dual value and dual gradients.

    The gradients keep the d(alpha)/d(multiplier) terms (computed through the
    matrix-inverse derivative identity) so that they are the exact gradients
    of the ridge-regularized dual, which is what finite differences of
    ``dual_function`` see.
    """
    weights = 1.0 + lam
    n_users, n_tiles = ws.n_users, ws.gc.n_tiles
    x_mat = np.tensordot(weights, ws.a_mats, axes=1)
    idx = np.arange(n_tiles)
    x_mat.reshape(n_tiles, n_users, n_tiles, n_users)[idx, :, idx, :] += \
        np.asarray(mu)[:, None, None] * ws.gc.blocks
    x_mat[np.diag_indices_from(x_mat)] += ws.ridge
    try:
        factor = scipy.linalg.cho_factor(x_mat, lower=False, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailureError(
            "tile solve: stationary-point system singular despite ridge") from exc

    fbar = weights @ ws.f                          # (N,)
    alpha = scipy.linalg.cho_solve(factor, fbar.conj(), check_finite=False).conj()

    # alpha A_i rows feed the MSE values, the sensitivities and (conjugated,
    # A_i Hermitian) the stationarity direction, so compute them once
    a_alpha_rows = np.matmul(alpha, ws.a_mats)     # (N_u, N): alpha A_l
    e_vals = (ws.const - 2.0 * np.real(alpha @ ws.f.conj().T)
              + np.real(a_alpha_rows @ alpha.conj()))
    gc_vals = ws.gc_values(alpha)
    dual = float(weights @ e_vals + mu @ gc_vals
                 - lam @ ws.eps - ws.power_cap * np.sum(mu))
    primal = float(np.sum(e_vals))

    # multiplier sensitivities of alpha: rows (f_l - alpha A_l) X^-1 and
    # -(alpha Q_r) X^-1 (X Hermitian: solve against the conjugated rows)
    q_rows = ws.gc.block_mult(alpha)                          # (K, N): alpha Q_r
    rhs = np.concatenate([ws.f - a_alpha_rows, q_rows], axis=0).conj().T
    sol = scipy.linalg.cho_solve(factor, rhs, check_finite=False).conj().T
    d_rows = sol[:n_users]
    r_rows = -sol[n_users:]

    # stationarity defect direction: sum_i w_i (A_i alpha^H - f_i^H) + Pi alpha^H
    gamma = weights @ (a_alpha_rows.conj() - ws.f.conj())
    mu_q_alpha = np.asarray(mu) @ q_rows           # alpha Pi as a row
    gamma = gamma + mu_q_alpha.conj()

    grad_lam = e_vals - ws.eps + 2.0 * np.real(d_rows @ gamma)
    grad_mu = gc_vals - ws.power_cap + 2.0 * np.real(r_rows @ gamma)

    gap = abs(primal - dual) / max(1.0, abs(primal))
    return DualEval(alpha=alpha, dual_value=dual, primal_value=primal, gap=gap,
                    grad_lam=grad_lam, grad_mu=grad_mu, mse=e_vals, gc=gc_vals)


def alpha_star(lam: np.ndarray, mu: np.ndarray, ws: To2Workspace) -> np.ndarray:
    """Inner minimizer alpha*(lam, mu) of the Lagrangian."""
    return _evaluate(np.asarray(lam, float), np.asarray(mu, float), ws).alpha


def dual_function(lam: np.ndarray, mu: np.ndarray, ws: To2Workspace) -> float:
    return _evaluate(np.asarray(lam, float), np.asarray(mu, float), ws).dual_value


def grad_lambda(lam: np.ndarray, mu: np.ndarray, ws: To2Workspace) -> np.ndarray:
    return _evaluate(np.asarray(lam, float), np.asarray(mu, float), ws).grad_lam


def grad_mu(lam: np.ndarray, mu: np.ndarray, ws: To2Workspace) -> np.ndarray:
    return _evaluate(np.asarray(lam, float), np.asarray(mu, float), ws).grad_mu


@dataclass(frozen=True)
class DualState:
    lam: np.ndarray
    mu: np.ndarray
    dual_value: float
    gap: float
    converged: bool
    n_iters: int
    caps_raised: bool = False
    trace: tuple = field(default=())   # optional per-iteration records


GAM_TRACE_COLUMNS = ("iteration", "dual_value", "gap", "lam_norm", "mu_norm")


def _repair_feasibility(alpha: np.ndarray, ws: To2Workspace, anchor):
    """Clean up the float-level constraint violations of a dual solution.

    The ascent certifies optimality through dual-value differences, whose
    float64 resolution leaves active constraints satisfied only to roughly
    the square root of machine precision.  Per-tile downscaling restores the
    passivity constraints exactly; a bisection toward a feasible ``anchor``
    (kept feasible for both families by construction at the call sites)
    removes any remaining MSE overshoot at negligible objective cost.
    """
    vals = ws.gc_values(alpha)
    over = vals > ws.power_cap
    if np.any(over):
        scale = np.where(over, np.sqrt(ws.power_cap / np.maximum(vals, 1e-300)), 1.0)
        alpha = (alpha.reshape(ws.gc.n_tiles, ws.gc.n_users)
                 * scale[:, None]).reshape(-1)
    if anchor is not None:
        viol = np.max(ws.mse_values(alpha) - ws.eps)
        if viol > 0 and np.max(ws.mse_values(anchor) - ws.eps) <= 1e-12:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                cand = alpha + mid * (anchor - alpha)
                if np.max(ws.mse_values(cand) - ws.eps) > 1e-12:
                    lo = mid
                else:
                    hi = mid
            alpha = alpha + hi * (anchor - alpha)
    return alpha


def solve_to2(ws: To2Workspace, *, step: float = 1e-2, epsilon: float = 1e-6,
              gap_epsilon: float = 1e-8, max_iters: int = 2000,
              warm: DualState | None = None, anchor: np.ndarray | None = None,
              caps_raised: bool = False, record_trace: bool = False):
    """Maximize the dual by projected gradient ascent; return (alpha, DualState).

    One iteration updates the MSE multipliers and then the passivity
    multipliers, each with its own step size seeded at ``step``: a move that
    decreases the dual value is rejected and retried with the step halved,
    while accepted moves let the step double.  The two blocks need independent
    steps because their curvatures differ by orders of magnitude (the
    passivity block additionally walks normalized-constraint units, i.e. the
    effective multiplier is P*mu).

    Stops on a closed primal-dual gap, on small relative multiplier change, or
    when the dual value hits its float64 resolution (a stall; still reported
    as converged when the remaining gap is at the numerical floor).  At the
    iteration cap the best iterate is returned with ``converged=False``.
    ``anchor``, when given, must be feasible; it is used to clean up
    float-level constraint overshoot in the returned coefficients.
    """
    n_users, n_tiles = ws.n_users, ws.gc.n_tiles
    if warm is not None:
        lam = np.maximum(np.asarray(warm.lam, float).copy(), 0.0)
        mu = np.maximum(np.asarray(warm.mu, float).copy(), 1e-12)
    else:
        lam = np.zeros(n_users)
        mu = np.full(n_tiles, 1e-6)   # strictly positive keeps the system well posed

    cap = ws.power_cap
    ev = _evaluate(lam, mu, ws)
    d_lam_step = d_mu_step = step
    trace = []
    converged = False
    n_done = 0
    d_best = ev.dual_value
    stall = 0

    def try_block(vec, grad, delta, other_update):
        """Backtracking update of one multiplier block; returns new state."""
        nonlocal ev
        for _ in range(60):
            vec_new = np.maximum(vec + delta * grad, 0.0)
            if np.array_equal(vec_new, vec):
                return vec, delta, False
            ev_new = _evaluate(*other_update(vec_new), ws)
            if ev_new.dual_value >= ev.dual_value - 1e-12 * max(1.0, abs(ev.dual_value)):
                ev = ev_new
                return vec_new, delta, True
            delta *= 0.5
        return vec, delta, False

    for n in range(1, max_iters + 1):
        lam_prev, mu_prev = lam, mu
        lam, d_lam_step, moved_l = try_block(
            lam, ev.grad_lam, d_lam_step, lambda v: (v, mu))
        mu, d_mu_step, moved_m = try_block(
            mu, ev.grad_mu / cap ** 2, d_mu_step, lambda v: (lam, v))
        n_done = n
        if record_trace:
            trace.append((n, ev.dual_value, ev.gap,
                          float(np.linalg.norm(lam)), float(np.linalg.norm(mu))))
        if ev.gap <= gap_epsilon:
            converged = True
            break
        rel_l = np.linalg.norm(lam - lam_prev) / max(np.linalg.norm(lam_prev), 1e-30)
        rel_m = np.linalg.norm(mu - mu_prev) / max(np.linalg.norm(mu_prev), 1e-30)
        if n > 1 and max(rel_l, rel_m) <= epsilon:
            converged = True
            break
        if not moved_l and not moved_m:
            converged = ev.gap <= 1e-5
            break
        # accepted ties can cycle at the accuracy floor; stop once the dual
        # value has not genuinely improved for a stretch of iterations
        if ev.dual_value > d_best + 1e-12 * max(1.0, abs(d_best)):
            d_best = ev.dual_value
            stall = 0
        else:
            stall += 1
            if stall >= 15:
                converged = ev.gap <= 1e-5
                break
        d_lam_step = min(d_lam_step * 2.0, 1e8)
        d_mu_step = min(d_mu_step * 2.0, 1e8)

    alpha = _repair_feasibility(ev.alpha, ws, anchor)
    primal = float(np.sum(ws.mse_values(alpha)))
    gap = abs(primal - ev.dual_value) / max(1.0, abs(primal))
    state = DualState(
        lam=lam, mu=mu, dual_value=ev.dual_value, gap=gap,
        converged=converged, n_iters=n_done, caps_raised=caps_raised,
        trace=tuple(trace),
    )
    return alpha, state


@dataclass(frozen=True)
class RegularityReport:
    rank: int
    n_active: int
    independent: bool


def regularity_check(alpha: np.ndarray, ws: To2Workspace,
                     active_mse=None, active_gc=None,
                     active_tol: float = 1e-6) -> RegularityReport:
    """Numerical rank of the active-constraint gradients at a solution.

    MSE gradients are -f_i + alpha A_i, passivity gradients alpha Q_k; each
    complex row is split into its real and imaginary parts before the rank is
    measured (singular values above 1e-8 of the largest).
    """
    e_vals = ws.mse_values(alpha)
    gc_vals = ws.gc_values(alpha)
    if active_mse is None:
        active_mse = np.nonzero(e_vals >= ws.eps - active_tol * np.maximum(ws.eps, 1.0))[0]
    if active_gc is None:
        active_gc = np.nonzero(gc_vals >= ws.power_cap * (1.0 - active_tol))[0]

    rows = []
    a_alpha_rows = np.einsum("n,lnm->lm", alpha, ws.a_mats)
    for i in np.asarray(active_mse, int):
        rows.append(-ws.f[i] + a_alpha_rows[i])
    q_rows = ws.gc.block_mult(alpha)
    for k in np.asarray(active_gc, int):
        rows.append(q_rows[k])
    n_active = len(rows)
    if n_active == 0:
        return RegularityReport(rank=0, n_active=0, independent=True)
    stacked = np.array(rows)
    real_stack = np.concatenate([stacked.real, stacked.imag], axis=1)
    svals = np.linalg.svd(real_stack, compute_uv=False)
    rank = int(np.sum(svals > 1e-8 * svals[0])) if svals[0] > 0 else 0
    return RegularityReport(rank=rank, n_active=n_active,
                            independent=(rank == n_active))
