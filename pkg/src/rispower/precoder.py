"""SINR-constrained transmit power minimization for fixed channels.

The classic multi-user downlink problem (minimize sum ||v_i||^2 subject to
per-user SINR >= target) is solved through its virtual-uplink dual: a
fixed-point iteration on uplink powers, MMSE beamformer directions from the
resulting interference-plus-noise matrix, and a linear system for the
downlink power allocation that meets every target with equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NumericalFailureError


def compute_sinr(V: np.ndarray, eff_channels: np.ndarray,
                 noise_w: np.ndarray) -> np.ndarray:
    """Per-user SINR |h_i v_i|^2 / (sum_{j!=i} |h_i v_j|^2 + sigma_i^2)."""
    gains = np.abs(eff_channels @ V) ** 2          # (N_u, N_u): |h_i v_j|^2
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    return signal / (interference + np.asarray(noise_w))


@dataclass(frozen=True)
class Precoder:
    V: np.ndarray          # (M, N_u), columns v_i
    total_power_w: float


@dataclass(frozen=True)
class PoDiagnostics:
    fixed_point_iters: int
    sinr_residuals: np.ndarray   # per-user |SINR_i / target_i - 1|
    feasible: bool


def solve_po(eff_channels: np.ndarray, targets: np.ndarray, noise_w: np.ndarray,
             *, tolerance: float = 1e-6, fp_tol: float = 1e-10,
             max_fp_iters: int = 10_000, q_cap: float = 1e12):
    """Minimum-power precoder meeting every SINR target with equality.

    Steps: (1) noise-normalize the channels, (2) iterate the virtual-uplink
    power fixed point, (3) take MMSE beamformer directions, (4) solve the
    downlink power-allocation linear system, (5) scale the directions.

    Raises InfeasibleError when the uplink powers diverge (beyond ``q_cap``
    or ``max_fp_iters``) or the power allocation turns non-positive, and
    NumericalFailureError on a singular allocation system.
    """
    eff_channels = np.asarray(eff_channels)
    targets = np.asarray(targets, float)
    noise_w = np.asarray(noise_w, float)
    n_users, n_ant = eff_channels.shape
    if np.any(targets <= 0):
        raise ValueError("solve_po: SINR targets must be positive")
    norms = np.linalg.norm(eff_channels, axis=1)
    if np.any(norms == 0):
        raise InfeasibleError("solve_po: a user has an all-zero channel")

    g = eff_channels / np.sqrt(noise_w)[:, None]   # unit-noise channels
    g_norm2 = np.linalg.norm(g, axis=1) ** 2
    # Fixed-point target in the full-matrix form: q_i * g_i M^-1 g_i^H =
    # target/(1+target), equivalent (by rank-one downdate) to the textbook
    # iteration with own-signal excluded.
    ratio = targets / (1.0 + targets)
    q = targets / g_norm2
    eye = np.eye(n_ant)
    iters = 0
    for iters in range(1, max_fp_iters + 1):
        m_q = eye + (g.conj().T * q) @ g
        try:
            x = np.linalg.solve(m_q, g.conj().T)   # (M, N_u)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError("solve_po: uplink system singular") from exc
        c = np.real(np.einsum("im,mi->i", g, x))
        q_new = ratio / c
        if np.any(q_new > q_cap) or not np.all(np.isfinite(q_new)):
            raise InfeasibleError(
                f"solve_po: uplink powers diverged at iteration {iters}")
        rel = np.max(np.abs(q_new - q) / np.maximum(q, 1e-300))
        q = q_new
        if rel < fp_tol:
            break
    else:
        raise InfeasibleError(
            f"solve_po: no fixed point within {max_fp_iters} iterations")

    m_q = eye + (g.conj().T * q) @ g
    u = np.linalg.solve(m_q, g.conj().T)           # directions, (M, N_u)
    u = u / np.linalg.norm(u, axis=0)

    gains = np.abs(g @ u) ** 2                     # (i, j) -> |g_i u_j|^2
    d = -gains.copy()
    np.fill_diagonal(d, np.diag(gains) / targets)
    try:
        p = np.linalg.solve(d, np.ones(n_users))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("solve_po: power allocation singular") from exc
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise InfeasibleError("solve_po: power allocation is not positive")

    v = u * np.sqrt(p)
    sinr = compute_sinr(v, eff_channels, noise_w)
    residuals = np.abs(sinr / targets - 1.0)
    feasible = bool(np.max(residuals) <= tolerance)
    precoder = Precoder(V=v, total_power_w=float(np.sum(p)))
    return precoder, PoDiagnostics(
        fixed_point_iters=iters, sinr_residuals=residuals, feasible=feasible)


def check_binding(precoder: Precoder, eff_channels: np.ndarray,
                  targets: np.ndarray, noise_w: np.ndarray,
                  tol: float = 1e-6) -> np.ndarray:
    """True per user iff the achieved SINR equals its target within tol."""
    sinr = compute_sinr(precoder.V, eff_channels, noise_w)
    return np.abs(sinr / np.asarray(targets) - 1.0) <= tol
