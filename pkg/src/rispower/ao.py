"""Outer alternating loop: precoder solve, receiver update, tile solve, projection.

Each iteration solves the minimum-power precoder on the current effective
channels, refreshes the MMSE receive coefficients, re-optimizes the tile
coefficients in the dual domain, and (optionally) projects the composite
per-element responses onto the unit circle.  The loop stops when the precoder
stabilizes or the iteration cap is reached; the full power trajectory is
recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import InfeasibleError
from .precoder import Precoder, compute_sinr, solve_po
from .scenario import Scenario, watts_to_dbm
from .tile_solver import (DualState, build_workspace, mse, optimal_receivers,
                          solve_to2)
from .tiles import (GcQuadratics, TileBasis, TileState, build_gc_quadratics,
                    design_basis, effective_channels,
                    effective_channels_projected, project_unit_circle,
                    stack_cascaded)


def initial_alpha(rng, gc: GcQuadratics) -> np.ndarray:
    """Random tile coefficients scaled so each tile meets its passivity budget
    with equality."""
    n = gc.dim
    alpha = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    vals = gc.values(alpha)
    scale = np.sqrt(gc.elements_per_tile / np.maximum(vals, 1e-300))
    a = alpha.reshape(gc.n_tiles, gc.n_users) * scale[:, None]
    return a.reshape(n)


@dataclass(frozen=True)
class AoIteration:
    t: int
    total_power_w: float
    total_power_dbm: float
    per_user_sinr: np.ndarray
    duality_gap: float
    po_iters: int
    gam_iters: int
    projected: bool
    to2_converged: bool = True
    caps_raised: bool = False
    #: power cost of the unit-circle projection at this iterate (dB, NaN when
    #: projection is off or the counterfactual solve failed)
    projection_delta_db: float = float("nan")


@dataclass(frozen=True)
class AoResult:
    precoder: Precoder
    tile_state: TileState | None
    trace: tuple[AoIteration, ...]
    converged: bool
    duals: DualState | None = None
    gam_trace: tuple = ()

    @property
    def power_trajectory_w(self) -> np.ndarray:
        return np.array([rec.total_power_w for rec in self.trace])


def run_ao(scenario: Scenario, channels: ChannelSet, *, rng=None,
           projection: bool = True, max_iters: int | None = None,
           record_projection_delta: bool = True,
           record_gam_trace: bool = False) -> AoResult:
    """Run the alternating optimization on one channel realization.

    ``rng`` seeds the initial random tile configuration (required unless the
    scenario has no RIS).  Raises InfeasibleError, tagged with the iteration
    index, if the precoder subproblem is infeasible at any point.
    """
    settings = scenario.solver
    targets = np.asarray(settings.sinr_targets, float)
    noise = scenario.noise_power_w()
    max_iters = settings.max_ao_iters if max_iters is None else max_iters

    if channels.n_tiles == 0:
        precoder, diag = solve_po(channels.direct, targets, noise,
                                  tolerance=settings.po_tolerance)
        rec = AoIteration(
            t=1, total_power_w=precoder.total_power_w,
            total_power_dbm=float(watts_to_dbm(precoder.total_power_w)),
            per_user_sinr=compute_sinr(precoder.V, channels.direct, noise),
            duality_gap=0.0, po_iters=diag.fixed_point_iters, gam_iters=0,
            projected=False)
        return AoResult(precoder=precoder, tile_state=None, trace=(rec,),
                        converged=True)

    if rng is None:
        raise ValueError("run_ao: an rng is required to draw the initial configuration")

    basis: TileBasis = design_basis(channels)
    cascaded = stack_cascaded(channels, basis)
    gc = build_gc_quadratics(basis)

    alpha = initial_alpha(rng, gc)
    state = TileState(alpha=alpha)
    if projection:
        state = project_unit_circle(state, basis)

    eps_targets = 1.0 / (1.0 + targets)
    prev_v = None
    duals: DualState | None = None
    trace: list[AoIteration] = []
    converged = False
    precoder = None
    gam_trace: tuple = ()

    for t in range(1, max_iters + 1):
        if projection:
            eff_po = effective_channels_projected(state, channels)
        else:
            eff_po = effective_channels(state.alpha, channels, cascaded)
        try:
            precoder, po_diag = solve_po(eff_po, targets, noise,
                                         tolerance=settings.po_tolerance)
        except InfeasibleError as exc:
            raise InfeasibleError(f"AO iteration {t}: {exc}") from exc

        proj_delta_db = float("nan")
        if projection and record_projection_delta:
            try:
                unproj, _ = solve_po(
                    effective_channels(state.alpha, channels, cascaded),
                    targets, noise, tolerance=settings.po_tolerance)
                proj_delta_db = float(watts_to_dbm(precoder.total_power_w)
                                      - watts_to_dbm(unproj.total_power_w))
            except InfeasibleError:
                pass

        # receiver update and tile solve happen in coefficient space, at the
        # unprojected warm start, as in the algorithm's main loop
        eff_alpha = effective_channels(state.alpha, channels, cascaded)
        g = optimal_receivers(eff_alpha, precoder.V, noise)
        measured = mse(g, eff_alpha, precoder.V, noise)
        caps = np.maximum(eps_targets, measured)
        caps_raised = bool(np.any(measured > eps_targets + 1e-12))

        ws = build_workspace(channels.direct, cascaded, gc, precoder.V, g,
                             noise, caps, settings.ridge_scale)
        alpha_new, duals = solve_to2(
            ws, step=settings.gam_step, epsilon=settings.gam_epsilon,
            gap_epsilon=settings.gap_epsilon, max_iters=settings.max_gam_iters,
            warm=duals, anchor=state.alpha, caps_raised=caps_raised,
            record_trace=record_gam_trace)
        if record_gam_trace:
            gam_trace = duals.trace

        state = TileState(alpha=alpha_new,
                          zero_phase_count=state.zero_phase_count)
        if projection:
            state = project_unit_circle(state, basis)

        trace.append(AoIteration(
            t=t, total_power_w=precoder.total_power_w,
            total_power_dbm=float(watts_to_dbm(precoder.total_power_w)),
            per_user_sinr=compute_sinr(precoder.V, eff_po, noise),
            duality_gap=duals.gap, po_iters=po_diag.fixed_point_iters,
            gam_iters=duals.n_iters, projected=projection,
            to2_converged=duals.converged, caps_raised=caps_raised,
            projection_delta_db=proj_delta_db))

        # precoder-change test; undefined at t=1, treated as 1
        if prev_v is None:
            delta = 1.0
        else:
            num = np.linalg.norm(precoder.V - prev_v, axis=0)
            den = np.linalg.norm(prev_v, axis=0)
            delta = float(abs(np.sum(num / den)))
        prev_v = precoder.V
        if delta <= settings.ao_epsilon:
            converged = True
            break

    return AoResult(precoder=precoder, tile_state=state, trace=tuple(trace),
                    converged=converged, duals=duals, gam_trace=gam_trace)
