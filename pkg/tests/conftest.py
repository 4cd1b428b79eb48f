"""Shared builders for small synthetic problem instances."""

import numpy as np
import pytest

from rispower.channel import ChannelSet
from rispower.precoder import solve_po
from rispower.tile_solver import build_workspace, mse, optimal_receivers
from rispower.tiles import (TileBasis, build_gc_quadratics, design_basis,
                            effective_channels, stack_cascaded)


def complex_randn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channel_set(rng, n_users=3, m=4, k=3, p=4):
    """A ChannelSet with random entries (no geometry behind it)."""
    n_r = k * p
    return ChannelSet(
        direct=complex_randn(rng, (n_users, m)),
        bs_to_ris=complex_randn(rng, (n_r, m)),
        ris_to_ue=complex_randn(rng, (n_users, n_r)),
        los_bs_center=np.exp(1j * rng.uniform(0, 2 * np.pi, n_r)),
        n_tiles=k,
        ue_positions=rng.uniform(0, 10, (n_users, 3)),
        direct_models=("IO",) * n_users,
    )


def random_workspace(seed, n_users=3, m=4, k=3, p=4, *, from_po=True,
                     targets=None, ridge_scale=1e-10):
    """Random but internally consistent dual-solve workspace.

    With ``from_po`` the precoder/receivers come from an actual minimum-power
    solve at a random feasible configuration, which makes the MSE caps
    attainable; otherwise V and g are plain random draws.
    """
    rng = np.random.default_rng(seed)
    channels = random_channel_set(rng, n_users, m, k, p)
    basis = design_basis(channels)
    cascaded = stack_cascaded(channels, basis)
    gc = build_gc_quadratics(basis)
    noise = np.full(n_users, 0.5)
    if targets is None:
        targets = np.full(n_users, 1.0)

    alpha0 = complex_randn(rng, n_users * k)
    scale = np.sqrt(p / np.maximum(gc.values(alpha0), 1e-12))
    alpha0 = (alpha0.reshape(k, n_users) * scale[:, None]).reshape(-1)

    if from_po:
        eff = effective_channels(alpha0, channels, cascaded)
        precoder, _ = solve_po(eff, targets, noise)
        v = precoder.V
        g = optimal_receivers(eff, v, noise)
        measured = mse(g, eff, v, noise)
        caps = np.maximum(1.0 / (1.0 + targets), measured)
    else:
        v = complex_randn(rng, (m, n_users))
        g = complex_randn(rng, n_users)
        caps = np.full(n_users, 0.6)
    ws = build_workspace(channels.direct, cascaded, gc, v, g, noise, caps,
                         ridge_scale)
    return {
        "channels": channels, "basis": basis, "cascaded": cascaded, "gc": gc,
        "noise": noise, "targets": targets, "alpha0": alpha0, "v": v, "g": g,
        "ws": ws,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
