"""Tile bookkeeping: basis vectors, cascaded channels, passivity quadratics.

A tile configuration is a complex row vector ``alpha`` of length N_u*K whose
entry (k, m) weighs the m-th basis vector of tile k; the flattened index is
``r = k*N_u + m`` and the same ordering is used everywhere (cascaded stacking,
quadratic forms, warm starts).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet


def encode_index(k: int, m: int, n_users: int) -> int:
    return k * n_users + m


def decode_index(r: int, n_users: int) -> tuple[int, int]:
    return r // n_users, r % n_users


@dataclass(frozen=True)
class TileBasis:
    """Unit-modulus per-tile configurations, one per (tile, user) pair."""

    basis: np.ndarray  # (K, N_u, P), |entries| = 1

    @property
    def n_tiles(self) -> int:
        return self.basis.shape[0]

    @property
    def n_users(self) -> int:
        return self.basis.shape[1]

    @property
    def elements_per_tile(self) -> int:
        return self.basis.shape[2]


def design_basis(channels: ChannelSet) -> TileBasis:
    """Phase-align each tile toward each user.

    Entry (k, m, p) carries phase -angle(t_{m,k}(p)) - angle(K_{k,p}) so the
    tile->UE link and the tile->BS-center LOS reference add coherently; this
    maximizes |t_{m,k} diag(b) K_k|^2 over unit-modulus b.
    """
    t = channels.tile_to_ue            # (N_u, K, P)
    los = channels.los_to_bs_center    # (K, P)
    phase = -np.angle(t) - np.angle(los)[None, :, :]
    basis = np.exp(1j * phase).transpose(1, 0, 2)  # -> (K, N_u, P)
    return TileBasis(basis=basis)


def stack_cascaded(channels: ChannelSet, basis: TileBasis) -> np.ndarray:
    """Per-user stacked cascaded channels, shape (N_u, N_u*K, M).

    Row r = k*N_u + m of user i's matrix equals t_{i,k} diag(b_k^(m)) S_k.
    """
    t = channels.tile_to_ue        # (N_u, K, P)
    s = channels.bs_to_tile        # (K, P, M)
    rows = np.einsum("ikp,kmp,kpa->ikma", t, basis.basis, s, optimize=True)
    n_u = channels.n_users
    return rows.reshape(n_u, basis.n_tiles * basis.n_users, channels.n_bs_antennas)


@dataclass(frozen=True)
class GcQuadratics:
    """Per-tile passivity quadratic forms alpha Q_k alpha^H.

    Q_k is block sparse: only the k-th N_u x N_u diagonal block is nonzero,
    so just the blocks are stored.  Each block is Hermitian PSD by
    construction (a sum of rank-one outer products over the tile elements).
    """

    blocks: np.ndarray  # (K, N_u, N_u)
    elements_per_tile: int

    @property
    def n_tiles(self) -> int:
        return self.blocks.shape[0]

    @property
    def n_users(self) -> int:
        return self.blocks.shape[1]

    @property
    def dim(self) -> int:
        return self.n_tiles * self.n_users

    def values(self, alpha: np.ndarray) -> np.ndarray:
        """alpha Q_k alpha^H for every tile, shape (K,), real."""
        a = alpha.reshape(self.n_tiles, self.n_users)
        return np.real(np.einsum("km,kmn,kn->k", a, self.blocks, a.conj()))

    def dense_k(self, k: int) -> np.ndarray:
        """Q_k as a dense (N_u*K, N_u*K) matrix."""
        n = self.dim
        out = np.zeros((n, n), complex)
        s = slice(k * self.n_users, (k + 1) * self.n_users)
        out[s, s] = self.blocks[k]
        return out

    def weighted_dense(self, mu: np.ndarray) -> np.ndarray:
        """sum_k mu_k Q_k as a dense block-diagonal matrix."""
        k, nu = self.n_tiles, self.n_users
        out = np.zeros((self.dim, self.dim), complex)
        idx = np.arange(k)
        out.reshape(k, nu, k, nu)[idx, :, idx, :] = \
            np.asarray(mu)[:, None, None] * self.blocks
        return out

    def block_mult(self, alpha: np.ndarray) -> np.ndarray:
        """Rows alpha Q_k for every k, shape (K, N_u*K) (each row is block sparse)."""
        k, nu = self.n_tiles, self.n_users
        a = alpha.reshape(k, nu)
        per_block = np.einsum("km,kmn->kn", a, self.blocks)
        out = np.zeros((k, self.dim), complex)
        idx = np.arange(k)
        out.reshape(k, k, nu)[idx, idx, :] = per_block
        return out


def build_gc_quadratics(basis: TileBasis) -> GcQuadratics:
    b = basis.basis  # (K, N_u, P)
    blocks = np.einsum("kmp,knp->kmn", b, b.conj())
    blocks = 0.5 * (blocks + blocks.conj().transpose(0, 2, 1))  # enforce Hermitian
    return GcQuadratics(blocks=blocks, elements_per_tile=basis.elements_per_tile)


def effective_channels(alpha: np.ndarray, channels: ChannelSet,
                       cascaded: np.ndarray) -> np.ndarray:
    """Total channels h_i(alpha) = h_bar_i + alpha H_i for all users, (N_u, M)."""
    return channels.direct + np.einsum("n,inm->im", alpha, cascaded)


def effective_channel(i: int, alpha: np.ndarray, channels: ChannelSet,
                      cascaded: np.ndarray) -> np.ndarray:
    return channels.direct[i] + alpha @ cascaded[i]


@dataclass(frozen=True)
class TileState:
    """Combination coefficients plus (optionally) their unit-circle projection."""

    alpha: np.ndarray                  # (N_u*K,)
    projected_b: np.ndarray | None = None  # (K, P) unit modulus
    use_projected: bool = False
    zero_phase_count: int = 0


def composite_profile(alpha: np.ndarray, basis: TileBasis) -> np.ndarray:
    """Per-element composite response sum_m alpha_{m,k} b_k^(m), shape (K, P)."""
    a = alpha.reshape(basis.n_tiles, basis.n_users)
    return np.einsum("km,kmp->kp", a, basis.basis)


def project_unit_circle(state: TileState, basis: TileBasis) -> TileState:
    """Strip the composite profile magnitudes: b <- exp(j*angle(b)).

    Zero composite entries have no phase; they map to phase 0 and are counted
    so a run can report how often that degenerate case occurred.  The
    coefficients are kept unchanged as the warm start of the next solve.
    """
    composite = composite_profile(state.alpha, basis)
    zeros = composite == 0.0
    n_zero = int(np.count_nonzero(zeros))
    phases = np.angle(np.where(zeros, 1.0, composite))
    return TileState(
        alpha=state.alpha,
        projected_b=np.exp(1j * phases),
        use_projected=True,
        zero_phase_count=state.zero_phase_count + n_zero,
    )


def effective_channels_projected(state: TileState,
                                 channels: ChannelSet) -> np.ndarray:
    """Total channels using the projected per-element responses, (N_u, M)."""
    if not state.use_projected or state.projected_b is None:
        raise ValueError("projection has not been applied to this tile state")
    t = channels.tile_to_ue   # (N_u, K, P)
    s = channels.bs_to_tile   # (K, P, M)
    ris_part = np.einsum("ikp,kp,kpa->ia", t, state.projected_b, s, optimize=True)
    return channels.direct + ris_part


def effective_channel_projected(i: int, state: TileState,
                                channels: ChannelSet) -> np.ndarray:
    return effective_channels_projected(state, channels)[i]
