"""One channel realization: direct links, RIS links and LOS reference vectors.

All wave propagation uses exact spherical phases (element-to-element
distances), so a single code path covers both near- and far-field layouts.
RIS segments carry per-segment free-space amplitudes; the direct link uses
the configured ABG path-loss model with Rayleigh fading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, db_to_linear

TWO_PI = 2.0 * np.pi


def spherical_phase(src, dst, wavelength_m: float):
    """Propagation phase -2*pi*||dst - src|| / lambda, reduced modulo 2*pi.

    ``src`` and ``dst`` are broadcastable arrays of 3-vectors; the result has
    the broadcast shape without the trailing axis.  Raises ``ValueError`` for
    coincident points (the phase is undefined there).
    """
    d = np.linalg.norm(np.asarray(dst, float) - np.asarray(src, float), axis=-1)
    if np.any(d == 0.0):
        raise ValueError("spherical_phase: coincident src/dst points")
    return np.mod(-TWO_PI * d / wavelength_m, TWO_PI)


def pairwise_distances(a, b):
    """Distances between every row of a (n,3) and of b (m,3): shape (n, m)."""
    a = np.asarray(a, float)[:, None, :]
    b = np.asarray(b, float)[None, :, :]
    return np.linalg.norm(a - b, axis=-1)


def abg_pathloss_db(distance_m, frequency_ghz, params):
    """ABG attenuation 10*alpha*log10(d) + beta + 10*gamma*log10(f)."""
    distance_m = np.asarray(distance_m, float)
    if np.any(distance_m <= 0.0):
        raise ValueError("abg_pathloss_db: distance must be positive")
    return (10.0 * params.alpha * np.log10(distance_m)
            + params.beta_db
            + 10.0 * params.gamma * np.log10(frequency_ghz))


def complex_normal(rng, shape):
    """I.i.d. circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rician_link(los, kappa, pathloss_amp, rng):
    """Rician fading around a unit-modulus LOS phase profile.

    Returns ``pathloss_amp * (sqrt(k/(1+k))*los + sqrt(1/(1+k))*W)`` with W
    i.i.d. unit-variance complex Gaussian.  ``kappa=inf`` gives the pure LOS
    link; ``pathloss_amp`` may be a scalar or an array broadcastable to
    ``los.shape``.
    """
    if kappa < 0:
        raise ValueError("rician_link: kappa must be >= 0")
    los = np.asarray(los)
    if np.isinf(kappa):
        return np.asarray(pathloss_amp) * los
    w = complex_normal(rng, los.shape)
    mix = np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * w
    return np.asarray(pathloss_amp) * mix


def free_space_amp(distance_m, wavelength_m, gain_db=0.0):
    """Per-segment free-space amplitude sqrt(G) * lambda / (4*pi*d)."""
    return np.sqrt(db_to_linear(gain_db)) * wavelength_m / (4.0 * np.pi * distance_m)


@dataclass(frozen=True)
class ChannelSet:
    """All links of one realization, stored at RIS-element granularity.

    ``n_tiles`` fixes the tile decomposition used by the tiled views below;
    the underlying element-level arrays do not depend on it, so the same
    physical realization can be re-tiled for tile-count sweeps.
    """

    direct: np.ndarray          # (N_u, M) rows h_bar_i
    bs_to_ris: np.ndarray       # (N_r, M)
    ris_to_ue: np.ndarray       # (N_u, N_r)
    los_bs_center: np.ndarray   # (N_r,) unit-modulus
    n_tiles: int
    ue_positions: np.ndarray    # (N_u, 3)
    direct_models: tuple[str, ...]

    @property
    def n_users(self) -> int:
        return self.direct.shape[0]

    @property
    def n_bs_antennas(self) -> int:
        return self.direct.shape[1]

    @property
    def n_ris_elements(self) -> int:
        return self.bs_to_ris.shape[0]

    @property
    def elements_per_tile(self) -> int:
        return 0 if self.n_tiles == 0 else self.n_ris_elements // self.n_tiles

    @property
    def bs_to_tile(self) -> np.ndarray:
        """(K, P, M) matrices S_k."""
        k, p = self.n_tiles, self.elements_per_tile
        if k == 0:
            return np.zeros((0, 0, self.n_bs_antennas), complex)
        return self.bs_to_ris.reshape(k, p, self.n_bs_antennas)

    @property
    def tile_to_ue(self) -> np.ndarray:
        """(N_u, K, P) row vectors t_{i,k}."""
        k, p = self.n_tiles, self.elements_per_tile
        if k == 0:
            return np.zeros((self.n_users, 0, 0), complex)
        return self.ris_to_ue.reshape(self.n_users, k, p)

    @property
    def los_to_bs_center(self) -> np.ndarray:
        """(K, P) unit-modulus LOS vectors toward the BS array center."""
        if self.n_tiles == 0:
            return np.zeros((0, 0), complex)
        return self.los_bs_center.reshape(self.n_tiles, self.elements_per_tile)

    def retiled(self, n_tiles: int) -> "ChannelSet":
        if n_tiles > 0 and self.n_ris_elements % n_tiles != 0:
            raise ValueError(
                f"cannot split {self.n_ris_elements} elements into {n_tiles} tiles")
        return ChannelSet(
            direct=self.direct, bs_to_ris=self.bs_to_ris,
            ris_to_ue=self.ris_to_ue, los_bs_center=self.los_bs_center,
            n_tiles=n_tiles, ue_positions=self.ue_positions,
            direct_models=self.direct_models,
        )


def draw_ue_positions(scenario: Scenario, rng) -> np.ndarray:
    g = scenario.geometry
    if g.ue_positions_m is not None:
        return np.asarray(g.ue_positions_m, float)
    region = g.ue_region_m
    n = scenario.n_users
    x = rng.uniform(region.x_m[0], region.x_m[1], size=n)
    y = rng.uniform(region.y_m[0], region.y_m[1], size=n)
    z = np.full(n, region.height_m)
    return np.stack([x, y, z], axis=1)


def realize_channels(scenario: Scenario, rng) -> ChannelSet:
    """Draw one full channel realization.

    Pure function of (scenario, rng state): the same seed gives a bit-identical
    ChannelSet.  UE positions are re-drawn here unless the scenario pins them.
    RIS links combine exact spherical LOS phases with Rayleigh multipath under
    the configured Rician factors; one direct-link model (IO/SM) is drawn per
    UE per realization.
    """
    rng_ue, rng_direct, rng_ris = rng.spawn(3)
    lam = scenario.wavelength_m
    rf = scenario.rf
    f_ghz = rf.carrier_frequency_hz / 1e9
    bs_center = scenario.bs_center()
    bs_elems = scenario.bs_element_positions()
    ue_pos = draw_ue_positions(scenario, rng_ue)

    # direct BS->UE links: ABG path loss, one model draw per UE, NLOS fading
    models = [m for m, _ in scenario.channel.direct_mix]
    probs = np.array([p for _, p in scenario.channel.direct_mix])
    picks = rng_direct.choice(len(models), size=scenario.n_users, p=probs)
    direct_models = tuple(models[int(i)] for i in picks)
    d_direct = np.linalg.norm(ue_pos - bs_center, axis=1)
    pl_db = np.array([
        abg_pathloss_db(d_direct[i], f_ghz, scenario.channel.abg[direct_models[i]])
        for i in range(scenario.n_users)
    ])
    gain_db = rf.tx_antenna_gain_dbi + rf.rx_antenna_gain_dbi
    amp = np.sqrt(db_to_linear(gain_db - pl_db))
    direct = amp[:, None] * complex_normal(
        rng_direct, (scenario.n_users, scenario.n_bs_antennas))

    # RIS links at element granularity
    ris_elems = scenario.ris_element_positions()
    if ris_elems.shape[0] == 0:
        empty = np.zeros((0, scenario.n_bs_antennas), complex)
        return ChannelSet(
            direct=direct, bs_to_ris=empty,
            ris_to_ue=np.zeros((scenario.n_users, 0), complex),
            los_bs_center=np.zeros(0, complex),
            n_tiles=0, ue_positions=ue_pos, direct_models=direct_models,
        )

    ge = scenario.channel.ris_element_gain_dbi
    d_in = pairwise_distances(ris_elems, bs_elems)               # (N_r, M)
    los_in = np.exp(1j * spherical_phase(bs_elems[None, :, :],
                                         ris_elems[:, None, :], lam))
    amp_in = free_space_amp(d_in, lam, rf.tx_antenna_gain_dbi + ge)
    bs_to_ris = rician_link(los_in, scenario.channel.rician_kappa_bs_ris,
                            amp_in, rng_ris)

    d_out = pairwise_distances(ue_pos, ris_elems)                # (N_u, N_r)
    los_out = np.exp(1j * spherical_phase(ris_elems[None, :, :],
                                          ue_pos[:, None, :], lam))
    amp_out = free_space_amp(d_out, lam, rf.rx_antenna_gain_dbi + ge)
    ris_to_ue = rician_link(los_out, scenario.channel.rician_kappa_ris_ue,
                            amp_out, rng_ris)

    los_bs_center = np.exp(1j * spherical_phase(ris_elems, bs_center, lam))

    return ChannelSet(
        direct=direct, bs_to_ris=bs_to_ris, ris_to_ue=ris_to_ue,
        los_bs_center=los_bs_center, n_tiles=scenario.n_tiles,
        ue_positions=ue_pos, direct_models=direct_models,
    )


def dump_channels(channels: ChannelSet, path) -> None:
    """Write a ChannelSet to an .npz file for later replay."""
    np.savez_compressed(
        path,
        direct=channels.direct,
        bs_to_ris=channels.bs_to_ris,
        ris_to_ue=channels.ris_to_ue,
        los_bs_center=channels.los_bs_center,
        n_tiles=np.array(channels.n_tiles),
        ue_positions=channels.ue_positions,
        direct_models=np.array(channels.direct_models, dtype="U16"),
    )


def load_channels(path, scenario: Scenario | None = None) -> ChannelSet:
    """Load a dumped ChannelSet; validates dimensions against a scenario if given."""
    with np.load(path) as data:
        cs = ChannelSet(
            direct=data["direct"],
            bs_to_ris=data["bs_to_ris"],
            ris_to_ue=data["ris_to_ue"],
            los_bs_center=data["los_bs_center"],
            n_tiles=int(data["n_tiles"]),
            ue_positions=data["ue_positions"],
            direct_models=tuple(str(m) for m in data["direct_models"]),
        )
    if scenario is not None:
        if cs.n_users != scenario.n_users:
            raise ValueError(
                f"replayed channels have {cs.n_users} users, scenario has "
                f"{scenario.n_users}")
        if cs.n_bs_antennas != scenario.n_bs_antennas:
            raise ValueError("replayed channels disagree on BS antenna count")
        if cs.n_ris_elements != scenario.n_ris_elements:
            raise ValueError("replayed channels disagree on RIS element count")
        cs = cs.retiled(scenario.n_tiles)
    return cs
