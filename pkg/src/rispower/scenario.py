"""Scenario description: geometry, RF constants, tiling, channel and solver settings.

A scenario is loaded from a YAML document (or built from a compiled-in preset)
and validated once; afterwards it is immutable and safe to share across
parallel workers.  All config field names carry explicit units (``_hz``,
``_dbm``, ``_m``, ``_db``) because the constants come in mixed units and
silent unit bugs dominate this domain.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ScenarioError

SPEED_OF_LIGHT_M_S = 299_792_458.0

_PLANES = ("xz", "yz")


def dbm_to_watts(dbm):
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts) / 1e-3)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x))


@dataclass(frozen=True)
class RfConstants:
    """Carrier, bandwidth and link-budget constants."""

    carrier_frequency_hz: float = 28.0e9
    bandwidth_hz: float = 30.0e3
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 8.0
    tx_antenna_gain_dbi: float = 3.0
    rx_antenna_gain_dbi: float = 3.0
    #: optional override of the PSD-derived noise power (scalar, dBm)
    noise_power_dbm: float | None = None

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz

    def noise_power_dbm_value(self) -> float:
        if self.noise_power_dbm is not None:
            return self.noise_power_dbm
        return (
            self.noise_psd_dbm_hz
            + 10.0 * math.log10(self.bandwidth_hz)
            + self.noise_figure_db
        )

    def noise_power_w(self) -> float:
        return dbm_to_watts(self.noise_power_dbm_value())


@dataclass(frozen=True)
class AbgParams:
    """Path-loss model PL = 10*alpha*log10(d_m) + beta_db + 10*gamma*log10(f_ghz)."""

    alpha: float
    beta_db: float
    gamma: float


@dataclass(frozen=True)
class RisPanel:
    center_m: tuple[float, float, float]
    plane: str  # "xz" or "yz"
    rows: int
    cols: int

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class UeRegion:
    """Axis-aligned rectangle at fixed height; UEs are drawn uniformly inside."""

    x_m: tuple[float, float]
    y_m: tuple[float, float]
    height_m: float = 1.0


@dataclass(frozen=True)
class ArrayGeometry:
    bs_position_m: tuple[float, float, float]
    ris_panels: tuple[RisPanel, ...]
    bs_plane: str = "yz"
    bs_rows: int = 2
    bs_cols: int = 8
    #: spacing between the two linear sub-arrays, in wavelengths (unstated in
    #: the usual setups; half-wavelength vertical stacking by default)
    bs_row_spacing_wavelengths: float = 0.5
    #: element spacing in meters; None means half the carrier wavelength
    element_spacing_m: float | None = None
    ue_region_m: UeRegion | None = None
    ue_positions_m: tuple[tuple[float, float, float], ...] | None = None

    @property
    def n_bs_antennas(self) -> int:
        return self.bs_rows * self.bs_cols

    @property
    def n_ris_elements(self) -> int:
        return sum(p.n_elements for p in self.ris_panels)


@dataclass(frozen=True)
class TilingSpec:
    """Partition of the RIS elements into equally sized tiles.

    Tiles follow the global element ordering (panel by panel, row-major
    inside a panel).  When ``total_tiles`` is a multiple of the panel count
    each panel is cut into contiguous equal chunks; when it is smaller, one
    tile spans several whole panels (this is how a single tile covering the
    entire deployment is expressed).
    """

    total_tiles: int = 1

    def elements_per_tile(self, n_ris_elements: int) -> int:
        return n_ris_elements // self.total_tiles


@dataclass(frozen=True)
class ChannelParams:
    rician_kappa_bs_ris: float = 50.0
    rician_kappa_ris_ue: float = 50.0
    #: per-element scattering gain applied on each RIS segment (dBi); the
    #: reference papers leave the RIS link budget unstated, so this is an
    #: explicit knob with a lossless-isotropic default
    ris_element_gain_dbi: float = 0.0
    direct_mix: tuple[tuple[str, float], ...] = (("IO", 0.7), ("SM", 0.3))
    abg: dict[str, AbgParams] = field(
        default_factory=lambda: dict(DEFAULT_ABG_PARAMS)
    )


# Indoor-office (IO) and shopping-mall (SM) NLOS parameters from the
# multi-frequency ABG fits in the mmWave channel-model literature.  They are
# documented defaults, not ground truth: scenario files may override them.
DEFAULT_ABG_PARAMS = {
    "IO": AbgParams(alpha=3.83, beta_db=17.30, gamma=2.49),
    "SM": AbgParams(alpha=3.21, beta_db=18.09, gamma=2.24),
}


@dataclass(frozen=True)
class SolverSettings:
    #: per-user SINR targets, linear scale
    sinr_targets: tuple[float, ...] = (1.0,)
    ao_epsilon: float = 1e-3
    gam_step: float = 1e-2
    gam_epsilon: float = 1e-6
    max_ao_iters: int = 20
    max_gam_iters: int = 2000
    ridge_scale: float = 1e-10
    po_tolerance: float = 1e-6
    #: stop the dual ascent when the relative primal-dual gap falls below this
    gap_epsilon: float = 1e-8


@dataclass(frozen=True)
class Scenario:
    name: str
    n_users: int
    rf: RfConstants
    geometry: ArrayGeometry
    tiling: TilingSpec
    channel: ChannelParams
    solver: SolverSettings

    # -- derived quantities -------------------------------------------------

    @property
    def wavelength_m(self) -> float:
        return self.rf.wavelength_m

    @property
    def element_spacing_m(self) -> float:
        if self.geometry.element_spacing_m is not None:
            return self.geometry.element_spacing_m
        return self.wavelength_m / 2.0

    @property
    def n_bs_antennas(self) -> int:
        return self.geometry.n_bs_antennas

    @property
    def n_ris_elements(self) -> int:
        return self.geometry.n_ris_elements

    @property
    def n_tiles(self) -> int:
        return self.tiling.total_tiles

    @property
    def elements_per_tile(self) -> int:
        return self.tiling.elements_per_tile(self.n_ris_elements)

    def noise_power_w(self) -> np.ndarray:
        """Per-user noise power in watts (shared value broadcast to all users)."""
        return np.full(self.n_users, self.rf.noise_power_w())

    def bs_element_positions(self) -> np.ndarray:
        """(M, 3) antenna positions: two stacked linear sub-arrays."""
        g = self.geometry
        s = self.element_spacing_m
        row_step = g.bs_row_spacing_wavelengths * self.wavelength_m
        return _grid_positions(
            np.asarray(g.bs_position_m, dtype=float),
            g.bs_plane, g.bs_rows, g.bs_cols, row_step, s,
        )

    def bs_center(self) -> np.ndarray:
        return np.asarray(self.geometry.bs_position_m, dtype=float)

    def ris_element_positions(self) -> np.ndarray:
        """(N_r, 3) element positions, panel by panel, row-major in a panel."""
        s = self.element_spacing_m
        blocks = [
            _grid_positions(np.asarray(p.center_m, dtype=float),
                            p.plane, p.rows, p.cols, s, s)
            for p in self.geometry.ris_panels
        ]
        if not blocks:
            return np.zeros((0, 3))
        return np.concatenate(blocks, axis=0)

    # -- validation ----------------------------------------------------------

    def validate(self) -> list[str]:
        """Return a list of violated invariants (empty when the scenario is sound)."""
        problems = []
        rf, g = self.rf, self.geometry
        if rf.carrier_frequency_hz <= 0:
            problems.append("rf.carrier_frequency_hz must be positive")
        if rf.bandwidth_hz <= 0:
            problems.append("rf.bandwidth_hz must be positive")
        if rf.bandwidth_hz > 0 and rf.carrier_frequency_hz > 0 \
                and self.rf.noise_power_w() <= 0:
            problems.append("rf: derived noise power must be positive")
        if self.n_users < 1:
            problems.append("users must be >= 1")
        if g.bs_rows < 1 or g.bs_cols < 1:
            problems.append("geometry.bs_rows/bs_cols must be >= 1")
        if g.bs_plane not in _PLANES:
            problems.append(f"geometry.bs_plane must be one of {_PLANES}")
        for i, p in enumerate(g.ris_panels):
            if p.plane not in _PLANES:
                problems.append(f"geometry.ris_panels[{i}].plane must be one of {_PLANES}")
            if p.rows < 1 or p.cols < 1:
                problems.append(f"geometry.ris_panels[{i}]: rows/cols must be >= 1")
        if g.ue_region_m is None and g.ue_positions_m is None:
            problems.append("geometry: one of ue_region_m / ue_positions_m is required")
        if g.ue_positions_m is not None and len(g.ue_positions_m) != self.n_users:
            problems.append("geometry.ue_positions_m must list one position per user")
        if g.ue_region_m is not None:
            r = g.ue_region_m
            if r.x_m[1] < r.x_m[0] or r.y_m[1] < r.y_m[0]:
                problems.append("geometry.ue_region_m bounds must be ordered (lo, hi)")
        problems.extend(self._validate_tiling())
        ch = self.channel
        if ch.rician_kappa_bs_ris < 0 or ch.rician_kappa_ris_ue < 0:
            problems.append("channel: Rician kappa factors must be >= 0")
        mix_total = sum(prob for _, prob in ch.direct_mix)
        if abs(mix_total - 1.0) > 1e-9:
            problems.append(
                f"channel.direct_mix must sum to 1 (got {mix_total:g})")
        for model, prob in ch.direct_mix:
            if prob < 0:
                problems.append(f"channel.direct_mix[{model}]: probability must be >= 0")
            if model not in ch.abg:
                problems.append(f"channel.abg missing parameters for model {model!r}")
        sv = self.solver
        if len(sv.sinr_targets) != self.n_users:
            problems.append("solver.sinr_targets length must equal the user count")
        for name in ("ao_epsilon", "gam_step", "gam_epsilon", "ridge_scale",
                     "po_tolerance", "gap_epsilon"):
            if getattr(sv, name) <= 0:
                problems.append(f"solver.{name} must be positive")
        if any(t <= 0 for t in sv.sinr_targets):
            problems.append("solver.sinr_targets must be positive (linear scale)")
        if sv.max_ao_iters < 1 or sv.max_gam_iters < 1:
            problems.append("solver.max_ao_iters/max_gam_iters must be >= 1")
        return problems

    def _validate_tiling(self) -> list[str]:
        problems = []
        n_r = self.n_ris_elements
        k = self.tiling.total_tiles
        n_panels = len(self.geometry.ris_panels)
        if n_panels == 0:
            if k != 0:
                problems.append("tiling.total_tiles must be 0 when there are no RIS panels")
            return problems
        if k < 1:
            problems.append("tiling.total_tiles must be >= 1")
            return problems
        if n_r % k != 0:
            problems.append(
                f"tiling.total_tiles={k} must divide the element count {n_r}")
        counts = {p.n_elements for p in self.geometry.ris_panels}
        if k % n_panels == 0:
            per_panel = k // n_panels
            for i, p in enumerate(self.geometry.ris_panels):
                if p.n_elements % per_panel != 0:
                    problems.append(
                        f"tiling: panel {i} has {p.n_elements} elements, "
                        f"not divisible into {per_panel} tiles")
        elif n_panels % k == 0:
            if len(counts) != 1:
                problems.append(
                    "tiling: tiles spanning several panels require equal panel sizes")
        else:
            problems.append(
                f"tiling.total_tiles={k} must divide or be a multiple of the "
                f"panel count {n_panels}")
        return problems

    # -- derivation helpers ---------------------------------------------------

    def with_tiles(self, total_tiles: int) -> "Scenario":
        return _validated(dataclasses.replace(
            self, tiling=TilingSpec(total_tiles=total_tiles)))

    def with_targets_db(self, targets_db) -> "Scenario":
        targets_db = np.broadcast_to(np.asarray(targets_db, float), (self.n_users,))
        targets = tuple(float(x) for x in db_to_linear(targets_db))
        return _validated(dataclasses.replace(
            self, solver=dataclasses.replace(self.solver, sinr_targets=targets)))

    def with_users(self, n_users: int) -> "Scenario":
        target = self.solver.sinr_targets[0]
        sv = dataclasses.replace(self.solver, sinr_targets=(target,) * n_users)
        return _validated(dataclasses.replace(self, n_users=n_users, solver=sv))

    def with_panel_grid(self, rows: int, cols: int) -> "Scenario":
        """Shrink/grow every RIS panel to a rows x cols grid (desk-scale runs)."""
        panels = tuple(dataclasses.replace(p, rows=rows, cols=cols)
                       for p in self.geometry.ris_panels)
        return _validated(dataclasses.replace(
            self, geometry=dataclasses.replace(self.geometry, ris_panels=panels)))

    def without_ris(self) -> "Scenario":
        return _validated(dataclasses.replace(
            self,
            geometry=dataclasses.replace(self.geometry, ris_panels=()),
            tiling=TilingSpec(total_tiles=0)))

    def with_solver(self, **kwargs) -> "Scenario":
        return _validated(dataclasses.replace(
            self, solver=dataclasses.replace(self.solver, **kwargs)))


def _grid_positions(center, plane, rows, cols, row_step, col_step):
    """Positions of a rows x cols grid in a vertical plane, column-major order.

    Rows run along z (top row first), columns along the plane's horizontal
    axis.  The grid is centered on ``center``.  Element index = c*rows + r so
    that contiguous index ranges form vertical strips of whole columns, which
    is what tile slicing relies on.
    """
    if plane not in _PLANES:
        raise ScenarioError(f"unknown plane {plane!r}; expected one of {_PLANES}")
    horiz = np.array([1.0, 0.0, 0.0]) if plane == "xz" else np.array([0.0, 1.0, 0.0])
    vert = np.array([0.0, 0.0, 1.0])
    r_idx = np.arange(rows) - (rows - 1) / 2.0
    c_idx = np.arange(cols) - (cols - 1) / 2.0
    offsets = (c_idx[:, None, None] * col_step * horiz
               - r_idx[None, :, None] * row_step * vert)
    return (center + offsets).reshape(rows * cols, 3)


def _validated(scenario: Scenario) -> Scenario:
    problems = scenario.validate()
    if problems:
        raise ScenarioError("; ".join(problems))
    return scenario


# --------------------------------------------------------------------------
# YAML loading / serialization
# --------------------------------------------------------------------------

def load_scenario(text: str) -> Scenario:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"scenario parse error{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    return scenario_from_dict(doc)


def load_scenario_path(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _req(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"missing required field {where}.{key}")
    return section[key]


def scenario_from_dict(doc: dict) -> Scenario:
    name = str(doc.get("name", "custom"))
    n_users = int(_req(doc, "users", "<root>"))

    rf_doc = dict(_req(doc, "rf", "<root>"))
    rf = RfConstants(
        carrier_frequency_hz=float(_req(rf_doc, "carrier_frequency_hz", "rf")),
        bandwidth_hz=float(_req(rf_doc, "bandwidth_hz", "rf")),
        noise_psd_dbm_hz=float(_req(rf_doc, "noise_psd_dbm_hz", "rf")),
        noise_figure_db=float(rf_doc.get("noise_figure_db", 0.0)),
        tx_antenna_gain_dbi=float(rf_doc.get("tx_antenna_gain_dbi", 0.0)),
        rx_antenna_gain_dbi=float(rf_doc.get("rx_antenna_gain_dbi", 0.0)),
        noise_power_dbm=(None if rf_doc.get("noise_power_dbm") is None
                         else float(rf_doc["noise_power_dbm"])),
    )

    g_doc = dict(_req(doc, "geometry", "<root>"))
    panels = tuple(
        RisPanel(
            center_m=tuple(float(x) for x in _req(p, "center_m", "ris_panels[]")),
            plane=str(_req(p, "plane", "ris_panels[]")),
            rows=int(_req(p, "rows", "ris_panels[]")),
            cols=int(_req(p, "cols", "ris_panels[]")),
        )
        for p in g_doc.get("ris_panels", [])
    )
    region = None
    if g_doc.get("ue_region_m") is not None:
        r = g_doc["ue_region_m"]
        region = UeRegion(
            x_m=tuple(float(x) for x in _req(r, "x", "ue_region_m")),
            y_m=tuple(float(x) for x in _req(r, "y", "ue_region_m")),
            height_m=float(r.get("height", 1.0)),
        )
    positions = None
    if g_doc.get("ue_positions_m") is not None:
        positions = tuple(tuple(float(x) for x in pos)
                          for pos in g_doc["ue_positions_m"])
    geometry = ArrayGeometry(
        bs_position_m=tuple(float(x) for x in _req(g_doc, "bs_position_m", "geometry")),
        bs_plane=str(g_doc.get("bs_plane", "yz")),
        bs_rows=int(g_doc.get("bs_rows", 2)),
        bs_cols=int(g_doc.get("bs_cols", 8)),
        bs_row_spacing_wavelengths=float(g_doc.get("bs_row_spacing_wavelengths", 0.5)),
        element_spacing_m=(None if g_doc.get("element_spacing_m") is None
                           else float(g_doc["element_spacing_m"])),
        ris_panels=panels,
        ue_region_m=region,
        ue_positions_m=positions,
    )

    t_doc = doc.get("tiling", {})
    default_tiles = 0 if not panels else 1
    tiling = TilingSpec(total_tiles=int(t_doc.get("total_tiles", default_tiles)))

    c_doc = dict(doc.get("channel", {}))
    mix_doc = c_doc.get("direct_mix", [{"model": "IO", "probability": 1.0}])
    direct_mix = tuple(
        (str(_req(m, "model", "direct_mix[]")),
         float(_req(m, "probability", "direct_mix[]")))
        for m in mix_doc
    )
    abg = {
        str(model): AbgParams(
            alpha=float(_req(p, "alpha", f"abg.{model}")),
            beta_db=float(_req(p, "beta_db", f"abg.{model}")),
            gamma=float(_req(p, "gamma", f"abg.{model}")),
        )
        for model, p in c_doc.get("abg", _abg_dict(DEFAULT_ABG_PARAMS)).items()
    }
    channel = ChannelParams(
        rician_kappa_bs_ris=float(c_doc.get("rician_kappa_bs_ris", 50.0)),
        rician_kappa_ris_ue=float(c_doc.get("rician_kappa_ris_ue", 50.0)),
        ris_element_gain_dbi=float(c_doc.get("ris_element_gain_dbi", 0.0)),
        direct_mix=direct_mix,
        abg=abg,
    )

    s_doc = dict(doc.get("solver", {}))
    if "sinr_targets_db" in s_doc:
        raw = np.asarray(s_doc["sinr_targets_db"], dtype=float)
        targets = tuple(float(x) for x in db_to_linear(np.broadcast_to(raw, (n_users,))))
    else:
        targets = tuple([1.0] * n_users)
    solver = SolverSettings(
        sinr_targets=targets,
        ao_epsilon=float(s_doc.get("ao_epsilon", 1e-3)),
        gam_step=float(s_doc.get("gam_step", 1e-2)),
        gam_epsilon=float(s_doc.get("gam_epsilon", 1e-6)),
        max_ao_iters=int(s_doc.get("max_ao_iters", 20)),
        max_gam_iters=int(s_doc.get("max_gam_iters", 2000)),
        ridge_scale=float(s_doc.get("ridge_scale", 1e-10)),
        po_tolerance=float(s_doc.get("po_tolerance", 1e-6)),
        gap_epsilon=float(s_doc.get("gap_epsilon", 1e-8)),
    )

    return _validated(Scenario(
        name=name, n_users=n_users, rf=rf, geometry=geometry,
        tiling=tiling, channel=channel, solver=solver,
    ))


def _abg_dict(abg: dict[str, AbgParams]) -> dict:
    return {m: {"alpha": p.alpha, "beta_db": p.beta_db, "gamma": p.gamma}
            for m, p in abg.items()}


def scenario_to_dict(sc: Scenario) -> dict:
    g = sc.geometry
    g_doc: dict = {
        "bs_position_m": list(g.bs_position_m),
        "bs_plane": g.bs_plane,
        "bs_rows": g.bs_rows,
        "bs_cols": g.bs_cols,
        "bs_row_spacing_wavelengths": g.bs_row_spacing_wavelengths,
        "element_spacing_m": g.element_spacing_m,
        "ris_panels": [
            {"center_m": list(p.center_m), "plane": p.plane,
             "rows": p.rows, "cols": p.cols}
            for p in g.ris_panels
        ],
    }
    if g.ue_region_m is not None:
        g_doc["ue_region_m"] = {
            "x": list(g.ue_region_m.x_m),
            "y": list(g.ue_region_m.y_m),
            "height": g.ue_region_m.height_m,
        }
    if g.ue_positions_m is not None:
        g_doc["ue_positions_m"] = [list(p) for p in g.ue_positions_m]
    return {
        "name": sc.name,
        "users": sc.n_users,
        "rf": {
            "carrier_frequency_hz": sc.rf.carrier_frequency_hz,
            "bandwidth_hz": sc.rf.bandwidth_hz,
            "noise_psd_dbm_hz": sc.rf.noise_psd_dbm_hz,
            "noise_figure_db": sc.rf.noise_figure_db,
            "tx_antenna_gain_dbi": sc.rf.tx_antenna_gain_dbi,
            "rx_antenna_gain_dbi": sc.rf.rx_antenna_gain_dbi,
            "noise_power_dbm": sc.rf.noise_power_dbm,
        },
        "geometry": g_doc,
        "tiling": {"total_tiles": sc.tiling.total_tiles},
        "channel": {
            "rician_kappa_bs_ris": sc.channel.rician_kappa_bs_ris,
            "rician_kappa_ris_ue": sc.channel.rician_kappa_ris_ue,
            "ris_element_gain_dbi": sc.channel.ris_element_gain_dbi,
            "direct_mix": [
                {"model": m, "probability": p} for m, p in sc.channel.direct_mix
            ],
            "abg": _abg_dict(sc.channel.abg),
        },
        "solver": {
            "sinr_targets_db": [float(x) for x in
                                linear_to_db(np.asarray(sc.solver.sinr_targets))],
            "ao_epsilon": sc.solver.ao_epsilon,
            "gam_step": sc.solver.gam_step,
            "gam_epsilon": sc.solver.gam_epsilon,
            "max_ao_iters": sc.solver.max_ao_iters,
            "max_gam_iters": sc.solver.max_gam_iters,
            "ridge_scale": sc.solver.ridge_scale,
            "po_tolerance": sc.solver.po_tolerance,
            "gap_epsilon": sc.solver.gap_epsilon,
        },
    }


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------

def builtin_preset(name: str) -> Scenario:
    """Compiled-in scenarios: "FF" (six wall panels) and "NF" (one close-by panel)."""
    if name == "FF":
        panels = tuple(
            RisPanel(center_m=c, plane=pl, rows=40, cols=20)
            for c, pl in (
                ((0.0, 20.0, 3.0), "yz"),
                ((0.0, 10.0, 3.0), "yz"),
                ((3.0, 0.0, 3.0), "xz"),
                ((13.0, 0.0, 3.0), "xz"),
                ((8.0, 30.0, 3.0), "xz"),
                ((18.0, 30.0, 3.0), "xz"),
            )
        )
        return _validated(Scenario(
            name="FF",
            n_users=6,
            rf=RfConstants(),
            geometry=ArrayGeometry(
                bs_position_m=(30.0, 15.0, 2.0),
                bs_plane="yz",
                ris_panels=panels,
                ue_region_m=UeRegion(x_m=(0.0, 30.0), y_m=(0.0, 20.0), height_m=1.0),
            ),
            tiling=TilingSpec(total_tiles=6),
            channel=ChannelParams(direct_mix=(("IO", 0.7), ("SM", 0.3))),
            solver=SolverSettings(sinr_targets=(1.0,) * 6),
        ))
    if name == "NF":
        return _validated(Scenario(
            name="NF",
            n_users=3,
            rf=RfConstants(),
            geometry=ArrayGeometry(
                bs_position_m=(16.0, 4.0, 2.0),
                bs_plane="yz",
                ris_panels=(RisPanel(center_m=(15.0, 0.0, 3.0), plane="xz",
                                     rows=20, cols=240),),
                ue_region_m=UeRegion(x_m=(0.0, 30.0), y_m=(0.0, 20.0), height_m=1.0),
            ),
            tiling=TilingSpec(total_tiles=3),
            channel=ChannelParams(direct_mix=(("IO", 1.0),)),
            solver=SolverSettings(sinr_targets=(1.0,) * 3),
        ))
    raise ScenarioError(f"unknown preset {name!r}; expected 'FF' or 'NF'")


def resolve_scenario(ref: str) -> Scenario:
    """Resolve a CLI-style scenario reference: preset name or path to a YAML file."""
    if ref in ("FF", "NF"):
        return builtin_preset(ref)
    return load_scenario_path(ref)
