"""Monte-Carlo harness: tile-count / target sweeps and the timing benchmark.

One experiment fixes a scenario and sweeps (tile count, SINR target) cells.
Every instance draws fresh UE positions and fading from a hierarchically
split seed; the same instance index sees the same physical channels in every
cell (tiling is bookkeeping only), so the cells are directly comparable.
Aggregation averages powers in watts per iteration before converting to dBm.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ao import run_ao
from .channel import realize_channels
from .errors import InfeasibleError, NumericalFailureError
from .scenario import Scenario, serialize_scenario, watts_to_dbm
from .tile_solver import _evaluate, build_workspace, solve_to2
from .tiles import GcQuadratics, TileBasis, build_gc_quadratics, stack_cascaded


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: Scenario
    k_tiles: tuple[int, ...]          # 0 means the no-RIS baseline
    targets_db: tuple[float, ...]
    n_instances: int = 50
    seed: int = 0
    projection: bool = True
    jobs: int = 1


@dataclass(frozen=True)
class ResultRow:
    config_id: str
    iteration: int
    mean_power_dbm: float
    std_dbm: float
    n_instances: int


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[ResultRow, ...]
    #: per-config count of instances that failed (infeasible precoder etc.)
    failures: dict[str, int] = field(default_factory=dict)

    def series(self, config_id: str) -> list[ResultRow]:
        return [r for r in self.rows if r.config_id == config_id]

    def final_mean_dbm(self, config_id: str) -> float:
        rows = self.series(config_id)
        return rows[-1].mean_power_dbm


def config_label(k: int, target_db: float) -> str:
    base = "noris" if k == 0 else f"K{k}"
    return f"{base}_t{target_db:g}dB"


def _instance_trajectories(scenario: Scenario, spec: ExperimentSpec,
                           instance_seq: np.random.SeedSequence):
    """Power trajectories (padded to max_ao_iters) for one instance, all cells."""
    children = instance_seq.spawn(1 + len(spec.k_tiles) * len(spec.targets_db))
    channels_full = realize_channels(scenario, np.random.default_rng(children[0]))
    max_iters = scenario.solver.max_ao_iters
    out = {}
    idx = 1
    for k in spec.k_tiles:
        channels = channels_full.retiled(k)
        for target_db in spec.targets_db:
            rng_alpha = np.random.default_rng(children[idx])
            idx += 1
            label = config_label(k, target_db)
            sc = scenario.with_targets_db(target_db)
            try:
                result = run_ao(sc, channels, rng=rng_alpha,
                                projection=spec.projection,
                                record_projection_delta=False)
            except (InfeasibleError, NumericalFailureError):
                out[label] = None
                continue
            powers = result.power_trajectory_w
            if powers.shape[0] < max_iters:   # converged early: power holds
                powers = np.concatenate([
                    powers, np.full(max_iters - powers.shape[0], powers[-1])])
            out[label] = powers
    return out


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Run all (tile count, target) cells over the requested instances.

    Failed instances are excluded from the aggregates and counted per cell;
    parallel execution reduces in instance order, so the aggregates do not
    depend on the worker count.
    """
    if spec.n_instances < 1:
        raise ValueError("run_experiment: n_instances must be >= 1")
    for k in spec.k_tiles:
        if k > 0 and spec.scenario.n_ris_elements % k != 0:
            raise ValueError(
                f"run_experiment: K={k} does not divide "
                f"{spec.scenario.n_ris_elements} elements evenly")
    seqs = np.random.SeedSequence(spec.seed).spawn(spec.n_instances)
    args = [(spec.scenario, spec, s) for s in seqs]
    if spec.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            per_instance = list(pool.map(_instance_worker, args))
    else:
        per_instance = [_instance_worker(a) for a in args]

    labels = [config_label(k, t) for k in spec.k_tiles for t in spec.targets_db]
    max_iters = spec.scenario.solver.max_ao_iters
    rows: list[ResultRow] = []
    failures: dict[str, int] = {}
    for label in labels:
        trajs = [inst[label] for inst in per_instance]
        good = [t for t in trajs if t is not None]
        failures[label] = len(trajs) - len(good)
        if not good:
            continue
        stacked = np.array(good)                     # (n_good, max_iters)
        mean_w = stacked.mean(axis=0)
        dbm = watts_to_dbm(stacked)
        std_dbm = dbm.std(axis=0, ddof=0)
        for it in range(max_iters):
            rows.append(ResultRow(
                config_id=label, iteration=it + 1,
                mean_power_dbm=float(watts_to_dbm(mean_w[it])),
                std_dbm=float(std_dbm[it]),
                n_instances=len(good)))
    return ResultTable(rows=tuple(rows), failures=failures)


def _instance_worker(arg):
    scenario, spec, seq = arg
    return _instance_trajectories(scenario, spec, seq)


# --------------------------------------------------------------------------
# Complexity benchmark
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    k_tiles: int
    n_users: int
    elements_per_tile: int
    median_iter_seconds: float


def _synthetic_workspace(k: int, n_users: int, p: int, m: int, rng):
    """Random but well-posed dual-solve workspace of the requested dimensions."""
    n = k * n_users
    direct = (rng.standard_normal((n_users, m))
              + 1j * rng.standard_normal((n_users, m)))
    cascaded = (rng.standard_normal((n_users, n, m))
                + 1j * rng.standard_normal((n_users, n, m))) / np.sqrt(m)
    basis = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(k, n_users, p)))
    gc = build_gc_quadratics(TileBasis(basis=basis))
    v = (rng.standard_normal((m, n_users))
         + 1j * rng.standard_normal((m, n_users))) / np.sqrt(m)
    g = (rng.standard_normal(n_users) + 1j * rng.standard_normal(n_users))
    noise = np.ones(n_users)
    caps = np.full(n_users, 0.5)
    return build_workspace(direct, cascaded, gc, v, g, noise, caps)


def run_complexity_bench(k_values, n_users: int, n_ris_elements: int,
                         m_antennas: int = 16, n_timed_iters: int = 20,
                         seed: int = 0):
    """Median wall time of one dual-ascent iteration per (K, N_u, P) cell.

    Returns (rows, fitted_exponent): the exponent is the slope of
    log(time) vs log(K * N_u), i.e. the measured power of the dual matrix
    dimension.
    """
    if n_timed_iters < 20:
        raise ValueError("run_complexity_bench: need at least 20 timed iterations")
    rows = []
    for k in k_values:
        if n_ris_elements % k != 0:
            raise ValueError(f"bench: K={k} does not divide N_r={n_ris_elements}")
        p = n_ris_elements // k
        rng = np.random.default_rng(seed)
        ws = _synthetic_workspace(k, n_users, p, m_antennas, rng)
        lam = np.full(n_users, 0.1)
        mu = np.full(k, 0.1)
        delta = 1e-3
        for _ in range(3):   # warm-up (allocations, BLAS thread spin-up)
            _evaluate(lam, mu, ws)
        times = []
        for _ in range(n_timed_iters):
            start = time.perf_counter()
            ev = _evaluate(lam, mu, ws)
            lam = np.maximum(lam + delta * ev.grad_lam, 0.0)
            mu = np.maximum(mu + delta * ev.grad_mu, 0.0)
            times.append(time.perf_counter() - start)
        rows.append(BenchRow(
            k_tiles=k, n_users=n_users, elements_per_tile=p,
            median_iter_seconds=float(np.median(times))))
    dims = np.log([r.k_tiles * r.n_users for r in rows])
    logt = np.log([r.median_iter_seconds for r in rows])
    exponent = float(np.polyfit(dims, logt, 1)[0]) if len(rows) > 1 else float("nan")
    return rows, exponent


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------

def emit_plot_data(table: ResultTable, path) -> None:
    """Write the aggregate table as tab-separated text, one row per
    (config, iteration)."""
    if not table.rows:
        raise ValueError("emit_plot_data: empty result table")
    lines = ["config_id\titeration\tmean_power_dbm\tstd_dbm\tn_instances"]
    for r in table.rows:
        lines.append(f"{r.config_id}\t{r.iteration}\t{r.mean_power_dbm:.12g}"
                     f"\t{r.std_dbm:.12g}\t{r.n_instances}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def emit_bench_data(rows, exponent: float, path) -> None:
    if not rows:
        raise ValueError("emit_bench_data: empty bench table")
    lines = ["k_tiles\tn_users\telements_per_tile\tmedian_iter_seconds"]
    for r in rows:
        lines.append(f"{r.k_tiles}\t{r.n_users}\t{r.elements_per_tile}"
                     f"\t{r.median_iter_seconds:.6g}")
    lines.append(f"# fitted_exponent_vs_dual_dim\t{exponent:.4f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _git_revision():
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() if out.returncode == 0 else None
    except OSError:
        return None


def write_metadata(spec: ExperimentSpec, table: ResultTable, path) -> None:
    """Companion file tying an output to its scenario, seed and code revision."""
    doc = {
        "scenario_name": spec.scenario.name,
        "scenario_sha256": hashlib.sha256(
            serialize_scenario(spec.scenario).encode()).hexdigest(),
        "seed": spec.seed,
        "n_instances": spec.n_instances,
        "projection": spec.projection,
        "k_tiles": list(spec.k_tiles),
        "targets_db": list(spec.targets_db),
        "failures": dict(sorted(table.failures.items())),
        "tool_version": __version__,
        "git_revision": _git_revision(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
