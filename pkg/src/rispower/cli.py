"""Command-line entry point.

Data goes to files, progress and diagnostics to stderr.  Exit codes: 0 on
success, 1 on usage/validation errors, 2 when a run turns out infeasible or
fails numerically.  All randomness flows from --seed; when it is omitted a
seed is drawn and printed so the run can be reproduced.
"""

from __future__ import annotations

import argparse
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ao import run_ao
from .channel import dump_channels, load_channels, realize_channels
from .errors import InfeasibleError, NumericalFailureError, ScenarioError
from .experiments import (ExperimentSpec, emit_bench_data, emit_plot_data,
                          run_complexity_bench, run_experiment, write_metadata)
from .scenario import resolve_scenario, watts_to_dbm
from .tile_solver import GAM_TRACE_COLUMNS

OUTDIR_ENV = "RISPOWER_OUTDIR"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(","))


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


def build_parser() -> _Parser:
    parser = _Parser(prog="rispower", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="preset name (FF, NF) or path to a YAML scenario")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None,
                       help=f"output directory (default: ${OUTDIR_ENV} or cwd)")

    p_run = sub.add_parser("run", help="single optimization run, trace to file")
    common(p_run)
    p_run.add_argument("--k-tiles", type=_csv_ints, default=None,
                       help="tile count (single value for run)")
    p_run.add_argument("--targets-db", type=_csv_floats, default=None,
                       help="SINR target(s) in dB (scalar or one per user)")
    p_run.add_argument("--max-iters", type=int, default=None)
    p_run.add_argument("--no-projection", action="store_true")
    p_run.add_argument("--dump-channels", default=None, metavar="NPZ")
    p_run.add_argument("--replay-channels", default=None, metavar="NPZ")
    p_run.add_argument("--gam-trace", default=None, metavar="FILE",
                       help="also dump the last tile-solve ascent trace")

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep over (K, target) cells")
    common(p_sweep)
    p_sweep.add_argument("--k-tiles", type=_csv_ints, required=True,
                         help="comma-separated tile counts (0 = no-RIS baseline)")
    p_sweep.add_argument("--targets-db", type=_csv_floats, required=True)
    p_sweep.add_argument("--instances", type=int, default=50)
    p_sweep.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p_sweep.add_argument("--no-projection", action="store_true")

    p_bench = sub.add_parser("bench", help="tile-solve per-iteration timing grid")
    p_bench.add_argument("--k-tiles", type=_csv_ints, default=(4, 8))
    p_bench.add_argument("--bench-users", type=int, default=16)
    p_bench.add_argument("--bench-elements", type=int, default=3840,
                         help="total RIS elements held fixed across the grid")
    p_bench.add_argument("--iters", type=int, default=30,
                         help="timed iterations per cell (minimum 20)")
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--out", default=None)

    p_val = sub.add_parser("validate", help="check a scenario and print derived values")
    p_val.add_argument("--scenario", required=True)
    return parser


def _outdir(arg) -> Path:
    path = Path(arg or os.environ.get(OUTDIR_ENV, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed_of(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(63)
    _log(f"seed: {seed} (drawn; pass --seed {seed} to reproduce)")
    return seed


def _cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.k_tiles is not None:
        if len(args.k_tiles) != 1:
            raise ScenarioError("run: --k-tiles takes a single value")
        scenario = scenario.with_tiles(args.k_tiles[0])
    if args.targets_db is not None:
        targets = args.targets_db if len(args.targets_db) > 1 else args.targets_db[0]
        scenario = scenario.with_targets_db(targets)
    if args.max_iters is not None:
        scenario = scenario.with_solver(max_ao_iters=args.max_iters)
    seed = _seed_of(args)
    out = _outdir(args.out)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if args.replay_channels:
        channels = load_channels(args.replay_channels, scenario)
        _log(f"replayed channels from {args.replay_channels}")
    else:
        channels = realize_channels(scenario, rng)
    if args.dump_channels:
        dump_channels(channels, args.dump_channels)
        _log(f"channels dumped to {args.dump_channels}")

    result = run_ao(scenario, channels, rng=rng,
                    projection=not args.no_projection,
                    record_gam_trace=args.gam_trace is not None)

    trace_path = out / "run_trace.tsv"
    header = ("t\ttotal_power_dbm\tduality_gap\tpo_iters\tgam_iters\t"
              "projected\tcaps_raised\tprojection_delta_db")
    lines = [header]
    for rec in result.trace:
        lines.append(
            f"{rec.t}\t{rec.total_power_dbm:.12g}\t{rec.duality_gap:.6g}\t"
            f"{rec.po_iters}\t{rec.gam_iters}\t{int(rec.projected)}\t"
            f"{int(rec.caps_raised)}\t{rec.projection_delta_db:.6g}")
    trace_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if args.gam_trace:
        glines = ["\t".join(GAM_TRACE_COLUMNS)]
        for row in result.gam_trace:
            glines.append("\t".join(f"{x:.12g}" if isinstance(x, float) else str(x)
                                    for x in row))
        Path(args.gam_trace).write_text("\n".join(glines) + "\n", encoding="utf-8")

    final = result.trace[-1]
    _log(f"run: {len(result.trace)} iterations, final power "
         f"{final.total_power_dbm:.3f} dBm, converged={result.converged}")
    _log(f"trace written to {trace_path}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.targets_db is None:
        raise ScenarioError("sweep: --targets-db is required")
    seed = _seed_of(args)
    out = _outdir(args.out)
    spec = ExperimentSpec(
        scenario=scenario, k_tiles=args.k_tiles, targets_db=args.targets_db,
        n_instances=args.instances, seed=seed,
        projection=not args.no_projection, jobs=max(1, args.jobs))
    _log(f"sweep: {len(args.k_tiles) * len(args.targets_db)} cells x "
         f"{args.instances} instances (jobs={spec.jobs})")
    table = run_experiment(spec)
    emit_plot_data(table, out / "results.tsv")
    write_metadata(spec, table, out / "metadata.json")
    n_failed = sum(table.failures.values())
    if n_failed:
        _log(f"sweep: {n_failed} instance runs failed and were excluded")
    _log(f"results written to {out / 'results.tsv'}")
    return 0


def _cmd_bench(args) -> int:
    if args.iters < 20:
        raise ScenarioError("bench: refusing to time fewer than 20 iterations")
    seed = _seed_of(args)
    out = _outdir(args.out)
    rows, exponent = run_complexity_bench(
        args.k_tiles, args.bench_users, args.bench_elements,
        n_timed_iters=args.iters, seed=seed)
    emit_bench_data(rows, exponent, out / "bench.tsv")
    for r in rows:
        _log(f"bench: K={r.k_tiles} N_u={r.n_users} P={r.elements_per_tile} "
             f"-> {r.median_iter_seconds * 1e3:.3f} ms/iter")
    _log(f"bench: fitted exponent vs dual dimension: {exponent:.3f}")
    return 0


def _cmd_validate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    problems = scenario.validate()
    k = scenario.n_tiles
    print(f"scenario: {scenario.name}")
    print(f"users (N_u): {scenario.n_users}")
    print(f"bs antennas (M): {scenario.n_bs_antennas}")
    print(f"ris panels (Q): {len(scenario.geometry.ris_panels)}")
    print(f"ris elements (N_r): {scenario.n_ris_elements}")
    print(f"tiles (K): {k}")
    print(f"elements per tile (P): {scenario.elements_per_tile}")
    if k > 0:
        print(f"Z = P / N_u: {scenario.elements_per_tile / scenario.n_users:g}")
    print(f"noise power: {scenario.rf.noise_power_dbm_value():.2f} dBm")
    print(f"wavelength: {scenario.wavelength_m * 1e3:.3f} mm")
    targets_db = 10 * np.log10(np.asarray(scenario.solver.sinr_targets))
    print(f"sinr targets: {np.array2string(targets_db, precision=2)} dB")
    if problems:
        print("INVALID:")
        for p in problems:
            print(f"  - {p}")
        return 1
    print("all invariants hold")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "bench": _cmd_bench, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        _log(f"scenario error: {exc}")
        return 1
    except FileNotFoundError as exc:
        _log(f"file error: {exc}")
        return 1
    except (InfeasibleError, NumericalFailureError) as exc:
        _log(f"run failed: {exc}")
        return 2


def main_entry() -> None:
    sys.exit(main())
