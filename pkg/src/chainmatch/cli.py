"""Command-line entry point: ``chainmatch <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 solver timeout (incumbent
written), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .chains import dump_pool_jsonl, enumerate_chains, pool_stats
from .errors import ChainMatchError, IoError, ValidationError
from .experiments import SweepSpec, emit_report, read_report, run_sweep
from .ingestion import (
    IngestConfig, generate_synthetic, ingest_csv, load_instance, save_instance, write_json_atomic,
)
from .matcher import Objective, ObjectiveKind, load_solution, save_solution, solve
from .simulate import SimConfig, monte_carlo, write_trace

EXIT_OK, EXIT_VALIDATION, EXIT_TIMEOUT, EXIT_IO = 0, 2, 3, 4


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=None, help="master random seed")
    g.add_argument("--depth", type=int, default=None, help="maximum chain length (default tau-1)")
    g.add_argument("--alpha", type=float, default=0.5, help="risk factor")
    g.add_argument("--cost-factor", type=float, default=None, help="travel cost / base price")
    g.add_argument("--model", choices=[k.value for k in ObjectiveKind], default="proposed")
    g.add_argument("--timeout-s", type=float, default=60.0)
    g.add_argument("--out-dir", type=Path, default=Path("."))
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    # Global options attach to each subcommand; putting them on the top-level
    # parser too would let subparser defaults clobber values given earlier.
    parser = argparse.ArgumentParser(prog="chainmatch",
                                     description="N-user chain matching for round-trip car sharing")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic instance")
    p.add_argument("--n-users", type=int, required=True)
    p.add_argument("--n-stations", type=int, required=True)
    p.add_argument("--active-fraction", type=float, default=0.8)
    p.add_argument("--sigma", type=float, default=1.0, help="threshold std. dev. (currency)")
    p.add_argument("--fare-min", type=float, default=5.0)
    p.add_argument("--fare-max", type=float, default=40.0)

    p = sub.add_parser("ingest", parents=[common], help="build an instance from a trip CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--slot-minutes", type=float, default=10.0)
    p.add_argument("--tau", type=int, default=6)
    p.add_argument("--active-fraction", type=float, default=0.8)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--regions-per-zone", type=int, default=1)
    p.add_argument("--window-start", default=None)

    p = sub.add_parser("enumerate", parents=[common], help="enumerate feasible chains")
    p.add_argument("instance", type=Path)

    p = sub.add_parser("solve", parents=[common], help="solve one matching problem")
    p.add_argument("instance", type=Path)
    p.add_argument("--method", choices=["exact", "greedy"], default="exact")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo evaluation of a solution")
    p.add_argument("instance", type=Path)
    p.add_argument("solution", type=Path)
    p.add_argument("--n-samples", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", action="store_true", help="also write a per-sample CSV trace")

    p = sub.add_parser("sweep", parents=[common], help="risk x cost factor parameter sweep")
    p.add_argument("instance", type=Path)
    p.add_argument("--alphas", type=_floats, default=(0.2, 0.4, 0.6, 0.8, 1.0))
    p.add_argument("--cost-factors", type=_floats, default=(0.2, 0.4, 0.6, 0.8, 1.0))
    p.add_argument("--models", default="max-service,max-profit,proposed")
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("report", parents=[common], help="re-emit report files from sweep.json")
    p.add_argument("sweep_json", type=Path)
    return parser


def _instance_for(args):
    inst = load_instance(args.instance)
    if args.cost_factor is not None:
        inst = inst.with_cost_factor(args.cost_factor)
    return inst


def _depth(args, inst) -> int:
    return args.depth or inst.horizon.tau - 1


def cmd_gen(args) -> int:
    cfg = IngestConfig(
        active_fraction=args.active_fraction, sigma_fixed=args.sigma,
        cost_factor=args.cost_factor or 0.2, rng_seed=args.seed or 0,
        fare_min=args.fare_min, fare_max=args.fare_max,
    )
    inst = generate_synthetic(args.n_users, args.n_stations, cfg)
    path = args.out_dir / "instance.json"
    save_instance(inst, path)
    print(f"wrote {path} ({len(inst.trips)} trips)")
    return EXIT_OK


def cmd_ingest(args) -> int:
    cfg = IngestConfig(
        slot_minutes=args.slot_minutes, tau=args.tau, active_fraction=args.active_fraction,
        cost_factor=args.cost_factor or 0.2, sigma_fixed=args.sigma, rng_seed=args.seed or 0,
        regions_per_zone=args.regions_per_zone, window_start=args.window_start,
    )
    inst, removed = ingest_csv(args.csv, cfg)
    path = args.out_dir / "instance.json"
    save_instance(inst, path)
    print(f"wrote {path}: kept {len(inst.trips)} trips, removed {removed}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    inst = _instance_for(args)
    pool = enumerate_chains(inst, _depth(args, inst))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "pool.jsonl"
    dump_pool_jsonl(pool, path)
    print(json.dumps({"chains": len(pool), "by_length": pool_stats(pool)}))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _instance_for(args)
    pool = enumerate_chains(inst, _depth(args, inst))
    sol = solve(pool, Objective(ObjectiveKind(args.model), args.alpha), args.timeout_s, args.method)
    path = args.out_dir / "solution.json"
    save_solution(sol, path, inst.config.cost_factor)
    print(json.dumps({
        "status": sol.status, "objective_value": sol.objective_value,
        "served": sol.served_user_count, "expected_profit": sol.expected_profit,
    }))
    return EXIT_TIMEOUT if sol.status == "timeout" else EXIT_OK


def cmd_simulate(args) -> int:
    inst = _instance_for(args)
    sol = load_solution(args.solution, inst)
    cfg = SimConfig(args.n_samples, args.seed or 0, workers=args.workers)
    rep = monte_carlo(sol, inst, cfg)
    path = args.out_dir / "sim.json"
    write_json_atomic(path, rep.to_dict(), indent=1, sort_keys=True)
    if args.trace:
        write_trace(sol, inst, cfg, args.out_dir / "trace.csv")
    print(json.dumps({"mean_profit": rep.mean_profit, "expected_profit": rep.expected_profit,
                      "mean_service_rate": rep.mean_service_rate}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.seed is None:
        raise ValidationError("sweep requires --seed")
    models = tuple(ObjectiveKind(m.strip()) for m in args.models.split(",") if m.strip())
    spec = SweepSpec(
        seed=args.seed, alpha_grid=args.alphas, cf_grid=args.cost_factors, models=models,
        depth_cutoff=args.depth, instance_path=str(args.instance), n_samples=args.n_samples,
        timeout_s=args.timeout_s,
    )
    result = run_sweep(spec, workers=args.workers)
    paths = emit_report(result, args.out_dir)
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    if any(r.status == "timeout" for r in result.records):
        return EXIT_TIMEOUT
    return EXIT_OK


def cmd_report(args) -> int:
    paths = emit_report(read_report(args.sweep_json), args.out_dir)
    print(json.dumps({k: str(v) for k, v in paths.items()}))
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen, "ingest": cmd_ingest, "enumerate": cmd_enumerate, "solve": cmd_solve,
    "simulate": cmd_simulate, "sweep": cmd_sweep, "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s:%(name)s:%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (IoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ChainMatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
