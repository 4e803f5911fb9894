"""Command line entry point: plan, bench, validate, render, list."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from kinocbs.bench import ALGORITHMS, BenchConfig, export_csv, run_benchmark, run_trial
from kinocbs.conflicts import verify_plan
from kinocbs.io import export_svg, load_plan, save_plan
from kinocbs.scenario import ScenarioError, bundled_names, load_scenario

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_DEFECT = 3


def _planner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="scenario JSON file or bundled scenario name")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default=None)
    p.add_argument("--deadline", type=float, default=None, help="wall-clock budget per solve (s)")
    p.add_argument("--N", dest="iterations", type=int, default=None, help="low-level iterations per call")
    p.add_argument("--B", dest="merge_threshold", type=int, default=None, help="merge threshold")
    p.add_argument("--dt", type=float, default=None, help="collision-check resolution (s)")
    p.add_argument("--seed", type=int, default=0)


def _config(args, trials: int = 1) -> tuple:
    scenario = load_scenario(args.scenario)
    cfg = BenchConfig.from_scenario(
        scenario, algorithm=args.algo, deadline=args.deadline, iterations=args.iterations,
        merge_threshold=args.merge_threshold, dt=args.dt, base_seed=args.seed, trials=trials,
    )
    return scenario, cfg


def cmd_plan(args) -> int:
    scenario, cfg = _config(args)
    row, result = run_trial(scenario, cfg, cfg.base_seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{scenario.name}_{cfg.algorithm}_s{cfg.base_seed}"
    print(json.dumps({"status": row.status, "success": row.success, "cost": row.cost,
                      "wallTime": round(row.wall_time, 3), "merges": row.merges}))
    if result.plan is None:
        return EXIT_FAILED
    save_plan(out / f"{stem}.json", result.plan, scenario, algorithm=cfg.algorithm,
              stats=result.stats.to_dict(),
              config={"N": cfg.iterations, "B": cfg.merge_threshold, "dt": cfg.dt, "seed": cfg.base_seed,
                      "deadline": cfg.deadline})
    export_svg(result.plan, scenario, out / f"{stem}.svg", cfg.dt)
    return EXIT_DEFECT if row.validator_violation else EXIT_OK


def cmd_bench(args) -> int:
    scenario, cfg = _config(args, trials=args.trials)
    report = run_benchmark(scenario, cfg, jobs=args.jobs)
    if args.out:
        export_csv(report, args.out, timing=not args.no_timing)
    print(json.dumps(report.summary()))
    return EXIT_DEFECT if report.validator_defects else EXIT_OK


def cmd_validate(args) -> int:
    plan, scenario = load_plan(args.plan)
    problems = verify_plan(plan, scenario.obstacles, args.dt)
    for p in problems:
        print(p)
    print("valid" if not problems else f"{len(problems)} problem(s)")
    return EXIT_DEFECT if problems else EXIT_OK


def cmd_render(args) -> int:
    plan, scenario = load_plan(args.plan)
    export_svg(plan, scenario, args.out, args.dt)
    return EXIT_OK


def cmd_list(args) -> int:
    for name in bundled_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kinocbs", description="Kinodynamic conflict-based search planner")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve one scenario, write plan JSON and SVG")
    _planner_flags(p)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run seeded trials, write CSV and print a summary")
    _planner_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV path")
    p.add_argument("--no-timing", action="store_true", help="leave wall-clock times out of the CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="re-check a stored plan")
    p.add_argument("plan")
    p.add_argument("--dt", type=float, default=0.01)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="draw a stored plan as SVG")
    p.add_argument("plan")
    p.add_argument("--out", required=True)
    p.add_argument("--dt", type=float, default=0.1)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
