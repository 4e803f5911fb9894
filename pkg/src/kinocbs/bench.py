"""Benchmark harness: repeated seeded solves, re-validation, aggregates and CSV export."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from kinocbs.baselines import crrt_plan, prrt_plan
from kinocbs.conflicts import verify_plan
from kinocbs.scenario import Scenario
from kinocbs.search import SolveConfig, SolveResult, solve

log = logging.getLogger(__name__)

ALGORITHMS = {"kcbs": solve, "crrt": crrt_plan, "prrt": prrt_plan}


@dataclass(frozen=True)
class BenchConfig:
    algorithm: str = "kcbs"
    trials: int = 10
    deadline: float = 60.0
    iterations: int = 1000
    merge_threshold: int = 20
    dt: float = 0.1
    base_seed: int = 0
    step: float = 0.05

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.deadline > 0:
            raise ValueError("deadline must be positive")

    def solve_config(self, seed: int) -> SolveConfig:
        return SolveConfig(iterations=self.iterations, merge_threshold=self.merge_threshold, dt=self.dt,
                           seed=seed, deadline=self.deadline, step=self.step)

    @classmethod
    def from_scenario(cls, scenario: Scenario, **overrides) -> "BenchConfig":
        d = scenario.defaults
        base = dict(
            algorithm=d.get("algorithm", "kcbs"),
            deadline=float(d.get("deadline", 60.0)),
            iterations=int(d.get("iterations", 1000)),
            merge_threshold=int(d.get("mergeThreshold", 20)),
            dt=float(d.get("dt", 0.1)),
            step=float(d.get("step", 0.05)),
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


@dataclass(frozen=True)
class TrialRow:
    seed: int
    success: bool
    wall_time: float
    cost: float
    merges: int
    final_robot_count: int
    status: str = ""
    validator_violation: bool = False


CSV_HEADER = ["seed", "success", "wallTime", "cost", "merges", "finalRobotCount", "status", "validatorViolation"]


@dataclass
class BenchReport:
    scenario: str
    config: BenchConfig
    rows: list[TrialRow] = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return sum(r.success for r in self.rows) / len(self.rows) if self.rows else 0.0

    @property
    def mean_time_of_successes(self) -> float:
        times = [r.wall_time for r in self.rows if r.success]
        return math.fsum(times) / len(times) if times else math.nan

    @property
    def merge_rate(self) -> float:
        ok = [r for r in self.rows if r.success]
        return sum(r.merges > 0 for r in ok) / len(ok) if ok else 0.0

    @property
    def validator_defects(self) -> int:
        return sum(r.validator_violation for r in self.rows)

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "algorithm": self.config.algorithm,
            "trials": len(self.rows),
            "successRate": self.success_rate,
            "meanTimeOfSuccesses": self.mean_time_of_successes,
            "mergeRate": self.merge_rate,
            "validatorDefects": self.validator_defects,
        }


def run_trial(scenario: Scenario, config: BenchConfig, seed: int) -> tuple[TrialRow, SolveResult]:
    planner = ALGORITHMS[config.algorithm]
    result = planner(scenario.models(), scenario.environment(), config.solve_config(seed))
    violation = False
    success = result.success
    if success:
        problems = verify_plan(result.plan, scenario.obstacles, config.dt / 10)
        if problems:
            log.error("seed %d: plan failed re-validation: %s", seed, problems[0])
            violation = True
            success = False
    st = result.stats
    row = TrialRow(
        seed=seed,
        success=success,
        wall_time=st.wall_time,
        cost=result.plan.cost if result.success else math.inf,
        merges=st.merges,
        final_robot_count=st.final_robot_count,
        status=result.status if not violation else "validator_violation",
        validator_violation=violation,
    )
    return row, result


def _row_only(args) -> TrialRow:
    return run_trial(*args)[0]


def run_benchmark(scenario: Scenario, config: BenchConfig, jobs: int = 1) -> BenchReport:
    seeds = range(config.base_seed, config.base_seed + config.trials)
    if jobs <= 1:
        rows = [run_trial(scenario, config, s)[0] for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_row_only, [(scenario, config, s) for s in seeds]))
    return BenchReport(scenario.name, config, rows)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def report_csv(report: BenchReport, timing: bool = True) -> str:
    header = list(CSV_HEADER)
    names = [f.name for f in fields(TrialRow)]
    if not timing:
        header.remove("wallTime")
        names.remove("wall_time")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in report.rows:
        w.writerow([_fmt(getattr(row, n)) for n in names])
    return buf.getvalue()


def export_csv(report: BenchReport, path: str | Path, timing: bool = True) -> None:
    path = Path(path)
    try:
        path.write_text(report_csv(report, timing), encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write CSV report to {path}: {e.strerror or e}") from e


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
