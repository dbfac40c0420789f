"""Parameter sweeps over risk factor and cost factor, and their reports.

A sweep solves every (model, alpha, cost factor) cell of a grid on one
instance. For each cell, travel costs are recomputed as ``cf * base price``,
offers are re-priced at alpha, the packing problem is solved, and the
selection is evaluated analytically and by Monte Carlo. Base prices and
thresholds stay fixed across cells.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .chains import enumerate_chains
from .errors import IoError, ValidationError
from .ingestion import load_instance, read_json, write_json_atomic
from .matcher import Objective, ObjectiveKind, Solution, solve
from .simulate import SimConfig, monte_carlo

DEFAULT_ALPHAS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_COST_FACTORS = (0.2, 0.4, 0.6, 0.8, 1.0)
ALL_MODELS = (ObjectiveKind.MAX_SERVICE, ObjectiveKind.MAX_PROFIT, ObjectiveKind.MAX_EXPECTED_PROFIT)

MODEL_LABELS = {
    ObjectiveKind.MAX_SERVICE: "Max-Service",
    ObjectiveKind.MAX_PROFIT: "Max-Profit",
    ObjectiveKind.MAX_EXPECTED_PROFIT: "Proposed",
}

# Relative profit gains of the proposed model published for the NYC data
# set, kept only as a reference column next to this package's own numbers.
REFERENCE_GAINS = {
    ("vs_alpha", ObjectiveKind.MAX_PROFIT): 19.0,
    ("vs_alpha", ObjectiveKind.MAX_SERVICE): 52.0,
    ("vs_cost_factor", ObjectiveKind.MAX_PROFIT): 21.0,
    ("vs_cost_factor", ObjectiveKind.MAX_SERVICE): 57.0,
    ("service_vs_alpha", ObjectiveKind.MAX_PROFIT): 16.0,
    ("service_vs_alpha", ObjectiveKind.MAX_SERVICE): 17.0,
}


@dataclass(frozen=True)
class SweepSpec:
    seed: int
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    cf_grid: tuple[float, ...] = DEFAULT_COST_FACTORS
    models: tuple[ObjectiveKind, ...] = ALL_MODELS
    depth_cutoff: int | None = None  # None -> tau - 1
    instance_path: str | None = None
    n_samples: int = 2000
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.seed is None:
            raise ValidationError("a sweep needs an explicit seed")
        if not self.alpha_grid or not self.cf_grid or not self.models:
            raise ValidationError("sweep grids and model list must be nonempty")
        if any(not 0 < a <= 1 for a in self.alpha_grid):
            raise ValidationError("alpha grid values must lie in (0, 1]")
        if any(not 0 < c <= 1 for c in self.cf_grid):
            raise ValidationError("cost factor grid values must lie in (0, 1]")
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "cf_grid", tuple(float(c) for c in self.cf_grid))
        object.__setattr__(self, "models", tuple(ObjectiveKind(m) for m in self.models))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "alpha_grid": list(self.alpha_grid),
            "cf_grid": list(self.cf_grid),
            "models": [m.value for m in self.models],
            "depth_cutoff": self.depth_cutoff,
            "instance_path": self.instance_path,
            "n_samples": self.n_samples,
            "timeout_s": self.timeout_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        d = dict(d)
        for k in ("alpha_grid", "cf_grid", "models"):
            d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class SweepRecord:
    model: ObjectiveKind
    alpha: float
    cost_factor: float
    expected_profit: float
    realized_profit_mean: float
    realized_profit_std: float
    service_rate: float  # planned: percent of all users (round trips included) in selected chains
    served: int
    objective_value: float
    status: str
    realized_service_rate: float = 0.0  # Monte Carlo mean percent of users who actually ride
    wall_time_s: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "alpha": self.alpha,
            "cost_factor": self.cost_factor,
            "expected_profit": self.expected_profit,
            "realized_profit_mean": self.realized_profit_mean,
            "realized_profit_std": self.realized_profit_std,
            "service_rate": self.service_rate,
            "realized_service_rate": self.realized_service_rate,
            "served": self.served,
            "objective_value": self.objective_value,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepRecord:
        return cls(ObjectiveKind(d["model"]), d["alpha"], d["cost_factor"], d["expected_profit"],
                   d["realized_profit_mean"], d["realized_profit_std"], d["service_rate"],
                   d["served"], d["objective_value"], d["status"], d["realized_service_rate"])


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    records: tuple[SweepRecord, ...]
    total_users: int = 0

    def get(self, model: ObjectiveKind, alpha: float, cf: float) -> SweepRecord:
        for r in self.records:
            if r.model is model and r.alpha == alpha and r.cost_factor == cf:
                return r
        raise KeyError((model, alpha, cf))

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "total_users": self.total_users,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepResult:
        return cls(SweepSpec.from_dict(d["spec"]),
                   tuple(SweepRecord.from_dict(r) for r in d["records"]), d["total_users"])


def cell_seed(seed: int, i_cf: int, i_alpha: int) -> int:
    """Monte Carlo seed of one grid cell; shared by all models in the cell."""
    return int(np.random.SeedSequence([seed, i_cf, i_alpha]).generate_state(1, np.uint64)[0])


def run_cell(instance, spec: SweepSpec, model: ObjectiveKind, i_alpha: int, i_cf: int,
             pool=None) -> tuple[SweepRecord, Solution]:
    alpha, cf = spec.alpha_grid[i_alpha], spec.cf_grid[i_cf]
    t0 = time.perf_counter()
    if pool is None:
        depth = spec.depth_cutoff or instance.horizon.tau - 1
        pool = enumerate_chains(instance.with_cost_factor(cf), depth)
    sol = solve(pool, Objective(model, alpha), spec.timeout_s)
    rep = monte_carlo(sol, instance, SimConfig(spec.n_samples, cell_seed(spec.seed, i_cf, i_alpha)))
    rec = SweepRecord(
        model, alpha, cf, sol.expected_profit, rep.mean_profit, rep.std_profit,
        100.0 * sol.served_user_count / max(instance.total_users, 1), sol.served_user_count,
        sol.objective_value, sol.status, 100.0 * rep.mean_service_rate, time.perf_counter() - t0,
    )
    return rec, sol


def run_sweep(spec: SweepSpec, instance=None, workers: int = 1) -> SweepResult:
    """Solve every grid cell. Output order and content ignore ``workers``."""
    if instance is None:
        if spec.instance_path is None:
            raise ValidationError("sweep needs an instance or an instance_path")
        instance = load_instance(spec.instance_path)
    depth = spec.depth_cutoff or instance.horizon.tau - 1
    pools = {
        i_cf: enumerate_chains(instance.with_cost_factor(cf), depth)
        for i_cf, cf in enumerate(spec.cf_grid)
    }
    cells = [
        (i_cf, m, i_a)
        for i_cf in range(len(spec.cf_grid))
        for m in spec.models
        for i_a in range(len(spec.alpha_grid))
    ]

    def job(cell):
        i_cf, m, i_a = cell
        return run_cell(instance, spec, m, i_a, i_cf, pools[i_cf])[0]

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            records = list(ex.map(job, cells))
    else:
        records = [job(c) for c in cells]
    return SweepResult(spec, tuple(records), instance.total_users)


# ---------------------------------------------------------------------------
# Analyses
# ---------------------------------------------------------------------------

def chain_length_breakdown(sol: Solution, depth_cutoff: int | None = None) -> dict[int, dict[str, float]]:
    """Percent of expected profit and of served users contributed by each chain length."""
    top = depth_cutoff or max((len(c) for c in sol.chains), default=2)
    lengths = range(2, max(top, 2) + 1)
    profit = {d: [] for d in lengths}
    served = {d: 0 for d in lengths}
    for c, e in zip(sol.chains, sol.per_chain):
        profit[len(c)].append(e.expected_profit)
        served[len(c)] += len(c)
    total_p = math.fsum(x for v in profit.values() for x in v)
    total_s = sum(served.values())
    out = {}
    for d in lengths:
        out[d] = {
            "profit_share": 100.0 * math.fsum(profit[d]) / total_p if total_p else 0.0,
            "served_share": 100.0 * served[d] / total_s if total_s else 0.0,
        }
    return out


@dataclass(frozen=True)
class ServedRow:
    label: str
    served: int
    percent: float

    @property
    def display(self) -> str:
        return f"{self.percent:.2f}%"


def served_summary(solutions: Mapping[str, Solution | int], total_users: int,
                   baseline_round_trip_count: int) -> list[ServedRow]:
    """Served counts per model next to the round-trip baseline.

    Percentages use every user (round-trip users included) as denominator.
    Values in ``solutions`` may be solutions or bare served counts.
    """
    if total_users <= 0:
        raise ValidationError("total_users must be positive")
    rows = [ServedRow("Round-trip baseline", baseline_round_trip_count,
                      100.0 * baseline_round_trip_count / total_users)]
    for label, sol in solutions.items():
        n = sol if isinstance(sol, int) else sol.served_user_count
        rows.append(ServedRow(label, n, 100.0 * n / total_users))
    return rows


def relative_gains(result: SweepResult, alpha_for_cf: float | None = None) -> dict:
    """Percent by which the proposed model's summed profit exceeds each baseline.

    ``vs_alpha`` sums over alpha at the smallest cost factor; ``vs_cost_factor``
    sums over cost factors at ``alpha_for_cf`` (default: the grid alpha
    closest to 0.5). ``service_vs_alpha`` compares summed service rates over
    alpha at the smallest cost factor.
    """
    spec = result.spec
    cf0 = min(spec.cf_grid)
    if alpha_for_cf is None:
        alpha_for_cf = min(spec.alpha_grid, key=lambda a: (abs(a - 0.5), a))
    out = {}
    prop = ObjectiveKind.MAX_EXPECTED_PROFIT
    along_alpha = [(a, cf0) for a in spec.alpha_grid]
    along_cf = [(alpha_for_cf, c) for c in spec.cf_grid]
    for other in (ObjectiveKind.MAX_PROFIT, ObjectiveKind.MAX_SERVICE):
        if other not in spec.models or prop not in spec.models:
            continue
        for key, cells, metric in (
            ("vs_alpha", along_alpha, "expected_profit"),
            ("vs_cost_factor", along_cf, "expected_profit"),
            ("service_vs_alpha", along_alpha, "realized_service_rate"),
        ):
            p = math.fsum(getattr(result.get(prop, a, c), metric) for a, c in cells)
            o = math.fsum(getattr(result.get(other, a, c), metric) for a, c in cells)
            out[(key, other)] = {
                "artifact": 100.0 * (p - o) / abs(o) if o else math.inf,
                "reference": REFERENCE_GAINS[(key, other)],
            }
    return out


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def table_rows(result: SweepResult) -> tuple[list[str], list[list]]:
    """Cost factor x model rows, an (expected profit, realized service %) pair per alpha."""
    spec = result.spec
    header = ["cost_factor", "model"]
    for a in spec.alpha_grid:
        header += [f"profit@{a!r}", f"service@{a!r}"]
    rows = []
    for cf in spec.cf_grid:
        for m in spec.models:
            row = [cf, MODEL_LABELS[m]]
            for a in spec.alpha_grid:
                r = result.get(m, a, cf)
                row += [r.expected_profit, r.realized_service_rate]
            rows.append(row)
    return header, rows


def _write_csv(path: Path, header, rows) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    os.replace(tmp, path)


def emit_report(result: SweepResult, out_dir: str | os.PathLike,
                formats: Sequence[str] = ("json", "table", "long")) -> dict[str, Path]:
    """Write the sweep as JSON, a wide results table, and long-format plot data.

    Wall-clock timings go to ``timings.csv`` so the other files are
    byte-identical across runs with the same seed.
    """
    if not result.records:
        raise ValidationError("nothing to report: sweep has no records")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        if "json" in formats:
            paths["json"] = out / "sweep.json"
            write_json_atomic(paths["json"], result.to_dict(), indent=1, sort_keys=True)
        if "table" in formats:
            paths["table"] = out / "table.csv"
            _write_csv(paths["table"], *table_rows(result))
        if "long" in formats:
            paths["long"] = out / "long.csv"
            rows = []
            for r in result.records:
                for metric in ("expected_profit", "realized_profit_mean", "service_rate",
                               "realized_service_rate", "served"):
                    rows.append([r.model.value, r.alpha, r.cost_factor, metric, getattr(r, metric)])
            _write_csv(paths["long"], ["model", "alpha", "cf", "metric", "value"], rows)
        paths["timings"] = out / "timings.csv"
        _write_csv(paths["timings"], ["model", "alpha", "cf", "wall_time_s"],
                   [[r.model.value, r.alpha, r.cost_factor, r.wall_time_s] for r in result.records])
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return paths


def read_report(path: str | os.PathLike) -> SweepResult:
    return SweepResult.from_dict(read_json(path))


def read_table(path: str | os.PathLike) -> tuple[list[str], list[list]]:
    """Parse ``table.csv`` back into the header and typed rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(r[0]), r[1], *map(float, r[2:])] for r in reader]
    return header, rows
