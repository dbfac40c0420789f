"""Monte Carlo evaluation of a priced solution.

Each sample draws every inactive user's price threshold from their
(untruncated) Gaussian. A chain runs only if every inactive member accepts,
i.e. their offer is at or below the drawn threshold. Active members always
accept. Realized profit is the sum of the chain profits of the chains that
run.

Samples are generated in fixed-size chunks, each with its own seed derived
from the master seed. Results do not depend on how many workers evaluate
the chunks.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .errors import IoError, ValidationError
from .matcher import Solution, price_solution

CHUNK = 8192


@dataclass(frozen=True)
class SimConfig:
    n_samples: int = 10_000
    rng_seed: int = 0
    threshold_sampling: str = "gaussian"
    workers: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("n_samples must be >= 1")
        if self.threshold_sampling != "gaussian":
            raise ValidationError(f"unsupported sampling {self.threshold_sampling!r}")


@dataclass(frozen=True)
class ThresholdDraw:
    """Thresholds for every inactive user of an instance; one row per sample."""

    user_ids: tuple[str, ...]
    values: np.ndarray  # shape (n_samples, len(user_ids))

    def row(self, k: int) -> dict[str, float]:
        return dict(zip(self.user_ids, self.values[k].tolist()))


@dataclass(frozen=True)
class Realization:
    activated: tuple[bool, ...]
    profit: float
    served: int


@dataclass(frozen=True)
class SimReport:
    n_samples: int
    mean_profit: float
    std_profit: float
    mean_service_rate: float
    expected_profit: float  # analytic, for comparison
    activation_frequency: tuple[float, ...]
    clamp_events: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["activation_frequency"] = list(self.activation_frequency)
        return d


def _inactive(instance) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    trips = [t for t in instance.trips if t.is_inactive]
    ids = tuple(t.user_id for t in trips)
    mu = np.array([t.threshold.mu for t in trips], dtype=float)
    sigma = np.array([t.threshold.sigma for t in trips], dtype=float)
    return ids, mu, sigma


def _chunk(mu: np.ndarray, sigma: np.ndarray, seed: int, index: int, size: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed & (2**64 - 1), spawn_key=(index,))
    return np.random.default_rng(ss).normal(mu, sigma, size=(size, len(mu)))


def _chunk_sizes(n: int) -> list[int]:
    full, rem = divmod(n, CHUNK)
    return [CHUNK] * full + ([rem] if rem else [])


def sample_thresholds(instance, seed: int, n_samples: int = 1) -> ThresholdDraw:
    ids, mu, sigma = _inactive(instance)
    parts = [_chunk(mu, sigma, seed, k, m) for k, m in enumerate(_chunk_sizes(n_samples))]
    values = np.concatenate(parts) if parts else np.empty((0, len(ids)))
    return ThresholdDraw(ids, values)


def _accepts(sol: Solution, uid: str, threshold: float) -> bool:
    if sol.price_alpha == 1.0:
        # No incentive offered: an inactive user stays inactive.
        return False
    return sol.offered_prices[uid].value <= threshold


def _priced(sol: Solution) -> Solution:
    return sol if sol.per_chain else price_solution(sol)


def realize(sol: Solution, draw: Mapping[str, float] | ThresholdDraw, sample: int = 0) -> Realization:
    """Activate chains against one set of drawn thresholds."""
    sol = _priced(sol)
    thresholds = draw.row(sample) if isinstance(draw, ThresholdDraw) else draw
    activated = []
    for c in sol.chains:
        activated.append(all(_accepts(sol, t.user_id, thresholds[t.user_id])
                             for t in c.trips if t.is_inactive))
    profit = math.fsum(e.profit for e, a in zip(sol.per_chain, activated) if a)
    served = sum(len(c) for c, a in zip(sol.chains, activated) if a)
    return Realization(tuple(activated), profit, served)


def monte_carlo(sol: Solution, instance, cfg: SimConfig | None = None) -> SimReport:
    cfg = cfg or SimConfig()
    sol = _priced(sol)
    ids, mu, sigma = _inactive(instance)
    col = {u: k for k, u in enumerate(ids)}
    profits = np.array([e.profit for e in sol.per_chain], dtype=float)
    sizes = np.array([len(c) for c in sol.chains], dtype=float)
    no_offer = sol.price_alpha == 1.0
    plans = []
    for c in sol.chains:
        inactive = [t.user_id for t in c.trips if t.is_inactive]
        cols = np.array([col[u] for u in inactive], dtype=int)
        offers = np.array([sol.offered_prices[u].value for u in inactive], dtype=float)
        plans.append((cols, offers, bool(inactive) and no_offer))

    def run(job):
        k, m = job
        draws = _chunk(mu, sigma, cfg.rng_seed, k, m)
        act = np.ones((m, len(plans)), dtype=bool)
        for j, (cols, offers, dead) in enumerate(plans):
            if dead:
                act[:, j] = False
            elif len(cols):
                act[:, j] = np.all(draws[:, cols] >= offers, axis=1)
        return act

    jobs = list(enumerate(_chunk_sizes(cfg.n_samples)))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            acts = list(pool.map(run, jobs))
    else:
        acts = [run(j) for j in jobs]
    act = np.concatenate(acts) if acts else np.ones((0, len(plans)), dtype=bool)

    per_sample = [math.fsum(profits[row]) for row in act]
    n = cfg.n_samples
    mean = math.fsum(per_sample) / n
    var = math.fsum((p - mean) ** 2 for p in per_sample) / (n - 1) if n > 1 else 0.0
    denom = max(instance.total_users, 1)
    service = float(np.mean(act @ sizes)) / denom if len(plans) else 0.0
    freq = tuple(float(f) for f in act.mean(axis=0)) if len(plans) else ()
    clamps = {"low": 0, "high": 0}
    for p in sol.offered_prices.values():
        if p.clamped:
            clamps[p.clamped] += 1
    return SimReport(n, mean, math.sqrt(var), service, sol.expected_profit, freq, clamps)


def write_trace(sol: Solution, instance, cfg: SimConfig, path: str | os.PathLike) -> None:
    """Per-sample CSV trace: sample index, realized profit, users served."""
    draw = sample_thresholds(instance, cfg.rng_seed, cfg.n_samples)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample", "profit", "served"])
            for k in range(cfg.n_samples):
                r = realize(sol, draw, k)
                w.writerow([k, repr(r.profit), r.served])
    except OSError as exc:
        raise IoError(str(exc)) from exc
