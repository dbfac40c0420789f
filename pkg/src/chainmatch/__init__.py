"""Chain matching of one-way trips for round-trip car sharing."""

__version__ = "0.1.0"

from .chains import ChainPool, enumerate_chains, pool_stats
from .errors import ChainMatchError, IoError, PoolOverflow, ValidationError
from .ingestion import (
    IngestConfig, Instance, generate_synthetic, ingest_csv, load_instance, save_instance,
)
from .matcher import (
    Objective, ObjectiveKind, Solution, brute_force_oracle, build_problem, price_solution,
    solve, solve_exact, solve_greedy,
)
from .model import Activity, Chain, Horizon, ThresholdDist, TripRequest
from .pricing import activation_probability, chain_profit, expected_chain_profit, normal_quantile, offered_price
from .simulate import SimConfig, SimReport, monte_carlo
from .experiments import SweepSpec, emit_report, run_sweep

__all__ = [
    "Activity",
    "Chain",
    "ChainMatchError",
    "ChainPool",
    "Horizon",
    "IngestConfig",
    "Instance",
    "IoError",
    "Objective",
    "ObjectiveKind",
    "PoolOverflow",
    "SimConfig",
    "SimReport",
    "Solution",
    "SweepSpec",
    "ThresholdDist",
    "TripRequest",
    "ValidationError",
    "activation_probability",
    "brute_force_oracle",
    "build_problem",
    "chain_profit",
    "emit_report",
    "enumerate_chains",
    "expected_chain_profit",
    "generate_synthetic",
    "ingest_csv",
    "load_instance",
    "monte_carlo",
    "normal_quantile",
    "offered_price",
    "pool_stats",
    "price_solution",
    "run_sweep",
    "save_instance",
    "solve",
    "solve_exact",
    "solve_greedy",
]
