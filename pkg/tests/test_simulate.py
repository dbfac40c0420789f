import math

import numpy as np
import pytest

from chainmatch.chains import enumerate_chains
from chainmatch.errors import ValidationError
from chainmatch.ingestion import IngestConfig, Instance, Provenance, generate_synthetic
from chainmatch.matcher import Objective, ObjectiveKind, solve
from chainmatch.model import Horizon
from chainmatch.simulate import SimConfig, monte_carlo, realize, sample_thresholds, write_trace
from support import trip

PROPOSED = Objective(ObjectiveKind.MAX_EXPECTED_PROFIT, 0.5)


def instance_of(trips, n_stations=4, round_trips=0):
    return Instance(Horizon(6), n_stations, tuple(trips), 0, Provenance.SYNTHETIC,
                    IngestConfig(cost_factor=0.2), round_trips)


def solved(trips, obj=PROPOSED):
    inst = instance_of(trips)
    return inst, solve(enumerate_chains(inst, 5), obj)


ACTIVE_PAIR = [trip("a", 0, 1, 1, 2, 10.0, cf=0.2), trip("b", 1, 0, 2, 3, 6.0, cf=0.2)]
MIXED_PAIR = [trip("a", 0, 1, 1, 2, 10.0, cf=0.2), trip("b", 1, 0, 2, 3, 8.0, cf=0.2, mu=5.0, sigma=2.0)]


def test_no_inactive_users_gives_empty_draw():
    d = sample_thresholds(instance_of(ACTIVE_PAIR), seed=1, n_samples=5)
    assert d.user_ids == () and d.values.shape == (5, 0)


def test_fixed_seed_same_draw():
    inst = instance_of(MIXED_PAIR)
    a, b = sample_thresholds(inst, 9, 100), sample_thresholds(inst, 9, 100)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, sample_thresholds(inst, 10, 100).values)


def test_threshold_moments():
    inst = instance_of([trip("a", 0, 1, 1, 2, 10.0, mu=8.0, sigma=2.0)])
    v = sample_thresholds(inst, 3, 100_000).values[:, 0]
    n = len(v)
    assert abs(v.mean() - 8.0) <= 3 * 2.0 / math.sqrt(n)
    # sd of the sample sd is about sigma / sqrt(2n)
    assert abs(v.std(ddof=1) - 2.0) <= 3 * 2.0 / math.sqrt(2 * n)


def test_all_active_always_activates():
    inst, sol = solved(ACTIVE_PAIR)
    r = realize(sol, {})
    assert r.activated == (True,) and r.profit == sol.profit and r.served == 2
    rep = monte_carlo(sol, inst, SimConfig(1000, 0))
    assert rep.std_profit == 0.0 and rep.mean_profit == sol.profit


def test_offer_above_threshold_kills_chain():
    _, sol = solved(MIXED_PAIR)
    assert sol.offered_prices["b"].value == 5.0
    assert realize(sol, {"b": 4.99}).activated == (False,)
    assert realize(sol, {"b": 4.99}).profit == 0.0
    assert realize(sol, {"b": 5.0}).activated == (True,)


def test_activation_frequency_single_inactive():
    inst, sol = solved(MIXED_PAIR)
    rep = monte_carlo(sol, inst, SimConfig(100_000, 42))
    assert abs(rep.activation_frequency[0] - 0.5) <= 0.005


def test_one_sample_report_equals_realize():
    inst, sol = solved(MIXED_PAIR)
    rep = monte_carlo(sol, inst, SimConfig(1, 5))
    r = realize(sol, sample_thresholds(inst, 5, 1), 0)
    assert rep.mean_profit == r.profit


def test_mean_converges_to_expected_profit():
    inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
    # Median offers equal mu, so nothing is clamped and (1 - alpha)^k is exact.
    sol = solve(enumerate_chains(inst, 5), PROPOSED)
    assert sol.clamp_events == 0 and any(c.n_inactive for c in sol.chains)
    n = 100_000
    rep = monte_carlo(sol, inst, SimConfig(n, 7))
    assert abs(rep.mean_profit - sol.expected_profit) <= 3 * rep.std_profit / math.sqrt(n)


def test_workers_do_not_change_results():
    inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
    sol = solve(enumerate_chains(inst, 5), PROPOSED)
    one = monte_carlo(sol, inst, SimConfig(20_000, 3, workers=1))
    four = monte_carlo(sol, inst, SimConfig(20_000, 3, workers=4))
    assert one == four


def test_vectorized_matches_scalar_realize():
    inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
    sol = solve(enumerate_chains(inst, 5), PROPOSED)
    rep = monte_carlo(sol, inst, SimConfig(300, 11))
    draw = sample_thresholds(inst, 11, 300)
    profits = [realize(sol, draw, k).profit for k in range(300)]
    assert rep.mean_profit == pytest.approx(math.fsum(profits) / 300, abs=1e-9)


def test_alpha_one_never_activates_inactive_chains():
    inst = instance_of(MIXED_PAIR)
    sol = solve(enumerate_chains(inst, 5), Objective(ObjectiveKind.MAX_SERVICE, 1.0))
    rep = monte_carlo(sol, inst, SimConfig(1000, 0))
    assert rep.activation_frequency == (0.0,) and rep.mean_profit == 0.0


def test_service_rate_counts_round_trip_users():
    inst = instance_of(ACTIVE_PAIR, round_trips=2)
    sol = solve(enumerate_chains(inst, 5), PROPOSED)
    assert monte_carlo(sol, inst, SimConfig(10, 0)).mean_service_rate == 0.5


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(0)
    with pytest.raises(ValidationError):
        SimConfig(10, threshold_sampling="uniform")


def test_trace_file(tmp_path):
    inst, sol = solved(MIXED_PAIR)
    write_trace(sol, inst, SimConfig(50, 1), tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "sample,profit,served" and len(lines) == 51
