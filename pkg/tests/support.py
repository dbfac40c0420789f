"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import random

from chainmatch.ingestion import IngestConfig, Instance, Provenance
from chainmatch.model import Activity, Horizon, ThresholdDist, TripRequest, chain_feasible
from chainmatch.pricing import apply_cost_factor

# Verdict lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def trip(uid, s, e, t0, t1, price=10.0, cf=None, mu=None, sigma=1.0):
    """Compact trip constructor; ``mu`` makes the user inactive."""
    cost = apply_cost_factor(price, cf) if cf else 0.0
    if mu is None:
        return TripRequest(uid, s, e, t0, t1, price, cost)
    return TripRequest(uid, s, e, t0, t1, price, cost, Activity.INACTIVE, ThresholdDist(mu, sigma))


def random_small_instance(seed: int, max_users: int = 12, max_stations: int = 6, tau: int = 6,
                          cf: float | None = None) -> Instance:
    """Little instance with a few planted cycles plus random trips, so chains
    overlap and the packing choice is not trivial."""
    rng = random.Random(seed)
    n_users = rng.randint(min(6, max_users), max_users)
    n_stations = rng.randint(2, max_stations)
    cf = cf if cf is not None else rng.choice((0.2, 0.4, 0.6, 0.8, 1.0))
    legs: list[tuple[int, int, int, int]] = []
    while len(legs) < n_users:
        if rng.random() < 0.5:
            d = rng.randint(2, min(4, tau - 1, n_users - len(legs) + 1))
            if len(legs) + d > n_users:
                d = 1
        else:
            d = 1
        t0 = rng.randint(1, tau - d)
        if d == 1:
            st = rng.randrange(n_stations)
            legs.append((st, (st + rng.randrange(1, n_stations)) % n_stations, t0, t0 + 1))
            continue
        stations = [rng.randrange(n_stations)]
        for _ in range(d - 1):
            stations.append((stations[-1] + rng.randrange(1, n_stations)) % n_stations)
        if stations[-1] == stations[0]:
            stations[-1] = (stations[0] + 1) % n_stations
            if d > 2 and stations[-1] == stations[-2]:
                continue
        stations.append(stations[0])
        for k in range(d):
            legs.append((stations[k], stations[k + 1], t0 + k, t0 + k + 1))
    trips = []
    for i, (s, e, t0, t1) in enumerate(legs):
        price = rng.randint(500, 4000) / 100
        mu = rng.randint(0, round(price * 100)) / 100 if rng.random() < 0.4 else None
        trips.append(trip(f"u{i:02d}", s, e, t0, t1, price, cf, mu, sigma=rng.choice((0.5, 1.0, 2.0))))
    cfg = IngestConfig(tau=tau, cost_factor=cf, rng_seed=seed)
    return Instance(Horizon(tau), n_stations, tuple(trips), seed, Provenance.SYNTHETIC, cfg)


def brute_force_chains(trips, depth: int) -> set[tuple[str, ...]]:
    """Every ordered subset of length 2..depth that is a feasible chain."""
    out = set()
    for d in range(2, depth + 1):
        for perm in itertools.permutations(trips, d):
            if chain_feasible(perm):
                out.add(tuple(t.user_id for t in perm))
    return out


def in_cents(p):
    """Same packing problem with weights rounded to whole cents."""
    from chainmatch.matcher import PackingProblem

    return PackingProblem(p.objective, p.chains, tuple(float(round(w * 100)) for w in p.weights),
                          p.pool_index)


def oracle_instances(count: int = 200, depth: int = 4, limit: int = 25):
    """First ``count`` seeded instances whose full chain pool fits the oracle.

    Returns the instances and the number of seeds skipped for exceeding ``limit``.
    """
    from chainmatch.chains import enumerate_chains

    out, skipped, seed = [], 0, 0
    while len(out) < count:
        inst = random_small_instance(seed)
        seed += 1
        if len(enumerate_chains(inst, depth)) > limit:
            skipped += 1
            continue
        out.append(inst)
    return out, skipped
