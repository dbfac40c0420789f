"""Enumerate feasible chains by depth-first search.

Starting from every trip, a partial path is extended with trips that depart
from the last trip's drop-off station in its drop-off slot. Whenever the
newest trip returns to the root's pick-up station the path is emitted as a
chain, and the search keeps extending it until the depth cutoff.
"""

from __future__ import annotations

import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DepthOutOfRange, IoError, PoolOverflow
from .model import Chain, TripRequest

DEFAULT_POOL_CAP = 5_000_000

SuccessorIndex = Mapping[tuple[int, int], tuple[TripRequest, ...]]


@dataclass(frozen=True)
class ChainPool:
    chains: tuple[Chain, ...]
    depth_cutoff: int

    def __len__(self) -> int:
        return len(self.chains)

    def __iter__(self):
        return iter(self.chains)


def build_index(trips: Iterable[TripRequest]) -> dict[tuple[int, int], tuple[TripRequest, ...]]:
    """Bucket trips by ``(start_station, start_slot)``, keeping input order."""
    buckets: dict[tuple[int, int], list[TripRequest]] = defaultdict(list)
    for t in trips:
        buckets[(t.start_station, t.start_slot)].append(t)
    return {k: tuple(v) for k, v in buckets.items()}


def _trips_of(source) -> tuple[TripRequest, ...]:
    return tuple(source.trips) if hasattr(source, "trips") else tuple(source)


def enumerate_chains(source, depth_cutoff: int, tau: int | None = None,
                     cap: int = DEFAULT_POOL_CAP) -> ChainPool:
    """All feasible chains of length ``2..depth_cutoff``.

    ``source`` is an :class:`~chainmatch.ingestion.Instance` or a plain
    sequence of trips (then ``tau`` should be passed to bound the depth).
    Raises :class:`PoolOverflow` rather than truncating past ``cap`` chains.
    """
    trips = _trips_of(source)
    if tau is None and hasattr(source, "horizon"):
        tau = source.horizon.tau
    upper = tau - 1 if tau is not None else depth_cutoff
    if not 2 <= depth_cutoff <= upper:
        raise DepthOutOfRange(f"depth cutoff {depth_cutoff} outside [2, {upper}]")

    index = build_index(trips)
    found: list[tuple[TripRequest, ...]] = []

    def extend(path: list[TripRequest]) -> None:
        last = path[-1]
        for nxt in index.get((last.end_station, last.end_slot), ()):
            # Start slots strictly increase along a path, so nxt is never
            # already on it.
            path.append(nxt)
            if nxt.end_station == path[0].start_station:
                if len(found) >= cap:
                    raise PoolOverflow(f"more than {cap} chains; lower the depth cutoff")
                found.append(tuple(path))
            if len(path) < depth_cutoff:
                extend(path)
            path.pop()

    for root in trips:
        extend([root])

    chains = sorted((Chain(p) for p in found), key=Chain.sort_key)
    return ChainPool(tuple(chains), depth_cutoff)


def pool_stats(pool: ChainPool) -> dict[int, int]:
    """Chain count per length, with every length ``2..N`` present."""
    counts = Counter(len(c) for c in pool.chains)
    return {d: counts.get(d, 0) for d in range(2, pool.depth_cutoff + 1)}


def dump_pool_jsonl(pool: ChainPool, path: str | os.PathLike) -> None:
    try:
        with open(path, "w") as fh:
            for c in pool.chains:
                fh.write(json.dumps({"members": list(c.members), "length": len(c)}) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
