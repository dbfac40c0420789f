"""Domain types for one-way trips in a round-trip car-sharing system.

Stations and timeslots are plain ``int``. Slots are 1-based and run from 1 to
``Horizon.tau``. Currency values are floats in major units (dollars); the
persistence layer stores them as integer cents.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import (
    ChainLengthOutOfDepth,
    NonCausalSlots,
    RoundTripRejected,
    SlotOutOfHorizon,
    StationOutOfRange,
    ValidationError,
)


class Activity(enum.Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class ThresholdDist:
    """Gaussian price threshold of an inactive user."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValidationError(f"threshold mean must be finite, got {self.mu}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValidationError(f"threshold sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class Horizon:
    tau: int = 6
    slot_minutes: float = 10.0

    def __post_init__(self):
        if self.tau < 3:
            raise ValidationError(f"tau must be >= 3, got {self.tau}")
        if not self.slot_minutes > 0:
            raise ValidationError(f"slot_minutes must be > 0, got {self.slot_minutes}")

    @property
    def depths(self) -> range:
        """Admissible chain lengths ``{2, ..., tau - 1}``."""
        return range(2, self.tau)

    @property
    def minutes(self) -> float:
        return self.tau * self.slot_minutes


@dataclass(frozen=True)
class TripRequest:
    """One user's one-way trip request.

    ``threshold`` is set exactly when the user is inactive. ``travel_cost`` is
    normally ``cost_factor * base_price`` (see :func:`chainmatch.pricing.apply_cost_factor`).
    """

    user_id: str
    start_station: int
    end_station: int
    start_slot: int
    end_slot: int
    base_price: float
    travel_cost: float = 0.0
    activity: Activity = Activity.ACTIVE
    threshold: ThresholdDist | None = None

    def __post_init__(self):
        if (self.activity is Activity.INACTIVE) != (self.threshold is not None):
            raise ValidationError(
                f"user {self.user_id}: threshold must be present iff the user is inactive"
            )
        if self.base_price < 0 or self.travel_cost < 0:
            raise ValidationError(f"user {self.user_id}: negative price or cost")

    @property
    def is_inactive(self) -> bool:
        return self.activity is Activity.INACTIVE

    def with_cost(self, travel_cost: float) -> TripRequest:
        return replace(self, travel_cost=travel_cost)


def validate_trip(t: TripRequest, h: Horizon, n_stations: int | None = None) -> None:
    """Raise if ``t`` is not a legal trip inside horizon ``h``."""
    if t.start_station == t.end_station:
        raise RoundTripRejected(f"user {t.user_id}: starts and ends at station {t.start_station}")
    if t.end_slot <= t.start_slot:
        raise NonCausalSlots(
            f"user {t.user_id}: end slot {t.end_slot} is not after start slot {t.start_slot}"
        )
    for s in (t.start_slot, t.end_slot):
        if not 1 <= s <= h.tau:
            raise SlotOutOfHorizon(f"user {t.user_id}: slot {s} outside [1, {h.tau}]")
    if n_stations is not None:
        for st in (t.start_station, t.end_station):
            if not 0 <= st < n_stations:
                raise StationOutOfRange(f"user {t.user_id}: station {st} outside [0, {n_stations})")


def station_feasible(members: Sequence[TripRequest]) -> bool:
    d = len(members)
    for i in range(d - 1):
        if members[i].end_station != members[i + 1].start_station:
            return False
    return members[-1].end_station == members[0].start_station


def time_feasible(members: Sequence[TripRequest]) -> bool:
    # The last trip's end slot is deliberately unconstrained.
    return all(
        members[i].end_slot == members[i + 1].start_slot for i in range(len(members) - 1)
    )


def chain_feasible(members: Sequence[TripRequest], tau: int | None = None) -> bool:
    """Station and timeslot feasibility of an ordered trip sequence.

    If ``tau`` is given the length must lie in ``{2, ..., tau - 1}``; otherwise
    only ``len >= 2`` is enforced.
    """
    d = len(members)
    upper = tau - 1 if tau is not None else d
    if not 2 <= d <= upper:
        raise ChainLengthOutOfDepth(f"chain length {d} outside [2, {upper}]")
    return station_feasible(members) and time_feasible(members)


@dataclass(frozen=True)
class Chain:
    """A feasible, ordered chain of trips closing a station cycle.

    Members are stored in chain order, which for a feasible chain is also
    strictly increasing start-slot order.
    """

    trips: tuple[TripRequest, ...]
    _ids: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(t.user_id for t in self.trips)
        if len(set(ids)) != len(ids):
            raise ValidationError(f"chain repeats a user: {ids}")
        object.__setattr__(self, "_ids", ids)

    @property
    def members(self) -> tuple[str, ...]:
        return self._ids

    @property
    def inactive_members(self) -> tuple[str, ...]:
        return tuple(t.user_id for t in self.trips if t.is_inactive)

    @property
    def n_inactive(self) -> int:
        return sum(1 for t in self.trips if t.is_inactive)

    def __len__(self) -> int:
        return len(self.trips)

    def sort_key(self) -> tuple:
        return (len(self.trips), self._ids)
