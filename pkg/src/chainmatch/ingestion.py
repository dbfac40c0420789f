"""Building, saving and loading problem instances.

Pipeline for real trip data::

    records = load_trips_csv(path, cfg)
    trips = discretize(records, cfg)
    kept, report = apply_filters(trips)
    instance = build_instance(kept, cfg, report)   # classifies users

Every random choice is drawn from a numpy ``Generator`` keyed on
``(cfg.rng_seed, <stage tag>)``, so each stage is a pure function of its
inputs and the seed.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyFile,
    InvalidDimensions,
    IoError,
    MissingColumn,
    SchemaVersionMismatch,
    SlotOutOfHorizon,
    TimestampOutsideWindow,
    UnparsableRow,
    ValidationError,
)
from .model import Activity, Horizon, ThresholdDist, TripRequest, validate_trip
from .pricing import apply_cost_factor

SCHEMA_VERSION = 1

TIMESTAMP_COLUMNS = ("user_id", "pickup_zone", "dropoff_zone", "pickup_time", "dropoff_time", "fare")
SLOT_COLUMNS = ("user_id", "start_station", "end_station", "start_slot", "end_slot", "fare")

# Stage tags for independent random streams.
_ZONE_STREAM = 1
_CLASSIFY_STREAM = 2
_SYNTH_STREAM = 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), stream]))


class Provenance(enum.Enum):
    CSV_IMPORT = "csv_import"
    SYNTHETIC = "synthetic"


class RemovalReason(enum.Enum):
    ROUND_TRIP = "round_trip"
    NON_CAUSAL = "non_causal"


@dataclass(frozen=True)
class IngestConfig:
    slot_minutes: float = 10.0
    tau: int = 6
    active_fraction: float = 0.8
    cost_factor: float = 0.2
    sigma_fixed: float = 1.0
    rng_seed: int = 0
    regions_per_zone: int = 1
    window_start: str | None = None  # ISO-8601; None -> earliest pickup
    fare_min: float = 5.0  # synthetic fares only
    fare_max: float = 40.0

    def __post_init__(self):
        Horizon(self.tau, self.slot_minutes)
        if not 0.0 <= self.active_fraction <= 1.0:
            raise ValidationError(f"active_fraction must lie in [0, 1], got {self.active_fraction}")
        apply_cost_factor(1.0, self.cost_factor)
        if not self.sigma_fixed > 0:
            raise ValidationError(f"sigma_fixed must be > 0, got {self.sigma_fixed}")
        if self.regions_per_zone < 1:
            raise ValidationError("regions_per_zone must be >= 1")
        if not 0 <= self.fare_min <= self.fare_max:
            raise ValidationError("need 0 <= fare_min <= fare_max")

    @property
    def horizon(self) -> Horizon:
        return Horizon(self.tau, self.slot_minutes)


@dataclass(frozen=True)
class RawTrip:
    """One parsed CSV row; timestamp fields or slot fields are set, not both."""

    line: int
    user_id: str
    fare_cents: int
    pickup_zone: str | None = None
    dropoff_zone: str | None = None
    pickup_time: datetime | None = None
    dropoff_time: datetime | None = None
    start_station: int | None = None
    end_station: int | None = None
    start_slot: int | None = None
    end_slot: int | None = None


@dataclass(frozen=True)
class SlotTrip:
    """A discretized trip before user classification."""

    user_id: str
    start_station: int
    end_station: int
    start_slot: int
    end_slot: int
    fare_cents: int
    removal: RemovalReason | None = None


@dataclass(frozen=True)
class Instance:
    horizon: Horizon
    n_stations: int
    trips: tuple[TripRequest, ...]
    rng_seed: int
    provenance: Provenance
    config: IngestConfig = field(default_factory=IngestConfig)
    round_trip_count: int = 0  # A-to-A requests removed before matching

    def __post_init__(self):
        object.__setattr__(self, "trips", tuple(self.trips))
        seen = set()
        for t in self.trips:
            validate_trip(t, self.horizon, self.n_stations)
            if t.user_id in seen:
                raise ValidationError(f"duplicate user id {t.user_id}")
            seen.add(t.user_id)

    @property
    def total_users(self) -> int:
        """Matched-pool users plus the removed round-trip users."""
        return len(self.trips) + self.round_trip_count

    def with_cost_factor(self, cf: float) -> Instance:
        trips = tuple(t.with_cost(apply_cost_factor(t.base_price, cf)) for t in self.trips)
        return replace(self, trips=trips, config=replace(self.config, cost_factor=cf))


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------

def _parse_time(s: str) -> datetime:
    s = s.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    return datetime.fromisoformat(s)


def _parse_cents(s: str) -> int:
    d = Decimal(s.strip())
    if not d.is_finite() or d < 0:
        raise ValueError(f"bad fare {s!r}")
    cents = d * 100
    if cents != cents.to_integral_value():
        raise ValueError(f"fare {s!r} has sub-cent precision")
    return int(cents)


def load_trips_csv(path: str | os.PathLike, config: IngestConfig | None = None) -> list[RawTrip]:
    """Parse a trip CSV in either the timestamp or the pre-discretized schema.

    Semantic checks (A-to-A trips, end before start) are left to the filters;
    this function only rejects rows it cannot parse.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise EmptyFile(f"{path}: no header")
        cols = {h.strip() for h in header}
        slot_schema = set(SLOT_COLUMNS) <= cols
        if not slot_schema:
            missing = [c for c in TIMESTAMP_COLUMNS if c not in cols]
            if missing:
                raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        out = []
        for row in reader:
            line = reader.line_num
            row = {k.strip(): (v or "") for k, v in row.items() if k is not None}
            try:
                uid = row["user_id"].strip()
                if not uid:
                    raise ValueError("empty user_id")
                fare = _parse_cents(row["fare"])
                if slot_schema:
                    rec = RawTrip(
                        line, uid, fare,
                        start_station=int(row["start_station"]),
                        end_station=int(row["end_station"]),
                        start_slot=int(row["start_slot"]),
                        end_slot=int(row["end_slot"]),
                    )
                else:
                    rec = RawTrip(
                        line, uid, fare,
                        pickup_zone=row["pickup_zone"].strip(),
                        dropoff_zone=row["dropoff_zone"].strip(),
                        pickup_time=_parse_time(row["pickup_time"]),
                        dropoff_time=_parse_time(row["dropoff_time"]),
                    )
            except (ValueError, InvalidOperation, KeyError) as exc:
                raise UnparsableRow(line, str(exc)) from None
            out.append(rec)
    if not out:
        raise EmptyFile(f"{path}: no data rows")
    return out


# ---------------------------------------------------------------------------
# Discretization and filters
# ---------------------------------------------------------------------------

def zone_station_map(zones: Iterable[str], regions_per_zone: int) -> dict[str, range]:
    """Map each zone (sorted) to its block of region station ids."""
    ordered = sorted(set(zones), key=lambda z: (len(z), z))
    return {
        z: range(i * regions_per_zone, (i + 1) * regions_per_zone) for i, z in enumerate(ordered)
    }


def discretize(records: Sequence[RawTrip], config: IngestConfig) -> list[SlotTrip]:
    """Turn parsed records into slot-indexed trips.

    Slot of a timestamp ``t`` is ``floor((t - window_start) / slot_minutes) + 1``.
    Trips whose end slot is not after their start slot are kept but marked
    ``NON_CAUSAL``; A-to-A trips are marked ``ROUND_TRIP``.
    """
    if not records:
        return []
    if records[0].pickup_time is None:
        return [
            _mark(SlotTrip(r.user_id, r.start_station, r.end_station, r.start_slot,
                           r.end_slot, r.fare_cents), config.tau)
            for r in records
        ]

    if config.window_start is not None:
        w0 = _parse_time(config.window_start)
    else:
        w0 = min(r.pickup_time for r in records)
    window = config.tau * config.slot_minutes
    stations = zone_station_map(
        [r.pickup_zone for r in records] + [r.dropoff_zone for r in records],
        config.regions_per_zone,
    )
    rng = _rng(config.rng_seed, _ZONE_STREAM)

    def slot(ts: datetime, line: int) -> int:
        minutes = (ts - w0).total_seconds() / 60.0
        if not 0.0 <= minutes < window:
            raise TimestampOutsideWindow(
                f"line {line}: {ts.isoformat()} is {minutes:g} min from window start, "
                f"window is {window:g} min"
            )
        return math.floor(minutes / config.slot_minutes) + 1

    out = []
    for r in records:
        s_slot = slot(r.pickup_time, r.line)
        e_slot = slot(r.dropoff_time, r.line)
        # Each trip is placed in a uniformly chosen region of its zone.
        s_block, e_block = stations[r.pickup_zone], stations[r.dropoff_zone]
        s = s_block[int(rng.integers(len(s_block)))]
        e = e_block[int(rng.integers(len(e_block)))]
        out.append(_mark(SlotTrip(r.user_id, s, e, s_slot, e_slot, r.fare_cents), config.tau))
    return out


def _mark(t: SlotTrip, tau: int) -> SlotTrip:
    if t.start_station == t.end_station:
        return replace(t, removal=RemovalReason.ROUND_TRIP)
    if t.end_slot <= t.start_slot:
        return replace(t, removal=RemovalReason.NON_CAUSAL)
    if not (1 <= t.start_slot <= tau and 1 <= t.end_slot <= tau):
        raise SlotOutOfHorizon(f"user {t.user_id}: slots outside [1, {tau}]")
    return t


def apply_filters(trips: Sequence[SlotTrip]) -> tuple[list[SlotTrip], dict[RemovalReason, list[SlotTrip]]]:
    """Drop A-to-A trips and trips that end in their start slot.

    Returns the kept trips (input order) and the removed trips grouped by
    reason. Trips are re-checked here, so this also works on hand-built input.
    """
    kept: list[SlotTrip] = []
    removed: dict[RemovalReason, list[SlotTrip]] = {r: [] for r in RemovalReason}
    for t in trips:
        reason = t.removal
        if reason is None and t.start_station == t.end_station:
            reason = RemovalReason.ROUND_TRIP
        elif reason is None and t.end_slot <= t.start_slot:
            reason = RemovalReason.NON_CAUSAL
        if reason is None:
            kept.append(t)
        else:
            removed[reason].append(replace(t, removal=reason))
    return kept, removed


# ---------------------------------------------------------------------------
# Classification and instance assembly
# ---------------------------------------------------------------------------

def classify_users(trips: Sequence[SlotTrip], config: IngestConfig) -> list[TripRequest]:
    """Randomly split users into active / inactive and draw threshold means.

    Exactly ``round(active_fraction * n)`` users (round half to even) are
    active. Inactive means are integer cents drawn uniformly from
    ``[0, fare]``; all inactive users share ``sigma_fixed``.
    """
    n = len(trips)
    rng = _rng(config.rng_seed, _CLASSIFY_STREAM)
    n_active = round(config.active_fraction * n)
    order = rng.permutation(n)
    active = np.zeros(n, dtype=bool)
    active[order[:n_active]] = True
    out = []
    for i, t in enumerate(trips):
        base = t.fare_cents / 100
        cost = apply_cost_factor(base, config.cost_factor)
        if active[i]:
            out.append(TripRequest(t.user_id, t.start_station, t.end_station, t.start_slot,
                                   t.end_slot, base, cost))
        else:
            mu = int(rng.integers(0, t.fare_cents + 1)) / 100
            out.append(TripRequest(t.user_id, t.start_station, t.end_station, t.start_slot,
                                   t.end_slot, base, cost, Activity.INACTIVE,
                                   ThresholdDist(mu, config.sigma_fixed)))
    return out


def build_instance(
    kept: Sequence[SlotTrip],
    config: IngestConfig,
    removed: dict[RemovalReason, list[SlotTrip]] | None = None,
    n_stations: int | None = None,
    provenance: Provenance = Provenance.CSV_IMPORT,
) -> Instance:
    trips = classify_users(kept, config)
    if n_stations is None:
        n_stations = 1 + max((max(t.start_station, t.end_station) for t in kept), default=1)
    n_round = len(removed.get(RemovalReason.ROUND_TRIP, ())) if removed else 0
    return Instance(config.horizon, n_stations, tuple(trips), config.rng_seed, provenance,
                    config, n_round)


def ingest_csv(path: str | os.PathLike, config: IngestConfig) -> tuple[Instance, dict[str, int]]:
    """Full CSV pipeline. Returns the instance and removal counts by reason."""
    records = load_trips_csv(path, config)
    kept, removed = apply_filters(discretize(records, config))
    n_stations = None
    if records[0].pickup_zone is not None:
        zones = zone_station_map(
            [r.pickup_zone for r in records] + [r.dropoff_zone for r in records],
            config.regions_per_zone,
        )
        n_stations = max(len(zones) * config.regions_per_zone, 2)
    inst = build_instance(kept, config, removed, n_stations)
    return inst, {r.value: len(v) for r, v in removed.items()}


def generate_synthetic(n_users: int, n_stations: int, config: IngestConfig | None = None) -> Instance:
    """Random instance: station pairs uniform over ``s != e``, slot pairs uniform
    over ``end > start``, fares uniform integer cents in ``[fare_min, fare_max]``."""
    config = config or IngestConfig()
    if n_users < 1 or n_stations < 2:
        raise InvalidDimensions(f"need n_users >= 1 and n_stations >= 2, got {n_users}, {n_stations}")
    rng = _rng(config.rng_seed, _SYNTH_STREAM)
    tau = config.tau
    slot_pairs = [(s, e) for s in range(1, tau + 1) for e in range(s + 1, tau + 1)]
    lo, hi = round(config.fare_min * 100), round(config.fare_max * 100)
    width = len(str(n_users))
    trips = []
    for i in range(n_users):
        s = int(rng.integers(n_stations))
        e = (s + int(rng.integers(1, n_stations))) % n_stations
        ss, es = slot_pairs[int(rng.integers(len(slot_pairs)))]
        fare = int(rng.integers(lo, hi + 1))
        trips.append(SlotTrip(f"u{i + 1:0{width}d}", s, e, ss, es, fare))
    return build_instance(trips, config, None, n_stations, Provenance.SYNTHETIC)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _to_cents(x: float, what: str) -> int:
    c = round(x * 100)
    if c / 100 != x:
        raise ValidationError(f"{what}={x!r} is not a whole number of cents")
    return c


def instance_to_dict(inst: Instance) -> dict:
    cf = inst.config.cost_factor
    trips = []
    for t in inst.trips:
        if t.travel_cost != apply_cost_factor(t.base_price, cf):
            raise ValidationError(
                f"user {t.user_id}: travel cost is not cost_factor * base_price; cannot persist"
            )
        row = {
            "user_id": t.user_id,
            "start_station": t.start_station,
            "end_station": t.end_station,
            "start_slot": t.start_slot,
            "end_slot": t.end_slot,
            "fare_cents": _to_cents(t.base_price, "fare"),
            "activity": t.activity.value,
        }
        if t.threshold is not None:
            row["mu_cents"] = _to_cents(t.threshold.mu, "mu")
            row["sigma_cents"] = _to_cents(t.threshold.sigma, "sigma")
        trips.append(row)
    config = asdict(inst.config)
    return {
        "schema_version": SCHEMA_VERSION,
        "horizon": {"tau": inst.horizon.tau, "slot_minutes": inst.horizon.slot_minutes},
        "config": config,
        "n_stations": inst.n_stations,
        "rng_seed": inst.rng_seed,
        "provenance": inst.provenance.value,
        "round_trip_count": inst.round_trip_count,
        "trips": trips,
    }


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict) or doc.get("schema_version") != SCHEMA_VERSION:
        got = doc.get("schema_version") if isinstance(doc, dict) else None
        raise SchemaVersionMismatch(f"expected schema_version {SCHEMA_VERSION}, got {got!r}")
    try:
        config = IngestConfig(**doc["config"])
        cf = config.cost_factor
        trips = []
        for r in doc["trips"]:
            base = r["fare_cents"] / 100
            activity = Activity(r["activity"])
            threshold = None
            if activity is Activity.INACTIVE:
                threshold = ThresholdDist(r["mu_cents"] / 100, r["sigma_cents"] / 100)
            trips.append(TripRequest(
                str(r["user_id"]), r["start_station"], r["end_station"], r["start_slot"],
                r["end_slot"], base, apply_cost_factor(base, cf), activity, threshold,
            ))
        h = doc["horizon"]
        return Instance(
            Horizon(h["tau"], h["slot_minutes"]), doc["n_stations"], tuple(trips),
            doc["rng_seed"], Provenance(doc["provenance"]), config, doc["round_trip_count"],
        )
    except (KeyError, TypeError) as exc:
        raise SchemaVersionMismatch(f"malformed instance document: {exc!r}") from None


def write_json_atomic(path: str | os.PathLike, doc, **kw) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, **kw)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_json(path: str | os.PathLike):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path}: corrupt JSON ({exc})") from exc


def save_instance(inst: Instance, path: str | os.PathLike) -> None:
    write_json_atomic(path, instance_to_dict(inst), indent=1, sort_keys=True)


def load_instance(path: str | os.PathLike) -> Instance:
    return instance_from_dict(read_json(path))
