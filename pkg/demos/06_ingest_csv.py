"""
From a trip CSV to an instance
==============================

Timestamps become slots counted from the window start, zones become
stations, A-to-A trips and trips that end in their start slot are removed,
and users are randomly split into active and inactive.
"""

import tempfile
from pathlib import Path

from chainmatch import IngestConfig, ingest_csv, load_instance, save_instance

rows = """user_id,pickup_zone,dropoff_zone,pickup_time,dropoff_time,fare
r1,Midtown,Harlem,2024-03-01T08:00,2024-03-01T08:14,18.50
r2,Harlem,Midtown,2024-03-01T08:15,2024-03-01T08:29,17.00
r3,Midtown,Midtown,2024-03-01T08:03,2024-03-01T08:20,9.00
r4,Harlem,SoHo,2024-03-01T08:12,2024-03-01T08:40,24.25
r5,SoHo,Midtown,2024-03-01T08:41,2024-03-01T08:44,11.00
"""
work = Path(tempfile.mkdtemp())
(work / "trips.csv").write_text(rows)

inst, removed = ingest_csv(work / "trips.csv", IngestConfig(rng_seed=4, active_fraction=0.5))
print("removed:", removed)
for t in inst.trips:
    mu = f" mu={t.threshold.mu:.2f}" if t.threshold else ""
    print(f"{t.user_id}: station {t.start_station}->{t.end_station} slot {t.start_slot}->{t.end_slot} "
          f"{t.activity.value}{mu}")

save_instance(inst, work / "instance.json")
print("reload equal:", load_instance(work / "instance.json") == inst)
