"""
Risk and cost sweeps
====================

Solve every (alpha, cost factor) cell for all three models, then write the
results table and compare profits across models.
"""

import tempfile

from chainmatch import SweepSpec, emit_report, run_sweep
from chainmatch.experiments import relative_gains, served_summary
from chainmatch.ingestion import IngestConfig, generate_synthetic

inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
result = run_sweep(SweepSpec(seed=1, n_samples=500), inst, workers=4)

out = tempfile.mkdtemp()
paths = emit_report(result, out)
print(open(paths["table"]).read())

# %%
for (axis, other), g in relative_gains(result).items():
    print(f"proposed vs {other.value:11s} over {axis:15s}: {g['artifact']:6.1f}% "
          f"(published figure on city data: {g['reference']:.0f}%)")

# %%
# Served users next to the users who were already round trips.
served = {r.model.value: r.served for r in result.records if r.alpha == 0.4 and r.cost_factor == 0.2}
for row in served_summary(served, result.total_users, inst.round_trip_count):
    print(f"{row.label:20s} {row.served:4d} {row.display}")
print(served_summary({}, 2413, 110)[0].display, "of 2413 users were round trips in the reference city sample")
