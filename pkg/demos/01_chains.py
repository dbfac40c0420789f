"""
Chains of one-way trips
=======================

A chain is a run of one-way trips where each drop-off is the next pick-up
(same station, same time slot) and the last trip brings the car back to the
station it left from. Enumeration is a depth-first search over a
``(station, slot)`` index.
"""

from chainmatch import Horizon, TripRequest, enumerate_chains, pool_stats
from chainmatch.ingestion import IngestConfig, generate_synthetic

# Three stations 0, 1, 2 and a six-slot horizon.
trips = [
    TripRequest("ana", 0, 1, 1, 2, 12.0),
    TripRequest("ben", 1, 0, 2, 3, 9.0),   # closes ana's car back at station 0
    TripRequest("cy", 1, 2, 2, 3, 11.0),
    TripRequest("dee", 2, 0, 3, 5, 14.0),  # ana -> cy -> dee is a 3-cycle
]
print("horizon depths:", list(Horizon(6).depths))

pool = enumerate_chains(trips, depth_cutoff=3)
for c in pool:
    print(len(c), "->".join(c.members))
print("histogram:", pool_stats(pool))

# %%
# On a random 300-user instance the pool grows quickly with the depth cutoff.
inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
for depth in (2, 3, 4, 5):
    print(f"N={depth}:", pool_stats(enumerate_chains(inst, depth)))
