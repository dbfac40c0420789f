"""
Monte Carlo check of expected profit
====================================

Draw every inactive user's threshold, see which chains run, and average the
realized profit. With enough samples the mean lands on the analytic expected
profit.
"""

import math

from chainmatch import Objective, ObjectiveKind, SimConfig, enumerate_chains, monte_carlo, solve
from chainmatch.ingestion import IngestConfig, generate_synthetic

inst = generate_synthetic(300, 10, IngestConfig(rng_seed=1))
sol = solve(enumerate_chains(inst, 5), Objective(ObjectiveKind.MAX_EXPECTED_PROFIT, 0.5))

for n in (100, 10_000, 100_000):
    rep = monte_carlo(sol, inst, SimConfig(n, rng_seed=7))
    half_width = 3 * rep.std_profit / math.sqrt(n)
    print(f"n={n:>6}: mean {rep.mean_profit:8.2f} +- {half_width:6.2f}   analytic {rep.expected_profit:8.2f}"
          f"   service rate {100 * rep.mean_service_rate:5.2f}%")

# %%
# Samples come in fixed seeded chunks, so thread count never changes results.
a = monte_carlo(sol, inst, SimConfig(50_000, 3, workers=1))
b = monte_carlo(sol, inst, SimConfig(50_000, 3, workers=4))
print("1 vs 4 workers identical:", a == b)
