"""
Pricing reluctant users
=======================

Inactive users ride only if the offered price is at most a Gaussian
threshold. Offering the alpha-percentile of that Gaussian means each one
declines with probability alpha, so a chain with k inactive riders runs with
probability (1 - alpha)**k.
"""

from chainmatch import Chain, TripRequest, activation_probability, normal_quantile
from chainmatch.model import Activity, ThresholdDist
from chainmatch.pricing import apply_cost_factor, chain_prices, chain_profit, normal_cdf

print("quantile(0.8413447) =", normal_quantile(0.8413447, 0.0, 1.0))
print("cdf(quantile(0.01)) =", normal_cdf(normal_quantile(0.01)))

# %%
# One active and one inactive rider. Raising alpha raises the price offered
# to the inactive rider and lowers the chance the chain runs.
cf = 0.2
u1 = TripRequest("u1", 0, 1, 1, 2, 20.0, apply_cost_factor(20.0, cf))
u2 = TripRequest("u2", 1, 0, 2, 3, 15.0, apply_cost_factor(15.0, cf),
                 Activity.INACTIVE, ThresholdDist(9.0, 2.0))
chain = Chain((u1, u2))

print(f"{'alpha':>5} {'offer':>7} {'profit':>7} {'P(run)':>7} {'E[profit]':>9}")
for alpha in (0.1, 0.3, 0.5, 0.7, 0.9):
    prices = chain_prices(chain, alpha)
    profit = chain_profit(chain, prices)
    prob = activation_probability(chain, alpha)
    print(f"{alpha:5.1f} {prices['u2'].value:7.2f} {profit:7.2f} {prob:7.2f} {prob * profit:9.2f}")
