"""Price and probability math.

Inactive users get the alpha-percentile of their Gaussian price threshold as
an offer, so each accepts with probability ``1 - alpha`` independently and a
chain with ``k`` inactive members activates with probability
``(1 - alpha) ** k``.

``alpha == 1`` is the limit case: no incentive is offered (inactive users see
the base price) and any chain with an inactive member never activates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import (
    AlphaOutOfOpenInterval,
    AlphaOutOfRange,
    CostFactorOutOfRange,
    MissingPrice,
    ThresholdAboveBase,
)
from .model import Chain, TripRequest

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the standard normal quantile
# (relative error < 1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_cdf(x: float, mu: float = 0.0, sigma: float = 1.0) -> float:
    return 0.5 * math.erfc(-(x - mu) / (sigma * _SQRT2))


def _tail(q: float) -> float:
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def _standard_quantile(p: float) -> float:
    if p > 0.5:
        # 1 - p is exact here, and working in the lower tail keeps the
        # refinement step from cancelling against 1.
        return -_standard_quantile(1.0 - p)
    if p < _P_LOW:
        x = _tail(math.sqrt(-2.0 * math.log(p)))
    else:
        q = p - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x = num / den
    # One Halley step against the erfc-based cdf brings this to full precision.
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(alpha: float, mu: float = 0.0, sigma: float = 1.0) -> float:
    """Return ``q`` with ``normal_cdf(q, mu, sigma) == alpha``."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfOpenInterval(f"alpha must lie in (0, 1), got {alpha}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return mu + sigma * _standard_quantile(alpha)


@dataclass(frozen=True)
class OfferedPrice:
    """Price offered to one user.

    ``clamped`` is ``"low"`` or ``"high"`` when the raw percentile fell outside
    ``[0, base_price]`` and was clipped, else ``None``.
    """

    user_id: str
    value: float
    clamped: str | None = None


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")


def offered_price(t: TripRequest, alpha: float) -> OfferedPrice:
    if not t.is_inactive:
        return OfferedPrice(t.user_id, t.base_price)
    if alpha == 1.0:
        return OfferedPrice(t.user_id, t.base_price)
    raw = normal_quantile(alpha, t.threshold.mu, t.threshold.sigma)
    if raw > t.base_price:
        return OfferedPrice(t.user_id, t.base_price, "high")
    if raw < 0.0:
        return OfferedPrice(t.user_id, 0.0, "low")
    return OfferedPrice(t.user_id, raw)


def offered_price_deterministic(t: TripRequest, known_threshold: float) -> OfferedPrice:
    """Optimal price when the user's threshold is known exactly."""
    if not t.is_inactive:
        return OfferedPrice(t.user_id, t.base_price)
    if known_threshold > t.base_price:
        raise ThresholdAboveBase(
            f"user {t.user_id}: threshold {known_threshold} exceeds base price {t.base_price}"
        )
    return OfferedPrice(t.user_id, known_threshold)


def apply_cost_factor(base_price: float, cf: float) -> float:
    if not 0.0 < cf <= 1.0:
        raise CostFactorOutOfRange(f"cost factor must lie in (0, 1], got {cf}")
    return cf * base_price


def chain_prices(c: Chain, alpha: float) -> dict[str, OfferedPrice]:
    _check_alpha(alpha)
    return {t.user_id: offered_price(t, alpha) for t in c.trips}


def _price_of(prices: Mapping, uid: str) -> float:
    try:
        p = prices[uid]
    except KeyError:
        raise MissingPrice(f"no offered price for user {uid}") from None
    return p.value if isinstance(p, OfferedPrice) else float(p)


def chain_profit(c: Chain | Sequence[TripRequest], prices: Mapping) -> float:
    """Profit of serving every member of ``c`` at the offered prices.

    Active users always pay their base price; only inactive users' entries
    in ``prices`` are read. ``prices`` maps user id to an :class:`OfferedPrice`
    or a bare number. The result may be negative.
    """
    trips = c.trips if isinstance(c, Chain) else c
    terms = []
    for t in trips:
        if t.is_inactive:
            terms.append(_price_of(prices, t.user_id) - t.travel_cost)
        else:
            terms.append(t.base_price - t.travel_cost)
    return math.fsum(terms)


def activation_probability(c: Chain, alpha: float) -> float:
    _check_alpha(alpha)
    return (1.0 - alpha) ** c.n_inactive


def expected_chain_profit(c: Chain, prices: Mapping, alpha: float) -> float:
    return activation_probability(c, alpha) * chain_profit(c, prices)


def clamp_events(prices: Mapping[str, OfferedPrice]) -> int:
    """Number of clipped offers; each one means the true activation odds differ from ``(1 - alpha)``."""
    n = sum(1 for p in prices.values() if isinstance(p, OfferedPrice) and p.clamped)
    if n:
        logger.debug("%d offered price(s) clamped to [0, base]", n)
    return n
