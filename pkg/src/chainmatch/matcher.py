"""Weighted set packing over a chain pool.

Each chain gets a weight from one of three objectives and the solver selects
a user-disjoint subset of chains of maximum total weight.

* ``MAX_SERVICE`` - weight is the chain length (users served).
* ``MAX_PROFIT`` - weight is the chain profit at alpha-percentile prices.
* ``MAX_EXPECTED_PROFIT`` - profit times the activation probability
  ``(1 - alpha) ** k``. This is the proposed model.

:func:`solve_exact` is an exact branch and bound. Float weights are scaled
to exact integers first (every float is a dyadic rational), so comparisons
never suffer rounding, and ties are broken deterministically. Among optimal
selections it returns the one that includes the lowest-indexed chains, i.e.
the lexicographically largest 0/1 vector.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .chains import ChainPool
from .errors import AlphaOutOfRange, PoolTooLargeForOracle, SchemaVersionMismatch
from .ingestion import read_json, write_json_atomic
from .model import Chain
from .pricing import (
    OfferedPrice,
    activation_probability,
    chain_prices,
    chain_profit,
    expected_chain_profit,
)

DEFAULT_TIMEOUT_S = 60.0
ORACLE_LIMIT = 25
# Relative LP-bound gap at which an integral node counts as solved.
GAP_TOL = Fraction(1, 10**9)


class ObjectiveKind(enum.Enum):
    MAX_SERVICE = "max-service"
    MAX_PROFIT = "max-profit"
    MAX_EXPECTED_PROFIT = "proposed"


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    alpha: float = 0.5

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", ObjectiveKind(self.kind))
        if not 0.0 <= self.alpha <= 1.0:
            raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {self.alpha}")


def chain_weight(c: Chain, obj: Objective) -> float:
    if obj.kind is ObjectiveKind.MAX_SERVICE:
        return float(len(c))
    prices = chain_prices(c, obj.alpha)
    if obj.kind is ObjectiveKind.MAX_PROFIT:
        return chain_profit(c, prices)
    return expected_chain_profit(c, prices, obj.alpha)


@dataclass(frozen=True)
class PackingProblem:
    objective: Objective
    chains: tuple[Chain, ...]
    weights: tuple[float, ...]
    pool_index: tuple[int, ...] = ()  # position of each chain in the source pool
    incidence: dict[str, tuple[int, ...]] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.weights) != len(self.chains):
            raise ValueError("one weight per chain required")
        if not all(math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")
        if not self.pool_index:
            object.__setattr__(self, "pool_index", tuple(range(len(self.chains))))
        if not self.incidence:
            inc: dict[str, list[int]] = {}
            for i, c in enumerate(self.chains):
                for u in c.members:
                    inc.setdefault(u, []).append(i)
            object.__setattr__(self, "incidence", {u: tuple(v) for u, v in inc.items()})

    def __len__(self) -> int:
        return len(self.chains)


def build_problem(pool: ChainPool | Sequence[Chain], obj: Objective) -> PackingProblem:
    """Weight every chain; drop non-positive chains for the profit objectives.

    Dropping is safe because the packing constraints are all ``<= 1``: a chain
    with weight ``<= 0`` can always be removed from a selection without
    lowering its value.
    """
    chains = pool.chains if isinstance(pool, ChainPool) else tuple(pool)
    keep_c, keep_w, keep_i = [], [], []
    for i, c in enumerate(chains):
        w = chain_weight(c, obj)
        if obj.kind is not ObjectiveKind.MAX_SERVICE and w <= 0:
            continue
        keep_c.append(c)
        keep_w.append(w)
        keep_i.append(i)
    return PackingProblem(obj, tuple(keep_c), tuple(keep_w), tuple(keep_i))


@dataclass(frozen=True)
class ChainEval:
    profit: float
    activation_probability: float
    expected_profit: float


@dataclass(frozen=True)
class Solution:
    objective: Objective
    chains: tuple[Chain, ...]
    selected: tuple[int, ...]  # indices into the packing problem
    objective_value: float
    status: str = "optimal"  # "optimal" | "timeout" | "heuristic"
    offered_prices: dict[str, OfferedPrice] = field(default_factory=dict, compare=False)
    per_chain: tuple[ChainEval, ...] = ()
    nodes: int = field(default=0, compare=False)
    price_alpha: float | None = None  # alpha the attached offers were computed at

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def served_user_count(self) -> int:
        return sum(len(c) for c in self.chains)

    @property
    def served_users(self) -> set[str]:
        return {u for c in self.chains for u in c.members}

    @property
    def expected_profit(self) -> float:
        return math.fsum(e.expected_profit for e in self.per_chain)

    @property
    def profit(self) -> float:
        return math.fsum(e.profit for e in self.per_chain)

    @property
    def clamp_events(self) -> int:
        return sum(1 for p in self.offered_prices.values() if p.clamped)

    def recomputed_objective(self) -> float:
        if self.objective.kind is ObjectiveKind.MAX_SERVICE:
            return float(self.served_user_count)
        if self.objective.kind is ObjectiveKind.MAX_PROFIT:
            return self.profit
        return self.expected_profit


def _make_solution(p: PackingProblem, selected, status: str, nodes: int = 0) -> Solution:
    selected = tuple(sorted(selected))
    value = math.fsum(p.weights[i] for i in selected)
    return Solution(p.objective, tuple(p.chains[i] for i in selected), selected, value,
                    status, nodes=nodes)


def check_disjoint(sol: Solution) -> None:
    seen: set[str] = set()
    for c in sol.chains:
        for u in c.members:
            if u in seen:
                raise AssertionError(f"user {u} appears in two selected chains")
            seen.add(u)


# ---------------------------------------------------------------------------
# Exact branch and bound
# ---------------------------------------------------------------------------

class _Timeout(Exception):
    pass


class _Packer:
    """Branch and bound with LP-relaxation bounds.

    Each node solves the LP relaxation of the remaining free chains with
    HiGHS. The LP duals ``y`` (clipped at 0) are turned into an upper bound
    computed in exact rationals::

        sum(y_u) + sum over chains of max(0, w_c - sum_{u in c} y_u)

    This bound is valid for any ``y >= 0``. Incumbent values are exact
    rationals. A node whose LP optimum is integral is closed once the bound
    is within ``GAP_TOL`` (relative) of that point's exact value, which
    keeps integer-weight problems exact.
    """

    def __init__(self, p: PackingProblem, deadline: float | None):
        self.deadline = deadline
        self.nodes = 0
        self.w = [Fraction(x) for x in p.weights]
        self.wf = list(p.weights)
        self.members = [c.members for c in p.chains]
        self.sets = [frozenset(m) for m in self.members]
        self.by_user: dict[str, list[int]] = {}
        for i, m in enumerate(self.members):
            if self.w[i] > 0:
                for u in m:
                    self.by_user.setdefault(u, []).append(i)
        self.cands = [i for i in range(len(self.w)) if self.w[i] > 0]

    def _tick(self) -> None:
        self.nodes += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Timeout

    def conflicts(self, i: int) -> set[int]:
        return {j for u in self.members[i] for j in self.by_user[u]}

    def components(self, live) -> list[list[int]]:
        live = set(live)
        out = []
        for start in sorted(live):
            if start not in live:
                continue
            comp, todo = [start], [start]
            live.discard(start)
            while todo:
                i = todo.pop()
                for u in self.members[i]:
                    for j in self.by_user[u]:
                        if j in live:
                            live.discard(j)
                            comp.append(j)
                            todo.append(j)
            out.append(sorted(comp))
        return out

    def relax(self, free: list[int]) -> tuple[Fraction, list[float]]:
        """Exact upper bound and LP primal values for the free chains."""
        users = sorted({u for i in free for u in self.members[i]})
        row = {u: r for r, u in enumerate(users)}
        rows, cols = [], []
        for k, i in enumerate(free):
            for u in self.members[i]:
                rows.append(row[u])
                cols.append(k)
        a = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(users), len(free)))
        res = linprog(-np.array([self.wf[i] for i in free]), A_ub=a, b_ub=np.ones(len(users)),
                      bounds=(0, 1), method="highs")
        if res.status != 0:
            # Fall back to the trivial bound; the search stays correct.
            return sum((self.w[i] for i in free), Fraction(0)), [0.5] * len(free)
        y = {u: Fraction(max(0.0, -float(m))) for u, m in zip(users, res.ineqlin.marginals)}
        bound = sum(y.values(), Fraction(0))
        for i in free:
            slack = self.w[i] - sum((y[u] for u in self.members[i]), Fraction(0))
            if slack > 0:
                bound += slack
        return bound, list(res.x)

    def search(self, free: list[int], target: Fraction | None = None):
        """Best selection from ``free``.

        With ``target`` set, stop at the first selection worth ``>= target``
        and return ``None`` if none exists.
        """
        best_v = Fraction(-1) if target is None else target
        best_s: tuple[int, ...] | None = None
        stack = [(Fraction(0), (), free)]
        while stack:
            self._tick()
            v0, fixed, rest = stack.pop()
            if not rest:
                if v0 > best_v or (target is not None and best_s is None and v0 >= best_v):
                    best_v, best_s = v0, fixed
                    if target is not None:
                        return best_s
                continue
            bound, x = self.relax(rest)
            if target is None:
                if v0 + bound <= best_v:
                    continue
            elif v0 + bound < target:
                continue
            picked = [i for i, xi in zip(rest, x) if xi > 0.5]
            if all(min(xi, 1 - xi) < 1e-9 for xi in x) and self._disjoint(picked):
                val = v0 + sum((self.w[i] for i in picked), Fraction(0))
                if val > best_v or (target is not None and val >= target):
                    best_v, best_s = val, fixed + tuple(picked)
                    if target is not None:
                        return best_s
                if v0 + bound - val <= GAP_TOL * max(1, abs(val)):
                    continue
                # Bound and integral point disagree only by round-off in the
                # duals; branch on a chosen chain to make progress.
                j = picked[0] if picked else rest[0]
            else:
                j = max(zip(rest, x), key=lambda t: (min(t[1], 1 - t[1]), -t[0]))[0]
            blocked = self.conflicts(j)
            # Exclude branch first on the stack so the include branch runs first.
            stack.append((v0, fixed, [i for i in rest if i != j]))
            stack.append((v0 + self.w[j], fixed + (j,), [i for i in rest if i not in blocked]))
        return best_s if target is not None else (best_v, best_s or ())

    def _disjoint(self, picked: list[int]) -> bool:
        seen: set[str] = set()
        for i in picked:
            if self.sets[i] & seen:
                return False
            seen |= self.sets[i]
        return True

    def solve_component(self, comp: list[int]) -> tuple[int, ...]:
        """Optimal selection of one conflict component with canonical ties.

        After the optimum value is known, chains are fixed in index order:
        each is included whenever some optimal selection agreeing with the
        earlier decisions contains it.
        """
        if len(comp) == 1:
            return tuple(comp)
        value, current = self.search(comp)
        chosen: list[int] = []
        chosen_v = Fraction(0)
        blocked: set[int] = set()
        for i in comp:
            if i in blocked:
                continue
            if i not in current:
                conf = self.conflicts(i)
                rest = [j for j in comp if j > i and j not in blocked and j not in conf]
                found = self.search(rest, value - chosen_v - self.w[i])
                if found is None:
                    continue
                current = set(chosen) | {i} | set(found)
            chosen.append(i)
            chosen_v += self.w[i]
            blocked |= self.conflicts(i)
            current = set(current)
        return tuple(chosen)


def solve_exact(p: PackingProblem, timeout_s: float | None = DEFAULT_TIMEOUT_S) -> Solution:
    """Maximum-weight user-disjoint selection, proven by exhaustive branch and bound.

    Non-positive weights are never selected. Conflict components are solved
    independently; within a component the search branches on the most
    fractional chain of the LP relaxation. Among optimal selections the one
    with the lexicographically smallest sorted index tuple is returned.
    Optimality is exact for integer weights; for general floats, selections
    within a relative ``GAP_TOL`` of each other count as ties.

    On timeout the finished components are kept, the rest is filled greedily,
    and ``status="timeout"`` is set.
    """
    deadline = None if timeout_s is None else time.monotonic() + timeout_s
    packer = _Packer(p, deadline)
    chosen: list[int] = []
    comps = packer.components(packer.cands)
    for k, comp in enumerate(comps):
        try:
            chosen.extend(packer.solve_component(comp))
        except _Timeout:
            rest = [i for c in comps[k:] for i in c]
            chosen.extend(_greedy(rest, p.weights, packer.sets))
            return _make_solution(p, chosen, "timeout", packer.nodes)
    return _make_solution(p, chosen, "optimal", packer.nodes)


def _greedy(cands: Sequence[int], weights: Sequence, members: Sequence[frozenset]) -> list[int]:
    used: set[str] = set()
    out = []
    for i in sorted(cands, key=lambda i: (-weights[i], i)):
        if weights[i] > 0 and not (members[i] & used):
            out.append(i)
            used |= members[i]
    return out


def solve_greedy(p: PackingProblem) -> Solution:
    """Weight-descending greedy (ties by index). Never better than exact."""
    members = [frozenset(c.members) for c in p.chains]
    return _make_solution(p, _greedy(range(len(p.chains)), p.weights, members), "heuristic")


def brute_force_oracle(p: PackingProblem, limit: int = ORACLE_LIMIT) -> Solution:
    """Exhaustive search over every user-disjoint subset, in exact rationals."""
    n = len(p.chains)
    if n > limit:
        raise PoolTooLargeForOracle(f"{n} chains > oracle limit {limit}")
    members = [frozenset(c.members) for c in p.chains]
    weights = [Fraction(w) for w in p.weights]
    best = [Fraction(0), ()]

    def visit(start: int, used: frozenset, value: Fraction, picked: tuple) -> None:
        if value > best[0]:
            best[0], best[1] = value, picked
        for j in range(start, n):
            if weights[j] > 0 and not (members[j] & used):
                visit(j + 1, used | members[j], value + weights[j], picked + (j,))

    visit(0, frozenset(), Fraction(0), ())
    return _make_solution(p, best[1], "optimal")


# ---------------------------------------------------------------------------
# Pricing of a selection
# ---------------------------------------------------------------------------

def price_solution(sol: Solution, alpha: float | None = None) -> Solution:
    """Attach alpha-percentile offers and per-chain (profit, probability, expected).

    ``alpha`` defaults to the solution's own objective alpha; pass another
    value to cross-evaluate a selection.
    """
    alpha = sol.objective.alpha if alpha is None else alpha
    prices: dict[str, OfferedPrice] = {}
    evals = []
    for c in sol.chains:
        cp = chain_prices(c, alpha)
        prices.update(cp)
        profit = chain_profit(c, cp)
        prob = activation_probability(c, alpha)
        evals.append(ChainEval(profit, prob, prob * profit))
    priced = replace(sol, offered_prices=prices, per_chain=tuple(evals), price_alpha=alpha)
    if alpha == sol.objective.alpha and sol.status != "heuristic":
        drift = abs(priced.recomputed_objective() - sol.objective_value)
        if drift > 1e-6 * max(1.0, abs(sol.objective_value)):
            raise AssertionError(f"objective not reproducible from per-chain values ({drift})")
    return priced


def solve(pool: ChainPool, obj: Objective, timeout_s: float | None = DEFAULT_TIMEOUT_S,
          method: str = "exact") -> Solution:
    """Build, solve and price in one call."""
    problem = build_problem(pool, obj)
    if method == "exact":
        sol = solve_exact(problem, timeout_s)
    elif method == "greedy":
        sol = solve_greedy(problem)
    else:
        raise ValueError(f"unknown method {method!r}")
    return price_solution(sol)


# ---------------------------------------------------------------------------
# Solution files
# ---------------------------------------------------------------------------

SOLUTION_SCHEMA_VERSION = 1


def solution_to_dict(sol: Solution, cost_factor: float | None = None) -> dict:
    """JSON document for a priced solution; offers are in integer cents."""
    sol = sol if sol.per_chain else price_solution(sol)
    return {
        "schema_version": SOLUTION_SCHEMA_VERSION,
        "objective": {"kind": sol.objective.kind.value, "alpha": sol.objective.alpha},
        "cost_factor": cost_factor,
        "status": sol.status,
        "optimal": sol.optimal,
        "objective_value": sol.objective_value,
        "served_user_count": sol.served_user_count,
        "expected_profit": sol.expected_profit,
        "selected": list(sol.selected),
        "chains": [
            {
                "members": list(c.members),
                "length": len(c),
                "profit": e.profit,
                "activation_probability": e.activation_probability,
                "expected_profit": e.expected_profit,
            }
            for c, e in zip(sol.chains, sol.per_chain)
        ],
        "offered_prices_cents": {
            u: round(p.value * 100) for u, p in sorted(sol.offered_prices.items())
        },
    }


def save_solution(sol: Solution, path, cost_factor: float | None = None) -> None:
    write_json_atomic(path, solution_to_dict(sol, cost_factor), indent=1, sort_keys=True)


def load_solution(path, instance) -> Solution:
    """Rebuild a solution against ``instance`` and re-price it."""
    doc = read_json(path)
    if doc.get("schema_version") != SOLUTION_SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"unsupported solution schema {doc.get('schema_version')!r}")
    by_id = {t.user_id: t for t in instance.trips}
    try:
        chains = tuple(Chain(tuple(by_id[u] for u in c["members"])) for c in doc["chains"])
    except KeyError as exc:
        raise SchemaVersionMismatch(f"solution names unknown user {exc}") from None
    obj = Objective(ObjectiveKind(doc["objective"]["kind"]), doc["objective"]["alpha"])
    sol = Solution(obj, chains, tuple(doc["selected"]), doc["objective_value"], doc["status"])
    return price_solution(sol)
