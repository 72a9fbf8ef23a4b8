"""Single-advertiser best responses against committed rivals.

All solvers work on the same object: the advertiser's partition tables, one
per keyword, giving the exact cost and payoff of every query prefix.  A
response is a query vector (how deep to go on each keyword) plus the budget
split backing it.

Four solvers, one contract:

* ``greedy_local_best_response`` — walk segments in order of payoff per
  unit cost, then repair local marginal-payoff violations.  Fast, locally
  stable, not globally optimal.
* ``exact_best_response_dp`` — pseudo-polynomial knapsack over integerized
  utilities; exact optimum, refuses oversized inputs.
* ``rounded_dp_as1`` — the same knapsack on utilities floored to a grid of
  step eps*P/M; payoff at least (1-eps) of optimal.
* ``fptas_as2`` — AS1 on a volume-independent candidate grid per keyword;
  still a (1-eps) guarantee, but with table dimensions independent of
  query volumes.

``brute_force_oracle`` cross-checks the others by enumeration on small
inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .model import Allocation, Instance, Profile
from .partition import INFINITE, PartitionTable, tables_for

ZERO = Fraction(0)


class ScaleError(ValueError):
    """Raised when the exact dp would do more work than its cap allows."""


@dataclass(frozen=True)
class BestResponse:
    """A solver's answer: query vector, budget split, and its exact value."""

    advertiser: str
    method: str
    queries: Dict[str, int]
    committed: Dict[str, Fraction]
    payoff: Fraction
    cost: Fraction
    meta: dict = field(default_factory=dict)

    def profile(self) -> Profile:
        """The advertiser's rows, ready to splice into a day's profile."""
        rows = []
        for kw, x in self.queries.items():
            b = self.committed.get(kw, ZERO)
            if x > 0 or b > 0:
                rows.append(Allocation(self.advertiser, kw, x, b))
        return Profile(tuple(rows))


def _exact_value(tables: Mapping[str, PartitionTable],
                 queries: Mapping[str, int]) -> Tuple[Fraction, Fraction]:
    payoff = cost = ZERO
    for kw, x in queries.items():
        u, c = tables[kw].prefix(x)
        payoff += u
        cost += c
    return payoff, cost


# ---------------------------------------------------------------------------
# greedy walk + local readjustment


class _EdgeState:
    __slots__ = ("kw", "table", "bought", "committed", "cost")

    def __init__(self, kw: str, table: PartitionTable):
        self.kw = kw
        self.table = table
        self.bought = 0           # queries taken so far
        self.committed = ZERO     # budget parked on this keyword
        self.cost = ZERO          # exact cost of the bought prefix

    @property
    def slack(self) -> Fraction:
        return self.committed - self.cost

    def mp_minus(self):
        """Payoff per unit cost at the last bought query (None if none)."""
        if self.bought == 0:
            return None
        return self.table.rate(self.table.segment_of(self.bought))

    def mp_plus(self):
        """Payoff per unit cost at the next query (None if stream is done)."""
        if self.bought >= self.table.volume:
            return None
        return self.table.rate(self.table.segment_of(self.bought + 1))


def _pick_unstable(states: Sequence[_EdgeState]) -> Optional[Tuple[_EdgeState, List[_EdgeState]]]:
    """First edge whose next query beats some other edge's last query."""
    donors = [s for s in states if s.bought > 0]
    for cand in states:
        up = cand.mp_plus()
        if up is None:
            continue
        pool = [d for d in donors if d is not cand and _gt(up, d.mp_minus())]
        if pool:
            return cand, donors
    return None


def _gt(a, b) -> bool:
    """Exact a > b where either side may be the +inf sentinel."""
    if a == INFINITE:
        return b != INFINITE
    if b == INFINITE:
        return False
    return a > b


def greedy_local_best_response(instance: Instance, advertiser: str,
                               others: Profile,
                               keywords: Optional[Iterable[str]] = None,
                               reserve: Fraction = ZERO,
                               on_phase_boundary: Optional[Callable] = None,
                               ) -> BestResponse:
    """Greedy segment walk, then marginal-payoff readjustment.

    Allocation: repeatedly buy out the remaining segment with the best
    payoff-per-unit-cost ratio (free segments first; ties to the earliest
    keyword in instance order).  When a segment no longer fits, buy what the
    remainder affords and park all leftover money on that exit keyword, so
    the whole budget ends up committed.

    Readjustment: while some edge's next query pays a strictly better rate
    than another edge's last query, move money from the worst last-segment
    holding to that edge.  ``on_phase_boundary``, if given, is called
    between the phases with (unstable_edges, snapshot) — useful for
    checking how non-local the walk's raw output really is.
    """
    tables = tables_for(instance, advertiser, others, keywords, reserve)
    states = [_EdgeState(kw, t) for kw, t in tables.items()]
    budget = instance.budget(advertiser)
    spent = ZERO  # total money out of the wallet = sum of committed

    # --- allocation phase -------------------------------------------------
    while True:
        best: Optional[_EdgeState] = None
        best_rate = None
        for s in states:
            if s.bought >= s.table.volume:
                continue
            lam = s.table.segment_of(s.bought + 1)
            r = s.table.rate(lam)
            if best is None or _gt(r, best_rate):
                best, best_rate = s, r
        if best is None:
            break
        lam = best.table.segment_of(best.bought + 1)
        c = best.table.costs[lam]
        seg_end = best.table.breakpoints[lam + 1]
        room = seg_end - best.bought
        price = room * c
        remaining = budget - spent
        if price <= remaining:
            best.bought = seg_end
            best.cost += price
            best.committed += price
            spent += price
            continue
        # exit: buy what fits, park every remaining cent here
        y = int(remaining // c)
        best.bought += y
        best.cost += y * c
        best.committed += remaining
        spent = budget
        break

    if on_phase_boundary is not None:
        unstable = []
        for s in states:
            up = s.mp_plus()
            if up is None:
                continue
            if any(d is not s and d.bought > 0 and _gt(up, d.mp_minus())
                   for d in states):
                unstable.append(s.kw)
        snapshot = {s.kw: {"bought": s.bought, "committed": s.committed,
                           "cost": s.cost} for s in states}
        on_phase_boundary(unstable, snapshot)

    # --- readjustment phase -----------------------------------------------
    guard = 4 * len(states) * len(states) + 16
    while guard > 0:
        guard -= 1
        picked = _pick_unstable(states)
        if picked is None:
            break
        land, donors = picked
        while land.bought < land.table.volume:
            up = land.mp_plus()
            pool = [d for d in donors
                    if d is not land and d.bought > 0 and _gt(up, d.mp_minus())]
            if not pool:
                break
            donor = min(pool, key=lambda d: (d.mp_minus() == INFINITE, d.mp_minus()))
            top = donor.table.segment_of(donor.bought)
            c_top = donor.table.costs[top]
            z_top = donor.table.breakpoints[top]
            partial = (donor.bought - z_top) * c_top
            nxt = land.table.segment_of(land.bought + 1)
            c_l = land.table.costs[nxt]
            if c_l == 0:
                land.bought = land.table.breakpoints[nxt + 1]
                continue
            room = land.table.breakpoints[nxt + 1] - land.bought
            funds = partial + donor.slack + land.slack
            y = int(funds // c_l)
            if y < room:
                # drain the donor's top segment entirely
                moved = partial + donor.slack
                donor.committed -= moved
                donor.cost -= partial
                donor.bought = z_top
                land.committed += moved
                land.cost += y * c_l
                land.bought += y
            else:
                # fill the landing segment; peel just enough off the donor
                need = room * c_l - donor.slack - land.slack
                ytil = max(0, -((-need) // c_top)) if c_top > 0 else 0
                donor.cost -= ytil * c_top
                donor.committed -= room * c_l - land.slack
                donor.bought -= ytil
                land.cost += room * c_l
                land.committed = land.cost
                land.bought = land.table.breakpoints[nxt + 1]
            donors = [d for d in states if d.bought > 0]
    else:
        raise RuntimeError("readjustment failed to settle")

    queries = {s.kw: s.bought for s in states}
    committed = {s.kw: s.committed for s in states}
    payoff, cost = _exact_value(tables, queries)
    return BestResponse(advertiser, "greedy", queries, committed, payoff, cost)


# ---------------------------------------------------------------------------
# knapsack over prefixes


def _max_affordable_prefix(table: PartitionTable, budget: Fraction) -> int:
    return table.max_affordable(budget)


def _candidate_values(table: PartitionTable, xs: Iterable[int]):
    """(x, exact cost, exact payoff) triples for candidate prefix lengths."""
    out = []
    for x in xs:
        u, c = table.prefix(x)
        out.append((x, c, u))
    return out


def _knapsack(tabs: List[Tuple[str, PartitionTable]], budget: Fraction,
              candidates: Dict[str, List[Tuple[int, Fraction, Fraction]]],
              unit: Fraction) -> Tuple[Dict[str, int], Fraction]:
    """Min-cost table over integerized utility targets; returns witness.

    ``unit`` converts exact payoffs to integer levels: level = floor(u/unit).
    With ``unit`` an exact common divisor of all payoffs the rounding is
    lossless and the result is the true optimum.
    """
    levels: Dict[str, List[Tuple[int, Fraction, int]]] = {}
    total = 0
    for kw, _ in tabs:
        lv = [(x, c, int(u // unit)) for x, c, u in candidates[kw]]
        levels[kw] = lv
        total += max(l for _, _, l in lv) if lv else 0
    best_cost: List[Optional[Fraction]] = [None] * (total + 1)
    best_cost[0] = ZERO
    parents: List[List[Optional[Tuple[int, int]]]] = []
    for kw, _ in tabs:
        nxt: List[Optional[Fraction]] = [None] * (total + 1)
        par: List[Optional[Tuple[int, int]]] = [None] * (total + 1)
        for p in range(total + 1):
            for x, c, lvl in levels[kw]:
                q = p - lvl if p > lvl else 0
                prev = best_cost[q]
                if prev is None:
                    continue
                tot = prev + c
                if tot > budget:
                    continue
                if nxt[p] is None or tot < nxt[p]:
                    nxt[p] = tot
                    par[p] = (x, q)
        best_cost = nxt
        parents.append(par)
    opt = 0
    for p in range(total, -1, -1):
        if best_cost[p] is not None:
            opt = p
            break
    queries: Dict[str, int] = {}
    p = opt
    for (kw, _), par in zip(reversed(tabs), reversed(parents)):
        x, q = par[p]
        queries[kw] = x
        p = q
    return queries, Fraction(opt)


def _utility_unit(tabs: List[Tuple[str, PartitionTable]]) -> Fraction:
    """Exact common divisor of all per-query payoffs: 1/lcm(denominators)."""
    den = 1
    for _, t in tabs:
        for u in t.payoffs:
            den = den * u.denominator // math.gcd(den, u.denominator)
    return Fraction(1, den)


def _config_pair(ta: PartitionTable, tb: PartitionTable, budget: Fraction,
                 scale_cap: int) -> Tuple[int, int, int]:
    """Exact two-keyword optimum by segment-configuration enumeration.

    Fix which segment each prefix ends in; within a configuration the
    choice is a two-variable knapsack over the in-segment query counts,
    solved by scanning the cheaper-to-scan variable (per-query payoffs are
    never negative, so free segments are always taken whole).  Work is the
    total scan length over feasible configurations; refuses beyond the cap.
    """
    work = 0
    for sa in range(ta.segment_count):
        for sb in range(tb.segment_count):
            base = ta.cum_cost[sa] + tb.cum_cost[sb]
            if base > budget:
                continue
            la = ta.breakpoints[sa + 1] - ta.breakpoints[sa]
            lb = tb.breakpoints[sb + 1] - tb.breakpoints[sb]
            ca, cb = ta.costs[sa], tb.costs[sb]
            if ca > 0 and cb > 0:
                work += min(la, lb) + 1
            else:
                work += 1
    if work > scale_cap:
        raise ScaleError(
            "exact dp would scan ~%d points (cap %d); use the fptas instead"
            % (work, scale_cap))

    best_u = None
    best = (0, 0)
    for sa in range(ta.segment_count):
        for sb in range(tb.segment_count):
            base_c = ta.cum_cost[sa] + tb.cum_cost[sb]
            room = budget - base_c
            if room < 0:
                continue
            base_u = ta.cum_payoff[sa] + tb.cum_payoff[sb]
            la = ta.breakpoints[sa + 1] - ta.breakpoints[sa]
            lb = tb.breakpoints[sb + 1] - tb.breakpoints[sb]
            ca, cb = ta.costs[sa], tb.costs[sb]
            ua, ub = ta.payoffs[sa], tb.payoffs[sb]
            if ca == 0 and cb == 0:
                picks = [(la, lb)]
            elif ca == 0:
                picks = [(la, min(lb, int(room // cb)))]
            elif cb == 0:
                picks = [(min(la, int(room // ca)), lb)]
            elif la <= lb:
                picks = [(i, min(lb, int((room - i * ca) // cb)))
                         for i in range(min(la, int(room // ca)) + 1)]
            else:
                picks = [(min(la, int((room - i * cb) // ca)), i)
                         for i in range(min(lb, int(room // cb)) + 1)]
            for i, j in picks:
                u = base_u + i * ua + j * ub
                if best_u is None or u > best_u:
                    best_u = u
                    best = (ta.breakpoints[sa] + i, tb.breakpoints[sb] + j)
    return best[0], best[1], work


def exact_best_response_dp(instance: Instance, advertiser: str, others: Profile,
                           keywords: Optional[Iterable[str]] = None,
                           reserve: Fraction = ZERO,
                           scale_cap: int = 10 ** 7) -> BestResponse:
    """Exact optimum over all query vectors within budget.

    One keyword needs no search at all (per-query payoffs are nonnegative,
    so the deepest affordable prefix is optimal); two keywords go through
    exact segment-configuration enumeration; more go through dynamic
    programming over utilities rescaled by the lcm of their denominators
    (costs stay exact rationals throughout).  Projected work beyond
    ``scale_cap`` raises ``ScaleError`` — use ``fptas_as2`` for such sizes.
    """
    tables = tables_for(instance, advertiser, others, keywords, reserve)
    tabs = list(tables.items())
    budget = instance.budget(advertiser)
    meta: dict = {}
    if len(tabs) == 0:
        queries: Dict[str, int] = {}
    elif len(tabs) == 1:
        kw, t = tabs[0]
        queries = {kw: t.max_affordable(budget)}
        meta["work"] = t.segment_count
    elif len(tabs) == 2:
        (ka, ta), (kb, tb) = tabs
        xa, xb, work = _config_pair(ta, tb, budget, scale_cap)
        queries = {ka: xa, kb: xb}
        meta["work"] = work
    else:
        unit = _utility_unit(tabs)
        maxaff = {kw: t.max_affordable(budget) for kw, t in tabs}
        total_levels = 0
        total_cands = 0
        for kw, t in tabs:
            u, _ = t.prefix(maxaff[kw])
            total_levels += int(u // unit)
            total_cands += maxaff[kw] + 1
        projected = (total_levels + 1) * total_cands
        if projected > scale_cap:
            raise ScaleError(
                "exact dp would need ~%d cells (cap %d); use the fptas instead"
                % (projected, scale_cap))
        candidates = {kw: _candidate_values(t, range(maxaff[kw] + 1))
                      for kw, t in tabs}
        queries, _ = _knapsack(tabs, budget, candidates, unit)
        meta.update(unit=unit, cells=projected)
    payoff, cost = _exact_value(tables, queries)
    committed = {kw: tables[kw].prefix_cost(x) for kw, x in queries.items()}
    return BestResponse(advertiser, "dp", queries, committed, payoff, cost,
                        meta=meta)


def _peak_single(tabs, budget) -> Fraction:
    """Best payoff any single keyword alone can reach within the budget."""
    best = ZERO
    for kw, t in tabs:
        u, _ = t.prefix(t.max_affordable(budget))
        if u > best:
            best = u
    return best


def rounded_dp_as1(instance: Instance, advertiser: str, others: Profile,
                   eps: Fraction, keywords: Optional[Iterable[str]] = None,
                   reserve: Fraction = ZERO,
                   grids: Optional[Dict[str, Sequence[int]]] = None,
                   ) -> BestResponse:
    """Knapsack on utilities floored to multiples of eps*P/M.

    P is the best single-keyword payoff within budget, M the keyword count;
    the utility axis then has at most M*ceil(M/eps) levels regardless of
    how fine the exact payoffs are.  Guarantee: payoff >= (1-eps)*optimum.
    ``grids`` optionally restricts candidate prefix lengths per keyword
    (the fptas wrapper passes volume-independent grids).
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    tables = tables_for(instance, advertiser, others, keywords, reserve)
    tabs = list(tables.items())
    budget = instance.budget(advertiser)
    m = len(tabs)
    peak = _peak_single(tabs, budget)
    if m == 0 or peak == 0:
        return BestResponse(advertiser, "as1", {kw: 0 for kw, _ in tabs},
                            {kw: ZERO for kw, _ in tabs}, ZERO, ZERO,
                            meta={"eps": eps})
    unit = eps * peak / m
    candidates = {}
    for kw, t in tabs:
        xs = grids[kw] if grids is not None else range(t.max_affordable(budget) + 1)
        candidates[kw] = [(x, c, u) for x, c, u in _candidate_values(t, xs)
                          if c <= budget]
    queries, _ = _knapsack(tabs, budget, candidates, unit)
    payoff, cost = _exact_value(tables, queries)
    committed = {kw: tables[kw].prefix_cost(x) for kw, x in queries.items()}
    return BestResponse(advertiser, "as1", queries, committed, payoff, cost,
                        meta={"eps": eps, "unit": unit})


def build_subpartition(table: PartitionTable, eps: Fraction, m: int,
                       cap: Optional[int] = None) -> Tuple[int, ...]:
    """Volume-independent candidate prefix lengths for one keyword.

    Each exact segment of length L is carved into G = ceil(m/eps^2) equal
    blocks of floor(L/G) queries plus L mod G single queries (all singles
    when L < G); candidates are the piece endpoints.  Restricting choices
    to these endpoints costs at most an eps^2 fraction of the optimum while
    keeping the candidate count independent of query volume.

    ``cap`` truncates the table at a prefix length first (and ends the grid
    exactly there).  The loss bound needs the cap: gridding queries the
    budget could never reach would let a whole block dominate the best
    affordable bundle, so callers pass the affordable prefix length.
    """
    g = math.ceil(m / (eps * eps))
    stop = table.volume if cap is None else cap
    points = [0]
    for lam in range(table.segment_count):
        lo = table.breakpoints[lam]
        hi = min(table.breakpoints[lam + 1], stop)
        length = hi - lo
        if length <= 0:
            break
        a, b = divmod(length, g)
        pos = lo
        if a >= 1:
            for _ in range(g):
                pos += a
                points.append(pos)
        for _ in range(b):
            pos += 1
            points.append(pos)
    return tuple(points)


def fptas_as2(instance: Instance, advertiser: str, others: Profile,
              eps: Fraction, keywords: Optional[Iterable[str]] = None,
              reserve: Fraction = ZERO) -> BestResponse:
    """Fully polynomial scheme: AS1 on per-keyword endpoint grids.

    The grid forfeits at most an eps^2 factor and the rounding a further
    eps/(1+eps), which compound to exactly (1-eps); table dimensions depend
    only on keyword count and eps, never on volumes.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    tables = tables_for(instance, advertiser, others, keywords, reserve)
    m = len(tables)
    budget = instance.budget(advertiser)
    grids = {kw: build_subpartition(t, eps, m, cap=t.max_affordable(budget))
             for kw, t in tables.items()}
    inner = eps / (1 + eps)
    res = rounded_dp_as1(instance, advertiser, others, inner, keywords,
                         reserve, grids=grids)
    return BestResponse(advertiser, "fptas", res.queries, res.committed,
                        res.payoff, res.cost,
                        meta={"eps": eps, "inner_eps": inner,
                              "grid_sizes": {k: len(v) for k, v in grids.items()}})


def brute_force_oracle(instance: Instance, advertiser: str, others: Profile,
                       keywords: Optional[Iterable[str]] = None,
                       reserve: Fraction = ZERO,
                       cap: int = 10 ** 6) -> BestResponse:
    """Exhaustive search over all query vectors (small inputs only)."""
    tables = tables_for(instance, advertiser, others, keywords, reserve)
    tabs = list(tables.items())
    budget = instance.budget(advertiser)
    space = 1
    for _, t in tabs:
        space *= t.volume + 1
        if space > cap:
            raise ScaleError("search space beyond %d points" % cap)
    best_payoff = ZERO
    best_vec = tuple(0 for _ in tabs)

    def walk(idx: int, payoff: Fraction, cost: Fraction, vec: Tuple[int, ...]):
        nonlocal best_payoff, best_vec
        if idx == len(tabs):
            if payoff > best_payoff:
                best_payoff, best_vec = payoff, vec
            return
        kw, t = tabs[idx]
        for x in range(t.volume + 1):
            u, c = t.prefix(x)
            if cost + c > budget:
                break  # prefix cost only grows with x
            walk(idx + 1, payoff + u, cost + c, vec + (x,))

    walk(0, ZERO, ZERO, ())
    queries = {kw: x for (kw, _), x in zip(tabs, best_vec)}
    payoff, cost = _exact_value(tables, queries)
    committed = {kw: tables[kw].prefix_cost(x) for kw, x in queries.items()}
    return BestResponse(advertiser, "brute", queries, committed, payoff, cost)
