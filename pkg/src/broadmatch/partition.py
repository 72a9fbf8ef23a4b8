"""Constant-price segmentation of a keyword's query stream.

Within a day, the active set on a keyword only changes when somebody's
remaining budget can no longer cover the current per-query price, or when a
scheduled participant enters.  Between such events every query looks the
same, so the whole stream splits into at most N+1 segments (plus one per
scheduled entry) with constant prices, costs and payoffs.  This module
computes that segmentation exactly by stepping from event to event — never
query by query, so volumes can be astronomically larger than the market.

``PartitionTable`` is the per-(advertiser, keyword) view used by the best
response solvers: the advertiser is assumed present in every query, and the
table records what each query prefix costs and pays.  ``global_partition``
is the all-advertiser view of an actual day under committed budgets.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import auction
from .model import Instance, Profile

ZERO = Fraction(0)
INFINITE = float("inf")  # order sentinel for zero-cost rates; never used in arithmetic


@dataclass(frozen=True)
class Segment:
    """A maximal run of queries with a fixed priced slate.

    ``lo``..``hi`` are 1-based inclusive query numbers.  ``ranking`` comes
    straight from the slate (descending score); prices and payoffs are per
    query.  A segment with an empty ranking is dark: those queries go unsold.
    """

    lo: int
    hi: int
    ranking: Tuple[Tuple[str, Fraction, object], ...]
    prices: Dict[str, Fraction]
    payoffs: Dict[str, Fraction]
    revenue: Fraction
    welfare: Fraction

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    @property
    def active(self) -> Tuple[str, ...]:
        return tuple(adv for adv, _, _ in self.ranking)


class _Bidder:
    __slots__ = ("id", "score", "start", "pool")

    def __init__(self, id: str, score: Fraction, start: int, pool: Optional[Fraction]):
        self.id = id
        self.score = score
        self.start = start
        self.pool = pool  # None = unlimited (used for the table's subject)


def run_keyword_timeline(slots, volume: int, bidders: Iterable[Tuple],
                         reserve: Fraction = ZERO) -> Tuple[Segment, ...]:
    """Advance a keyword's day from event to event.

    ``bidders`` yields (id, score, start_query, pool) with pool None meaning
    unlimited.  Participants below the reserve never enter.  Each iteration
    prices the current set, drops everyone who cannot afford one more query,
    then jumps to the next entry or exhaustion event.
    """
    pending = sorted(
        (_Bidder(i, s, max(1, q0), b) for i, s, q0, b in bidders if s >= reserve),
        key=lambda b: (b.start, b.id),
    )
    active: List[_Bidder] = []
    segments: List[Segment] = []
    t = 1
    while t <= volume:
        while pending and pending[0].start <= t:
            active.append(pending.pop(0))
        # settle the slate: evict members priced beyond their pool, one at a
        # time from the lowest score up — an eviction can only lower the
        # others' prices, so survivors are rechecked before they go too
        while True:
            slate = auction.price_query(((b.id, b.score) for b in active),
                                        slots, reserve)
            broke = [b for b in active
                     if b.pool is not None and slate.prices[b.id] > b.pool]
            if not broke:
                break
            out = min(broke, key=lambda b: (b.score, b.id))
            active = [b for b in active if b is not out]
        next_entry = pending[0].start if pending else volume + 1
        if not active:
            hi = min(volume, next_entry - 1)
            segments.append(Segment(t, hi, (), {}, {}, ZERO, ZERO))
            t = hi + 1
            continue
        hi = min(volume, next_entry - 1)
        for b in active:
            price = slate.prices[b.id]
            if b.pool is not None and price > 0:
                hi = min(hi, t + b.pool // price - 1)
        segments.append(Segment(t, hi, slate.ranking, slate.prices, slate.payoffs,
                                slate.revenue, slate.welfare))
        length = hi - t + 1
        for b in active:
            if b.pool is not None:
                b.pool -= length * slate.prices[b.id]
        t = hi + 1
    return tuple(segments)


@dataclass(frozen=True)
class PartitionTable:
    """Per-prefix cost and payoff of one advertiser on one keyword.

    Segment ``lam`` covers queries ``breakpoints[lam]+1 .. breakpoints[lam+1]``
    at constant per-query cost ``costs[lam]`` and payoff ``payoffs[lam]``.
    Cumulative sums are precomputed so prefix evaluation is a bisect.
    """

    advertiser: str
    keyword: str
    volume: int
    breakpoints: Tuple[int, ...]          # z_0 = 0 < z_1 < ... < z_Lambda = volume
    costs: Tuple[Fraction, ...]           # per segment
    payoffs: Tuple[Fraction, ...]
    actives: Tuple[Tuple[str, ...], ...]  # ranked active set per segment
    cum_cost: Tuple[Fraction, ...] = field(repr=False, default=())
    cum_payoff: Tuple[Fraction, ...] = field(repr=False, default=())

    def __post_init__(self):
        cc, cu = [ZERO], [ZERO]
        for lam, c in enumerate(self.costs):
            length = self.breakpoints[lam + 1] - self.breakpoints[lam]
            cc.append(cc[-1] + length * c)
            cu.append(cu[-1] + length * self.payoffs[lam])
        object.__setattr__(self, "cum_cost", tuple(cc))
        object.__setattr__(self, "cum_payoff", tuple(cu))

    @property
    def segment_count(self) -> int:
        return len(self.costs)

    def rate(self, lam: int):
        """Marginal payoff per unit cost in segment ``lam``; +inf when free."""
        c = self.costs[lam]
        if c == 0:
            return INFINITE
        return self.payoffs[lam] / c

    def segment_of(self, query: int) -> int:
        """Index of the segment containing a 1-based query number."""
        if not 1 <= query <= self.volume:
            raise ValueError("query %d out of range 1..%d" % (query, self.volume))
        return bisect_left(self.breakpoints, query) - 1

    def prefix(self, l: int) -> Tuple[Fraction, Fraction]:
        """(payoff, cost) of the first ``l`` queries, exactly."""
        if not 0 <= l <= self.volume:
            raise ValueError("prefix length %d out of range 0..%d" % (l, self.volume))
        k = bisect_right(self.breakpoints, l) - 1
        if self.breakpoints[k] == l:
            return self.cum_payoff[k], self.cum_cost[k]
        extra = l - self.breakpoints[k]
        return (self.cum_payoff[k] + extra * self.payoffs[k],
                self.cum_cost[k] + extra * self.costs[k])

    def prefix_cost(self, l: int) -> Fraction:
        return self.prefix(l)[1]

    def prefix_payoff(self, l: int) -> Fraction:
        return self.prefix(l)[0]

    def max_affordable(self, budget: Fraction) -> int:
        """Largest prefix whose exact cost fits the budget."""
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        for lam in range(self.segment_count):
            if self.cum_cost[lam + 1] <= budget:
                continue
            room = budget - self.cum_cost[lam]
            return self.breakpoints[lam] + int(room // self.costs[lam])
        return self.volume

    def query_cost(self, query: int) -> Fraction:
        """Per-query cost c at a 1-based query number."""
        return self.costs[self.segment_of(query)]

    def query_payoff(self, query: int) -> Fraction:
        return self.payoffs[self.segment_of(query)]


def prefix_totals(table: PartitionTable, l: int) -> Tuple[Fraction, Fraction]:
    """(cumulative payoff, cumulative cost) through query ``l``."""
    return table.prefix(l)


def _table_from_timeline(instance: Instance, keyword: str, advertiser: str,
                         segments: Sequence[Segment]) -> PartitionTable:
    breakpoints = [0]
    costs: List[Fraction] = []
    payoffs: List[Fraction] = []
    actives: List[Tuple[str, ...]] = []
    for seg in segments:
        breakpoints.append(seg.hi)
        costs.append(seg.prices[advertiser])
        payoffs.append(seg.payoffs[advertiser])
        actives.append(seg.active)
    return PartitionTable(advertiser, keyword, instance.volume(keyword),
                          tuple(breakpoints), tuple(costs), tuple(payoffs),
                          tuple(actives))


def query_partition(instance: Instance, keyword: str, advertiser: str,
                    others_budgets: Mapping[str, Fraction],
                    reserve: Fraction = ZERO) -> PartitionTable:
    """Segment a keyword's stream for one advertiser, given rivals' budgets.

    The advertiser is assumed present in every query (unlimited pool); a
    rival participates iff it holds an edge and a positive budget.  Rivals
    drop out exactly when one more query at the current price no longer fits
    their remaining budget.
    """
    if not instance.has_edge(advertiser, keyword):
        raise KeyError("no edge (%s, %s)" % (advertiser, keyword))
    if instance.score(advertiser, keyword) < reserve:
        raise ValueError("advertiser %s is below the reserve on %s: no "
                         "query is purchasable" % (advertiser, keyword))
    bidders = [(advertiser, instance.score(advertiser, keyword), 1, None)]
    for rival, budget in sorted(others_budgets.items()):
        if rival == advertiser:
            continue
        if budget < 0:
            raise ValueError("negative budget for %r" % rival)
        if not instance.has_edge(rival, keyword):
            raise KeyError("no edge (%s, %s)" % (rival, keyword))
        if budget > 0:
            bidders.append((rival, instance.score(rival, keyword), 1, budget))
    segments = run_keyword_timeline(instance.slots, instance.volume(keyword),
                                    bidders, reserve)
    return _table_from_timeline(instance, keyword, advertiser, segments)


def tables_for(instance: Instance, advertiser: str, others: Profile,
               keywords: Optional[Iterable[str]] = None,
               reserve: Fraction = ZERO) -> Dict[str, PartitionTable]:
    """Partition tables for an advertiser against a committed profile.

    Rivals participate exactly where the profile has a row for them (any of
    the advertiser's own rows are ignored); a row's start query is honored,
    so tables can be computed against mid-stream schedules too.  Keywords
    where the reserve shuts the advertiser out are omitted: she cannot
    appear in a single query there, so there is no stream to segment.
    """
    if keywords is None:
        keywords = instance.keywords_of(advertiser)
    tables: Dict[str, PartitionTable] = {}
    for kw in keywords:
        if instance.score(advertiser, kw) < reserve:
            continue
        bidders = [(advertiser, instance.score(advertiser, kw), 1, None)]
        for row in others.rows_on(kw):
            if row.advertiser == advertiser:
                continue
            bidders.append((row.advertiser, instance.score(row.advertiser, kw),
                            row.start_query, row.budget))
        segments = run_keyword_timeline(instance.slots, instance.volume(kw),
                                        bidders, reserve)
        tables[kw] = _table_from_timeline(instance, kw, advertiser, segments)
    return tables


@dataclass(frozen=True)
class GlobalPartition:
    """All-advertiser day segmentation plus excess-budget bookkeeping.

    ``segments[kw]`` is the actual timeline under the committed profile.
    ``leftover[i]`` is the advertiser's unspent budget D_i; ``top_score[i]``
    her best base-edge score s_i.  ``excess_holders[kw]`` is the set I_kw of
    base-edge holders of the keyword with s_i <= D_i: advertisers who could
    afford at least one query anywhere they already bid.
    """

    segments: Dict[str, Tuple[Segment, ...]]
    spend: Dict[str, Fraction]
    leftover: Dict[str, Fraction]
    top_score: Dict[str, Fraction]
    excess_holders: Dict[str, frozenset]

    def last_active(self, keyword: str) -> Tuple[str, ...]:
        return self.segments[keyword][-1].active if self.segments[keyword] else ()

    def breakpoints(self, keyword: str) -> List[int]:
        segs = self.segments[keyword]
        return [0] + [s.hi for s in segs]


def global_partition(instance: Instance, profile: Profile,
                     reserve: Fraction = ZERO) -> GlobalPartition:
    """Run the day for every keyword under the committed profile."""
    segments: Dict[str, Tuple[Segment, ...]] = {}
    spend: Dict[str, Fraction] = {a.id: ZERO for a in instance.advertisers}
    for k in instance.keywords:
        bidders = [(r.advertiser, instance.score(r.advertiser, k.id),
                    r.start_query, r.budget) for r in profile.rows_on(k.id)]
        segs = run_keyword_timeline(instance.slots, k.volume, bidders, reserve)
        segments[k.id] = segs
        for seg in segs:
            for adv in seg.active:
                spend[adv] += len(seg) * seg.prices[adv]
    leftover = {a.id: a.budget - spend[a.id] for a in instance.advertisers}
    top_score: Dict[str, Fraction] = {}
    for e in instance.base_edges():
        cur = top_score.get(e.advertiser)
        if cur is None or e.score > cur:
            top_score[e.advertiser] = e.score
    excess_holders = {
        k.id: frozenset(
            e.advertiser for e in instance.base_edges() if e.keyword == k.id
            and top_score[e.advertiser] <= leftover[e.advertiser]
        )
        for k in instance.keywords
    }
    return GlobalPartition(segments, spend, leftover, top_score, excess_holders)
