"""Auctioneer-steered use of leftover budgets on a broadened matching.

After the base day, some advertisers end with money left over — at least a
top-score query's worth, so it could actually buy something.  When the
matching is broadened with new edges, the auctioneer itself can decide
where and *when* those advertisers enter the new streams: entry timing is
the auctioneer's lever, not the advertisers'.

``excess_budgets`` finds the advertisers with usable leftovers;
``obrev_check`` decides whether any of them can be placed to strictly
raise revenue (with a structural witness naming the keyword and why);
``allocate_excess`` actually schedules entries, greedily committing the
single best revenue-positive move at a time, never touching what the base
day already sold.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .equilibrium import natural_base_split
from .model import Allocation, Instance, Profile
from .partition import Segment, run_keyword_timeline
from .simulate import DayOutcome, simulate_day

ZERO = Fraction(0)
FINE_WINDOW = 64  # exhaustive-scan limit for per-query entry refinement


def _top_base_score(instance: Instance, advertiser: str) -> Optional[Fraction]:
    best = None
    for e in instance.base_edges():
        if e.advertiser == advertiser and (best is None or e.score > best):
            best = e.score
    return best


def excess_budgets(instance: Instance, profile: Optional[Profile] = None,
                   reserve: Fraction = ZERO) -> Dict[str, dict]:
    """Leftover money after the base day, flagged where it could still buy.

    An advertiser holds *excess* when her leftover covers at least her top
    base score — the cheapest conceivable price of one more query wherever
    she already bids.  Smaller leftovers are change, not money.
    """
    base = instance.base_instance()
    if profile is None:
        profile = natural_base_split(instance)
    day = simulate_day(base, profile, reserve)
    out: Dict[str, dict] = {}
    for adv in base.advertisers:
        top = _top_base_score(base, adv.id)
        left = day.leftover[adv.id]
        out[adv.id] = {
            "budget": adv.budget,
            "spend": day.spend[adv.id],
            "leftover": left,
            "top_score": top,
            "excess": top is not None and top <= left,
        }
    return out


def obrev_check(base: Instance, ext: Instance,
                profile: Optional[Profile] = None,
                reserve: Fraction = ZERO) -> dict:
    """Can excess money be routed through new edges to raise revenue?

    Examines the base day's final segments keyword by keyword and reports a
    witness (advertiser, keyword, condition) for every placement with
    structural room to create new payments:

    * ``a`` — the stream's last active set is exactly the keyword's excess
      holders and the entrant can still win a slot among them;
    * ``b`` — the stream went dark, and besides the entrant at least one
      more potential companion (an equal-scored excess holder, or any
      lower-scored new-edge holder) could enter with her, so somebody ends
      up paying;
    * ``c`` — the last active set still contains non-excess members and the
      entrant outscores the best of them.
    """
    if profile is None:
        profile = natural_base_split(base)
    info = excess_budgets(base, profile, reserve)
    excess = {i for i, rec in info.items() if rec["excess"]}
    day = simulate_day(base.base_instance(), profile, reserve)
    new_edges = [e for e in ext.edges if not base.has_edge(e.advertiser, e.keyword)]

    holders: Dict[str, Set[str]] = {}     # keyword -> new-edge holders
    for e in new_edges:
        holders.setdefault(e.keyword, set()).add(e.advertiser)
    excess_on: Dict[str, Set[str]] = {}   # keyword -> excess base holders
    for e in base.base_edges():
        if e.advertiser in excess:
            excess_on.setdefault(e.keyword, set()).add(e.advertiser)

    witnesses: List[dict] = []
    for e in sorted(new_edges, key=lambda e: (e.advertiser,
                                              ext.keyword_index(e.keyword))):
        i, j = e.advertiser, e.keyword
        if i not in excess:
            continue
        last = set(day.segments[j][-1].active) if day.segments.get(j) else set()
        dark = not last
        s_ij = ext.score(i, j)
        cond = None
        if dark:
            mates = {l for l in holders.get(j, ()) if l in excess
                     and ext.score(l, j) == s_ij}
            mates |= {l for l in holders.get(j, ()) if ext.score(l, j) < s_ij}
            if len(mates) > 1:
                cond = "b"
        else:
            expected = excess_on.get(j, set())
            if last == expected:
                ahead = sum(1 for m in last if base.score(m, j) > s_ij)
                if ahead < base.slots.count:
                    cond = "a"
            else:
                outsiders = last - expected
                if outsiders and s_ij > max(base.score(l, j) for l in outsiders):
                    cond = "c"
        if cond is not None:
            witnesses.append({"advertiser": i, "keyword": j, "condition": cond})
    return {"ok": bool(witnesses), "witnesses": witnesses,
            "excess": sorted(excess)}


def _keyword_revenue(instance: Instance, rows: Sequence[Allocation], kw: str,
                     reserve: Fraction) -> Fraction:
    bidders = [(r.advertiser, instance.score(r.advertiser, kw),
                r.start_query, r.budget) for r in rows if r.keyword == kw]
    segs = run_keyword_timeline(instance.slots, instance.volume(kw), bidders,
                                reserve)
    return sum((len(s) * s.revenue for s in segs), ZERO)


def _entry_cost(instance: Instance, rows: Sequence[Allocation], kw: str,
                entrant: Allocation, reserve: Fraction) -> Fraction:
    """What the entrant actually pays on the keyword, exactly."""
    bidders = [(r.advertiser, instance.score(r.advertiser, kw),
                r.start_query, r.budget)
               for r in rows if r.keyword == kw and r is not entrant]
    bidders.append((entrant.advertiser,
                    instance.score(entrant.advertiser, kw),
                    entrant.start_query, entrant.budget))
    segs = run_keyword_timeline(instance.slots, instance.volume(kw), bidders,
                                reserve)
    paid = ZERO
    for s in segs:
        if entrant.advertiser in s.prices:
            paid += len(s) * s.prices[entrant.advertiser]
    return paid


def _reduce_rows(rows: Tuple[Allocation, ...], advertiser: str,
                 day: DayOutcome) -> Tuple[Allocation, ...]:
    """Pin the advertiser's committed pools to what they actually spend.

    A pool equal to its own exact spend buys the same queries to the same
    boundary, so the day is unchanged — but the difference becomes free
    wallet money the scheduler may commit elsewhere.
    """
    out = []
    for r in rows:
        if r.advertiser == advertiser:
            spent = day.edge_spend.get((r.advertiser, r.keyword), ZERO)
            out.append(Allocation(r.advertiser, r.keyword, r.queries, spent,
                                  r.start_query))
        else:
            out.append(r)
    return tuple(out)


def _fine_starts(lo: int, hi: int) -> List[int]:
    """Up to FINE_WINDOW evenly spread probe starts across [lo, hi]."""
    if hi - lo + 1 <= FINE_WINDOW:
        return list(range(lo, hi + 1))
    return sorted({lo + round(k * (hi - lo) / (FINE_WINDOW - 1))
                   for k in range(FINE_WINDOW)})


def allocate_excess(base: Instance, ext: Instance,
                    profile: Optional[Profile] = None,
                    fine: bool = False, reserve: Fraction = ZERO) -> dict:
    """Schedule excess-budget entries on new edges, one best move at a time.

    Starting from the base-day schedule, repeatedly evaluates every unused
    new edge of an excess holder at candidate entry queries (each current
    segment start; with ``fine``, a per-query scan inside each segment,
    subsampled and then halved in around the best probe when a segment is
    wider than 64 queries).  The strictly best revenue-positive move is
    committed: the entrant's base pools are first pinned to their exact
    spend (freeing the leftover), and the new edge receives exactly what
    the entry costs.  When no single entry pays, pairs of entrants into a
    dark stream are tried as one move.  Stops when nothing positive is
    left.  Greedy and timing-restricted, hence a lower bound: a miss does
    not prove no improving schedule exists.
    """
    if profile is None:
        profile = natural_base_split(base)
    rows: Tuple[Allocation, ...] = tuple(
        Allocation(r.advertiser, r.keyword, r.queries, r.budget, r.start_query)
        for r in profile.rows)
    initial_day = simulate_day(ext, Profile(rows, kind="schedule"), reserve)
    moves: List[dict] = []
    used: Set[Tuple[str, str]] = set()
    reduced: Set[str] = set()
    new_edges = [(e.advertiser, e.keyword) for e in ext.edges
                 if not base.has_edge(e.advertiser, e.keyword)]
    new_edges.sort(key=lambda ij: (ij[0], ext.keyword_index(ij[1])))

    def wallet(i: str, day: DayOutcome) -> Fraction:
        free = ext.budget(i)
        for r in rows:
            if r.advertiser != i:
                continue
            if i in reduced or not base.has_edge(i, r.keyword):
                free -= r.budget
            else:
                free -= day.edge_spend.get((i, r.keyword), ZERO)
        return free

    def try_entry(i: str, j: str, start: int, avail: Fraction,
                  day: DayOutcome) -> Tuple[Fraction, Allocation]:
        probe = Allocation(i, j, 0, avail, start)
        paid = _entry_cost(ext, rows, j, probe, reserve)
        entrant = Allocation(i, j, 0, paid, start)
        rev = _keyword_revenue(ext, [r for r in rows if r.keyword == j]
                               + [entrant], j, reserve)
        return rev - day.keyword_revenue[j], entrant

    info = excess_budgets(base, profile, reserve)
    while True:
        day = simulate_day(ext, Profile(rows, kind="schedule"), reserve)
        best_delta = ZERO
        best: Optional[Tuple[Allocation, ...]] = None
        best_move: Optional[dict] = None
        for i, j in new_edges:
            if (i, j) in used:
                continue
            top = info[i]["top_score"]
            avail = wallet(i, day)
            if top is None or avail < top:
                continue
            for seg in day.segments[j]:
                starts = (_fine_starts(seg.lo, seg.hi) if fine else [seg.lo])
                probed: Dict[int, Fraction] = {}
                for t in starts:
                    delta, entrant = try_entry(i, j, t, avail, day)
                    probed[t] = delta
                    if delta > best_delta:
                        best_delta = delta
                        best = (entrant,)
                        best_move = {"advertiser": i, "keyword": j,
                                     "start_query": t, "budget": entrant.budget,
                                     "delta": delta, "kind": "entry"}
                if fine and seg.hi - seg.lo + 1 > FINE_WINDOW:
                    # halve in around the best probe until an exact window
                    width = seg.hi - seg.lo + 1
                    while width > FINE_WINDOW:
                        t0 = max(probed, key=lambda t: (probed[t], -t))
                        width = max(FINE_WINDOW, width // 2)
                        lo = max(seg.lo, t0 - width // 2)
                        hi = min(seg.hi, lo + width - 1)
                        for t in _fine_starts(lo, hi):
                            if t in probed:
                                continue
                            delta, entrant = try_entry(i, j, t, avail, day)
                            probed[t] = delta
                            if delta > best_delta:
                                best_delta = delta
                                best = (entrant,)
                                best_move = {"advertiser": i, "keyword": j,
                                             "start_query": t,
                                             "budget": entrant.budget,
                                             "delta": delta, "kind": "entry"}
        if best is None:
            # no single entry pays: try waking a dark stream with a pair
            pair = _paired_entry(base, ext, rows, day, info, used, wallet,
                                 new_edges, reserve)
            if pair is None:
                break
            best_delta, best, best_move = pair
        for entrant in best:
            i = entrant.advertiser
            if i not in reduced:
                rows = _reduce_rows(rows, i, day)
                reduced.add(i)
            rows = rows + (entrant,)
            used.add((i, entrant.keyword))
        moves.append(best_move)

    final_day = simulate_day(ext, Profile(rows, kind="schedule"), reserve)
    # restate each row's declared query count from the final day, so the
    # returned schedule passes the consistency check as-is
    rows = tuple(Allocation(r.advertiser, r.keyword,
                            final_day.participation[(r.advertiser, r.keyword)],
                            r.budget, r.start_query) for r in rows)
    return {
        "moves": moves,
        "schedule": Profile(rows, kind="schedule"),
        "initial_revenue": initial_day.revenue,
        "final_revenue": final_day.revenue,
        "delta": final_day.revenue - initial_day.revenue,
        "initial_welfare": initial_day.welfare,
        "final_welfare": final_day.welfare,
    }


def _paired_entry(base, ext, rows, day, info, used, wallet, new_edges, reserve):
    """One combined move: two entrants into a currently dark stream."""
    dark_starts: Dict[str, List[int]] = {}
    for k in ext.keywords:
        dark_starts[k.id] = [s.lo for s in day.segments[k.id] if not s.active]
    best = None
    for a in range(len(new_edges)):
        i1, j1 = new_edges[a]
        if (i1, j1) in used or not dark_starts.get(j1):
            continue
        top1 = info[i1]["top_score"]
        av1 = wallet(i1, day)
        if top1 is None or av1 < top1:
            continue
        for b in range(a + 1, len(new_edges)):
            i2, j2 = new_edges[b]
            if j2 != j1 or i2 == i1 or (i2, j2) in used:
                continue
            top2 = info[i2]["top_score"]
            av2 = wallet(i2, day)
            if top2 is None or av2 < top2:
                continue
            for t in dark_starts[j1]:
                p1 = Allocation(i1, j1, 0, av1, t)
                p2 = Allocation(i2, j1, 0, av2, t)
                trial = [r for r in rows if r.keyword == j1] + [p1, p2]
                paid1 = _entry_cost(ext, trial, j1, p1, reserve)
                paid2 = _entry_cost(ext, trial, j1, p2, reserve)
                e1 = Allocation(i1, j1, 0, paid1, t)
                e2 = Allocation(i2, j1, 0, paid2, t)
                rev = _keyword_revenue(ext, [r for r in rows if r.keyword == j1]
                                       + [e1, e2], j1, reserve)
                delta = rev - day.keyword_revenue[j1]
                if delta > (best[0] if best else ZERO):
                    move = {"advertisers": [i1, i2], "keyword": j1,
                            "start_query": t, "budgets": [paid1, paid2],
                            "delta": delta, "kind": "paired-entry"}
                    best = (delta, (e1, e2), move)
    return best
