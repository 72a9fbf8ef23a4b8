"""Single-query slot pricing at the minimum symmetric equilibrium.

Participants are ranked by score (descending, ties by ascending id) and the
occupant of slot r pays, per impression,

    price_r = sum_{j=r}^{K} (gamma_j - gamma_{j+1}) * s_{(j+1)}

with gamma_{K+1} = 0 and s_{(m)} = 0 beyond the last participant.  These are
the lowest prices any symmetric equilibrium of the generalized second-price
auction can support.  An optional reserve acts as a pseudo-score ranked just
below the last participant; participants scoring below the reserve are
excluded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Tuple

from .model import SlotParams

ZERO = Fraction(0)


@dataclass(frozen=True)
class Slate:
    """Priced ranking of one query's active set.

    ``ranking`` lists (advertiser, score, slot) by rank; slot is None for
    participants beyond the last slot.  ``prices`` and ``payoffs`` are per
    impression and cover every participant (unslotted ones at 0).
    """

    slots: SlotParams
    reserve: Fraction
    ranking: Tuple[Tuple[str, Fraction, object], ...]
    prices: Dict[str, Fraction]
    payoffs: Dict[str, Fraction]
    revenue: Fraction
    welfare: Fraction

    def price(self, advertiser: str) -> Fraction:
        return self.prices[advertiser]

    def payoff(self, advertiser: str) -> Fraction:
        return self.payoffs[advertiser]


def price_query(active: Iterable[Tuple[str, Fraction]], slots: SlotParams,
                reserve: Fraction = ZERO) -> Slate:
    """Price one query for the given active set.

    ``active`` yields (advertiser id, score) pairs.  An empty active set is
    legal and produces a zero-revenue slate (a "dark" query).
    """
    ranked = sorted(
        ((adv, s) for adv, s in active if s >= reserve),
        key=lambda p: (-p[1], p[0]),
    )
    gamma = slots.gamma
    K = len(gamma)
    L = len(ranked)
    occupied = min(K, L)

    def below(rank: int) -> Fraction:
        # score of the participant ranked just below `rank` (1-based),
        # the reserve standing in at position L+1
        if rank < L:
            return ranked[rank][1]
        if rank == L:
            return reserve
        return ZERO

    # price of slot r is a suffix sum over (gamma_j - gamma_{j+1}) * below(j)
    suffix = ZERO
    prices_by_rank = [ZERO] * (K + 2)
    for j in range(K, 0, -1):
        gamma_next = gamma[j] if j < K else ZERO
        suffix += (gamma[j - 1] - gamma_next) * below(j)
        prices_by_rank[j] = suffix

    ranking = []
    prices: Dict[str, Fraction] = {}
    payoffs: Dict[str, Fraction] = {}
    revenue = ZERO
    welfare = ZERO
    for n, (adv, s) in enumerate(ranked, start=1):
        if n <= occupied:
            p = prices_by_rank[n]
            ranking.append((adv, s, n))
            prices[adv] = p
            payoffs[adv] = gamma[n - 1] * s - p
            revenue += p
            welfare += gamma[n - 1] * s
        else:
            ranking.append((adv, s, None))
            prices[adv] = ZERO
            payoffs[adv] = ZERO
    return Slate(slots, reserve, tuple(ranking), prices, payoffs, revenue, welfare)


def revenue_identity_check(slate: Slate) -> Fraction:
    """Recompute revenue as sum_j (gamma_j - gamma_{j+1}) * j * s_{(j+1)}.

    The suffix-sum prices telescope to this form; the function asserts the
    equality and returns the value.
    """
    gamma = slate.slots.gamma
    K = len(gamma)
    L = len(slate.ranking)
    occupied = min(K, L)

    def below(rank: int) -> Fraction:
        if rank < L:
            return slate.ranking[rank][1]
        if rank == L:
            return slate.reserve
        return ZERO

    total = ZERO
    for j in range(1, occupied + 1):
        gamma_next = gamma[j] if j < K else ZERO
        total += (gamma[j - 1] - gamma_next) * j * below(j)
    assert total == slate.revenue, "telescoped revenue %s != price sum %s" % (
        total, slate.revenue)
    return total
