"""Data model for budget-constrained keyword auction markets.

An instance is a bipartite market between advertisers (each with a daily
budget) and keywords (each with a daily query volume).  An edge carries the
advertiser's effective score on that keyword.  Edges are tagged ``base`` or
``extension`` so that a market and its broad-match extension can live in a
single document; the base graph is the sub-market restricted to base edges.

All monetary scalars are exact ``fractions.Fraction`` values.  Drop-out
times involve floor(budget / price), which is discontinuous, so floating
point is never used anywhere in the engine; rationals enter as JSON strings
like ``"2.3"`` or ``"23/10"`` (or plain integers) and are canonicalized on
load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

BASE = "base"
EXTENSION = "extension"
_TAGS = (BASE, EXTENSION)


class ModelError(ValueError):
    """Raised when a document fails schema or consistency validation.

    ``errors`` is a list of ``{"path": ..., "message": ...}`` dicts naming
    every offending location, so callers can render a structured report.
    """

    def __init__(self, errors: List[dict]):
        self.errors = list(errors)
        lines = ["%s: %s" % (e["path"], e["message"]) for e in self.errors]
        super().__init__("; ".join(lines))


def _err(errors: List[dict], path: str, message: str) -> None:
    errors.append({"path": path, "message": message})


def parse_rational(value, path: str, errors: List[dict]) -> Fraction:
    """Parse an exact rational from a JSON scalar.

    Accepts integers and strings such as ``"2.3"``, ``"23/10"`` or ``"45"``.
    JSON floats are rejected: a decimal literal in the source text must be
    quoted to stay exact.
    """
    if isinstance(value, bool):
        _err(errors, path, "expected integer or rational string, got boolean")
        return Fraction(0)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            _err(errors, path, "not a rational: %r" % value)
            return Fraction(0)
    if isinstance(value, float):
        _err(errors, path, "floats are not exact; quote the value, e.g. \"2.3\"")
        return Fraction(0)
    _err(errors, path, "expected integer or rational string, got %s" % type(value).__name__)
    return Fraction(0)


def format_rational(x: Fraction) -> str:
    """Canonical text form: ``"45"`` for integers, else ``"p/q"`` in lowest terms."""
    return str(x)


def _require_int(value, path: str, errors: List[dict]) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _err(errors, path, "expected an integer, got %s" % type(value).__name__)
        return 0
    return value


def _require_str(value, path: str, errors: List[dict]) -> str:
    if not isinstance(value, str) or not value:
        _err(errors, path, "expected a non-empty string")
        return ""
    return value


def _check_keys(obj: dict, path: str, required: Iterable[str], optional: Iterable[str],
                errors: List[dict]) -> None:
    required = set(required)
    allowed = required | set(optional)
    for key in required - obj.keys():
        _err(errors, path, "missing key %r" % key)
    for key in obj.keys() - allowed:
        _err(errors, path, "unknown key %r" % key)


@dataclass(frozen=True)
class SlotParams:
    """Slot count and per-slot clickabilities, strictly decreasing."""

    gamma: Tuple[Fraction, ...]

    @property
    def count(self) -> int:
        return len(self.gamma)

    def clickability(self, slot: int) -> Fraction:
        """gamma for a 1-based slot; 0 beyond the last slot."""
        if 1 <= slot <= len(self.gamma):
            return self.gamma[slot - 1]
        return Fraction(0)


@dataclass(frozen=True)
class Keyword:
    id: str
    volume: int


@dataclass(frozen=True)
class Advertiser:
    id: str
    budget: Fraction


@dataclass(frozen=True)
class Edge:
    advertiser: str
    keyword: str
    score: Fraction
    tag: str = BASE


@dataclass(frozen=True)
class Instance:
    """An immutable market: slots, keywords, advertisers, scored edges.

    Lookup tables are materialized once in ``__post_init__``; the object is
    safe to share across threads.
    """

    slots: SlotParams
    keywords: Tuple[Keyword, ...]
    advertisers: Tuple[Advertiser, ...]
    edges: Tuple[Edge, ...]
    _kw: Dict[str, Keyword] = field(repr=False, compare=False, default_factory=dict)
    _adv: Dict[str, Advertiser] = field(repr=False, compare=False, default_factory=dict)
    _edge: Dict[Tuple[str, str], Edge] = field(repr=False, compare=False, default_factory=dict)
    _kw_order: Dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        self._kw.update((k.id, k) for k in self.keywords)
        self._adv.update((a.id, a) for a in self.advertisers)
        self._edge.update(((e.advertiser, e.keyword), e) for e in self.edges)
        self._kw_order.update((k.id, n) for n, k in enumerate(self.keywords))

    # -- lookups ------------------------------------------------------------

    def volume(self, keyword: str) -> int:
        return self._kw[keyword].volume

    def budget(self, advertiser: str) -> Fraction:
        return self._adv[advertiser].budget

    def edge(self, advertiser: str, keyword: str) -> Edge:
        return self._edge[(advertiser, keyword)]

    def has_edge(self, advertiser: str, keyword: str) -> bool:
        return (advertiser, keyword) in self._edge

    def score(self, advertiser: str, keyword: str) -> Fraction:
        return self._edge[(advertiser, keyword)].score

    def keyword_index(self, keyword: str) -> int:
        """Position of the keyword in the document order (tie-break rank)."""
        return self._kw_order[keyword]

    def _selected(self, graph: str) -> Iterable[Edge]:
        if graph == "full":
            return self.edges
        if graph == BASE:
            return (e for e in self.edges if e.tag == BASE)
        raise ValueError("graph must be 'full' or 'base'")

    def keywords_of(self, advertiser: str, graph: str = "full") -> List[str]:
        kws = [e.keyword for e in self._selected(graph) if e.advertiser == advertiser]
        kws.sort(key=self.keyword_index)
        return kws

    def advertisers_on(self, keyword: str, graph: str = "full") -> List[str]:
        return sorted(e.advertiser for e in self._selected(graph) if e.keyword == keyword)

    def base_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.tag == BASE)

    def extension_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.tag == EXTENSION)

    def base_instance(self) -> "Instance":
        """The sub-market restricted to base edges."""
        return Instance(self.slots, self.keywords, self.advertisers, self.base_edges())


def _validate_instance_doc(doc) -> Tuple[Optional[Instance], List[dict]]:
    errors: List[dict] = []
    if not isinstance(doc, dict):
        _err(errors, "$", "instance document must be a JSON object")
        return None, errors
    _check_keys(doc, "$", ("slots", "keywords", "advertisers", "edges"), (), errors)
    if errors:
        return None, errors

    slots_doc = doc["slots"]
    gamma: Tuple[Fraction, ...] = ()
    if not isinstance(slots_doc, dict):
        _err(errors, "$.slots", "expected an object")
    else:
        _check_keys(slots_doc, "$.slots", ("count", "clickability"), (), errors)
        count = _require_int(slots_doc.get("count", 0), "$.slots.count", errors)
        click = slots_doc.get("clickability", [])
        if not isinstance(click, list):
            _err(errors, "$.slots.clickability", "expected a list")
            click = []
        gamma = tuple(
            parse_rational(v, "$.slots.clickability[%d]" % n, errors)
            for n, v in enumerate(click)
        )
        if count < 1:
            _err(errors, "$.slots.count", "slot count must be >= 1")
        if len(gamma) != count:
            _err(errors, "$.slots.clickability", "expected %d values, got %d" % (count, len(gamma)))
        for n, g in enumerate(gamma):
            if g <= 0:
                _err(errors, "$.slots.clickability[%d]" % n, "clickability must be positive")
        for n in range(len(gamma) - 1):
            if gamma[n] <= gamma[n + 1]:
                _err(errors, "$.slots.clickability[%d]" % (n + 1),
                     "clickability not strictly decreasing")

    keywords: List[Keyword] = []
    kw_doc = doc["keywords"]
    if not isinstance(kw_doc, list):
        _err(errors, "$.keywords", "expected a list")
        kw_doc = []
    for n, item in enumerate(kw_doc):
        path = "$.keywords[%d]" % n
        if not isinstance(item, dict):
            _err(errors, path, "expected an object")
            continue
        _check_keys(item, path, ("id", "volume"), (), errors)
        kid = _require_str(item.get("id", ""), path + ".id", errors)
        vol = _require_int(item.get("volume", 0), path + ".volume", errors)
        if vol < 1:
            _err(errors, path + ".volume", "volume must be a positive integer")
        keywords.append(Keyword(kid, vol))
    seen = set()
    for n, k in enumerate(keywords):
        if k.id in seen:
            _err(errors, "$.keywords[%d].id" % n, "duplicate keyword id %r" % k.id)
        seen.add(k.id)

    advertisers: List[Advertiser] = []
    adv_doc = doc["advertisers"]
    if not isinstance(adv_doc, list):
        _err(errors, "$.advertisers", "expected a list")
        adv_doc = []
    for n, item in enumerate(adv_doc):
        path = "$.advertisers[%d]" % n
        if not isinstance(item, dict):
            _err(errors, path, "expected an object")
            continue
        _check_keys(item, path, ("id", "budget"), (), errors)
        aid = _require_str(item.get("id", ""), path + ".id", errors)
        budget = parse_rational(item.get("budget", 0), path + ".budget", errors)
        if budget < 0:
            _err(errors, path + ".budget", "budget must be nonnegative")
        advertisers.append(Advertiser(aid, budget))
    seen = set()
    for n, a in enumerate(advertisers):
        if a.id in seen:
            _err(errors, "$.advertisers[%d].id" % n, "duplicate advertiser id %r" % a.id)
        seen.add(a.id)

    edges: List[Edge] = []
    edge_doc = doc["edges"]
    if not isinstance(edge_doc, list):
        _err(errors, "$.edges", "expected a list")
        edge_doc = []
    kw_ids = {k.id for k in keywords}
    adv_ids = {a.id for a in advertisers}
    for n, item in enumerate(edge_doc):
        path = "$.edges[%d]" % n
        if not isinstance(item, dict):
            _err(errors, path, "expected an object")
            continue
        _check_keys(item, path, ("advertiser", "keyword", "score"), ("tag",), errors)
        adv = _require_str(item.get("advertiser", ""), path + ".advertiser", errors)
        kw = _require_str(item.get("keyword", ""), path + ".keyword", errors)
        score = parse_rational(item.get("score", 0), path + ".score", errors)
        tag = item.get("tag", BASE)
        if adv and adv not in adv_ids:
            _err(errors, path + ".advertiser", "unknown advertiser %r" % adv)
        if kw and kw not in kw_ids:
            _err(errors, path + ".keyword", "unknown keyword %r" % kw)
        if score <= 0:
            _err(errors, path + ".score", "score must be positive")
        if tag not in _TAGS:
            _err(errors, path + ".tag", "tag must be 'base' or 'extension'")
            tag = BASE
        edges.append(Edge(adv, kw, score, tag))
    seen = set()
    for n, e in enumerate(edges):
        key = (e.advertiser, e.keyword)
        if key in seen:
            _err(errors, "$.edges[%d]" % n, "duplicate edge %r" % (key,))
        seen.add(key)

    if errors:
        return None, errors
    return Instance(SlotParams(gamma), tuple(keywords), tuple(advertisers), tuple(edges)), errors


def load_instance(document) -> Instance:
    """Parse and validate an instance from a JSON string or parsed object."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError([{"path": "$", "message": "invalid JSON: %s" % exc}])
    instance, errors = _validate_instance_doc(document)
    if errors:
        raise ModelError(errors)
    return instance


def serialize_instance(instance: Instance) -> dict:
    """Canonical document form; ``load_instance`` of the result is identity."""
    return {
        "slots": {
            "count": instance.slots.count,
            "clickability": [format_rational(g) for g in instance.slots.gamma],
        },
        "keywords": [{"id": k.id, "volume": k.volume} for k in instance.keywords],
        "advertisers": [
            {"id": a.id, "budget": format_rational(a.budget)} for a in instance.advertisers
        ],
        "edges": [
            {
                "advertiser": e.advertiser,
                "keyword": e.keyword,
                "score": format_rational(e.score),
                "tag": e.tag,
            }
            for e in instance.edges
        ],
    }


# -- budget splits and schedules --------------------------------------------


@dataclass(frozen=True)
class Allocation:
    """One advertiser's commitment on one keyword.

    ``queries`` is the number of queries the advertiser takes part in during
    the day; ``budget`` is the money committed to this keyword (spend can be
    lower when the last affordable query is cheaper than the leftover).
    ``start_query`` is 1 for plain splits; schedules may enter mid-stream.
    """

    advertiser: str
    keyword: str
    queries: int
    budget: Fraction
    start_query: int = 1


@dataclass(frozen=True)
class Profile:
    """A full strategy profile: one Allocation per participating edge."""

    rows: Tuple[Allocation, ...]
    kind: str = "split"  # or "schedule"
    _row: Dict[Tuple[str, str], Allocation] = field(repr=False, compare=False,
                                                    default_factory=dict)

    def __post_init__(self):
        self._row.update(((r.advertiser, r.keyword), r) for r in self.rows)

    def row(self, advertiser: str, keyword: str) -> Optional[Allocation]:
        return self._row.get((advertiser, keyword))

    def rows_on(self, keyword: str) -> List[Allocation]:
        return [r for r in self.rows if r.keyword == keyword]

    def rows_of(self, advertiser: str) -> List[Allocation]:
        return [r for r in self.rows if r.advertiser == advertiser]

    def committed(self, advertiser: str, keyword: Optional[str] = None) -> Fraction:
        if keyword is not None:
            r = self._row.get((advertiser, keyword))
            return r.budget if r is not None else Fraction(0)
        return sum((r.budget for r in self.rows_of(advertiser)), Fraction(0))

    def without(self, advertiser: str) -> "Profile":
        return Profile(tuple(r for r in self.rows if r.advertiser != advertiser), self.kind)

    def replacing(self, advertiser: str, new_rows: Iterable[Allocation]) -> "Profile":
        kept = [r for r in self.rows if r.advertiser != advertiser]
        return Profile(tuple(kept) + tuple(new_rows), self.kind)


def _load_profile(document, kind: str) -> Profile:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelError([{"path": "$", "message": "invalid JSON: %s" % exc}])
    errors: List[dict] = []
    if not isinstance(document, dict):
        _err(errors, "$", "%s document must be a JSON object" % kind)
        raise ModelError(errors)
    _check_keys(document, "$", ("allocations",), (), errors)
    rows: List[Allocation] = []
    alloc_doc = document.get("allocations", [])
    if not isinstance(alloc_doc, list):
        _err(errors, "$.allocations", "expected a list")
        alloc_doc = []
    fields = ["advertiser", "keyword", "queries", "budget"]
    if kind == "schedule":
        fields.append("start_query")
    for n, item in enumerate(alloc_doc):
        path = "$.allocations[%d]" % n
        if not isinstance(item, dict):
            _err(errors, path, "expected an object")
            continue
        _check_keys(item, path, fields, (), errors)
        adv = _require_str(item.get("advertiser", ""), path + ".advertiser", errors)
        kw = _require_str(item.get("keyword", ""), path + ".keyword", errors)
        queries = _require_int(item.get("queries", 0), path + ".queries", errors)
        budget = parse_rational(item.get("budget", 0), path + ".budget", errors)
        start = 1
        if kind == "schedule":
            start = _require_int(item.get("start_query", 1), path + ".start_query", errors)
            if start < 1:
                _err(errors, path + ".start_query", "start_query must be >= 1")
        if queries < 0:
            _err(errors, path + ".queries", "queries must be nonnegative")
        if budget < 0:
            _err(errors, path + ".budget", "budget must be nonnegative")
        rows.append(Allocation(adv, kw, queries, budget, start))
    seen = set()
    for n, r in enumerate(rows):
        key = (r.advertiser, r.keyword)
        if key in seen:
            _err(errors, "$.allocations[%d]" % n, "duplicate allocation %r" % (key,))
        seen.add(key)
    if errors:
        raise ModelError(errors)
    return Profile(tuple(rows), kind)


def load_split(document) -> Profile:
    """Parse a budget split (all entries start at query 1)."""
    return _load_profile(document, "split")


def load_schedule(document) -> Profile:
    """Parse a schedule: a split whose entries carry explicit start queries."""
    return _load_profile(document, "schedule")


def serialize_profile(profile: Profile) -> dict:
    rows = []
    for r in profile.rows:
        item = {
            "advertiser": r.advertiser,
            "keyword": r.keyword,
            "queries": r.queries,
            "budget": format_rational(r.budget),
        }
        if profile.kind == "schedule":
            item["start_query"] = r.start_query
        rows.append(item)
    return {"allocations": rows}


def validate_profile(instance: Instance, profile: Profile) -> List[dict]:
    """Static consistency of a profile against an instance.

    Checks edge existence, volume bounds and per-advertiser budget caps.
    Whether each row's ``queries`` matches the simulated participation count
    is a dynamic property checked by ``simulate.check_profile_consistency``.
    """
    errors: List[dict] = []
    for n, r in enumerate(profile.rows):
        path = "$.allocations[%d]" % n
        if r.advertiser not in instance._adv:
            _err(errors, path + ".advertiser", "unknown advertiser %r" % r.advertiser)
            continue
        if r.keyword not in instance._kw:
            _err(errors, path + ".keyword", "unknown keyword %r" % r.keyword)
            continue
        if not instance.has_edge(r.advertiser, r.keyword):
            _err(errors, path, "no edge (%s, %s) in the instance" % (r.advertiser, r.keyword))
            continue
        vol = instance.volume(r.keyword)
        if r.queries > vol:
            _err(errors, path + ".queries", "exceeds keyword volume %d" % vol)
        if r.start_query > vol:
            _err(errors, path + ".start_query", "exceeds keyword volume %d" % vol)
    by_adv: Dict[str, Fraction] = {}
    for r in profile.rows:
        by_adv[r.advertiser] = by_adv.get(r.advertiser, Fraction(0)) + r.budget
    for adv in sorted(by_adv):
        if adv in instance._adv and by_adv[adv] > instance.budget(adv):
            _err(errors, "$.allocations", "advertiser %r commits %s > budget %s"
                 % (adv, by_adv[adv], instance.budget(adv)))
    return errors


# -- extensions ---------------------------------------------------------------


def check_extension(base: Instance, ext: Instance) -> dict:
    """Confirm ``ext`` extends ``base``: same market, superset of edges.

    Returns ``{"ok": bool, "errors": [...], "new_edges": [(adv, kw), ...]}``.
    Scores must agree on shared edges; slots, keywords, advertisers and
    budgets must be identical.
    """
    errors: List[dict] = []
    if base.slots.gamma != ext.slots.gamma:
        _err(errors, "$.slots", "slot parameters differ")
    base_kw = {k.id: k.volume for k in base.keywords}
    ext_kw = {k.id: k.volume for k in ext.keywords}
    if base_kw != ext_kw:
        _err(errors, "$.keywords", "keyword sets or volumes differ")
    base_adv = {a.id: a.budget for a in base.advertisers}
    ext_adv = {a.id: a.budget for a in ext.advertisers}
    if base_adv != ext_adv:
        _err(errors, "$.advertisers", "advertiser sets or budgets differ")
    new_edges: List[Tuple[str, str]] = []
    for e in base.edges:
        if not ext.has_edge(e.advertiser, e.keyword):
            _err(errors, "$.edges", "edge (%s, %s) missing from the extension"
                 % (e.advertiser, e.keyword))
        elif ext.score(e.advertiser, e.keyword) != e.score:
            _err(errors, "$.edges", "score changed on shared edge (%s, %s)"
                 % (e.advertiser, e.keyword))
    base_keys = {(e.advertiser, e.keyword) for e in base.edges}
    for e in ext.edges:
        if (e.advertiser, e.keyword) not in base_keys:
            new_edges.append((e.advertiser, e.keyword))
    return {"ok": not errors, "errors": errors, "new_edges": new_edges}


def all_in_profile(instance: Instance, budgets: Optional[Mapping[str, Fraction]] = None,
                   skip: Sequence[str] = ()) -> Profile:
    """Profile committing each advertiser's full budget on every held edge.

    A what-if world for partition tables: each keyword sees every rival
    backed by her whole budget from query 1.  Not a valid split when an
    advertiser holds several edges (the same budget backs each keyword
    independently), so only feed it to table builders, never to a day.
    """
    if budgets is None:
        budgets = {a.id: a.budget for a in instance.advertisers}
    rows = []
    for edge in instance.edges:
        if edge.advertiser in skip or edge.advertiser not in budgets:
            continue
        rows.append(Allocation(edge.advertiser, edge.keyword,
                               instance.volume(edge.keyword),
                               Fraction(budgets[edge.advertiser])))
    return Profile(tuple(rows))


def split_of_queries(instance: Instance, advertiser: str, queries: Mapping[str, int],
                     others: Optional[object] = None) -> Profile:
    """The exact budget split that buys a given query vector.

    Each keyword's committed budget is the exact cumulative cost of its
    first ``queries[kw]`` queries for this advertiser, given the other
    advertisers' commitments.  ``others`` may be a Profile or a plain
    {advertiser: budget} mapping (read as all-in on every held edge from
    query 1); by default every rival is all-in with her full budget.
    Raises ``ModelError`` if the total exceeds the budget.
    """
    from . import partition

    if others is None:
        others = all_in_profile(instance, skip=(advertiser,))
    elif isinstance(others, Mapping):
        others = all_in_profile(instance, budgets=others, skip=(advertiser,))
    errors: List[dict] = []
    rows: List[Allocation] = []
    total = Fraction(0)
    for kw in sorted(queries, key=instance.keyword_index):
        x = queries[kw]
        if not instance.has_edge(advertiser, kw):
            _err(errors, "$.%s" % kw, "no edge (%s, %s)" % (advertiser, kw))
            continue
        if not 0 <= x <= instance.volume(kw):
            _err(errors, "$.%s" % kw, "query count %d out of range" % x)
            continue
        table = partition.tables_for(instance, advertiser, others, keywords=[kw])[kw]
        _, cost = table.prefix(x)
        total += cost
        rows.append(Allocation(advertiser, kw, x, cost))
    if errors:
        raise ModelError(errors)
    if total > instance.budget(advertiser):
        raise ModelError([{"path": "$", "message": "cost %s exceeds budget %s"
                           % (total, instance.budget(advertiser))}])
    return Profile(tuple(rows))
