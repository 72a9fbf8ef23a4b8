"""Command-line front end for the engine, plus the bundled example instances.

Reports are deterministic JSON (sorted keys, two-space indent, LF endings):
identical inputs produce byte-identical output.  Every exact rational is
emitted as an object ``{"exact": "p/q", "approx": "0.000000"}``.

Exit codes: 0 success, 1 engine error, 2 usage or schema error,
3 verification failed (so ``verify`` slots into CI pipelines).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import acbm as acbm_mod
from . import bestresp, equilibrium, simulate as simulate_mod
from .model import (Instance, ModelError, Profile, all_in_profile,
                    check_extension, format_rational, load_instance,
                    load_schedule, load_split, serialize_instance,
                    serialize_profile, validate_profile)
from .partition import tables_for

_INF = float("inf")


class UsageError(Exception):
    """Bad invocation or bad input file: the user can fix it, exit 2."""


# -- fixtures -----------------------------------------------------------------

_FIXTURE_DIR = Path(__file__).parent / "fixtures"

FIXTURES = {
    "single-extension": {
        "note": "one broadening edge whose advertiser-chosen use loses money "
                "while a scheduled late entry gains",
        "files": ["single-extension-base.json", "single-extension-ext.json",
                  "single-extension-advshift.split.json",
                  "single-extension-entry.schedule.json"],
    },
    "greedy-vs-exact": {
        "note": "two keywords where the greedy walk stops one step short of "
                "the exact optimum",
        "files": ["greedy-vs-exact.json"],
    },
    "agreeing-methods": {
        "note": "greedy, exact and brute force all land on the same split",
        "files": ["agreeing-methods.json",
                  "agreeing-methods-allk2.split.json"],
    },
    "three-keyword-family": {
        "note": "two stable splits of the same market with opposite revenue "
                "effects (small and large volumes)",
        "files": ["three-keyword-family.json",
                  "three-keyword-family-shifted.split.json",
                  "three-keyword-family-stayhome.split.json",
                  "three-keyword-family-large.json",
                  "three-keyword-family-large-shifted.split.json",
                  "three-keyword-family-large-stayhome.split.json"],
    },
    "edge-no-shift": {
        "note": "a broadening edge the stable split simply ignores",
        "files": ["edge-no-shift-base.json", "edge-no-shift-ext.json",
                  "edge-no-shift-noshift.split.json"],
    },
    "edge-shift": {
        "note": "a broadening edge that pulls the stable split onto itself",
        "files": ["edge-shift-base.json", "edge-shift-ext.json",
                  "edge-shift-shift.split.json",
                  "edge-shift-noshift.split.json"],
    },
    "two-keyword-entry": {
        "note": "excess budget entering a broadened keyword at three "
                "different times, with three different revenue outcomes",
        "files": ["two-keyword-entry-base.json", "two-keyword-entry-ext.json",
                  "two-keyword-entry-natural.split.json",
                  "two-keyword-entry-early.schedule.json",
                  "two-keyword-entry-late.schedule.json",
                  "two-keyword-entry-tuned.schedule.json"],
    },
}


# -- report plumbing ----------------------------------------------------------

def _enc(x):
    """Recursively JSON-encode engine values; exact rationals become
    {"exact", "approx"} pairs and the infinite rate sentinel becomes "inf"."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return {"exact": format_rational(x), "approx": "%.6f" % float(x)}
    if isinstance(x, float):
        return "inf" if x == _INF else "%.6f" % x
    if isinstance(x, dict):
        return {str(k): _enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, frozenset, set)):
        seq = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_enc(v) for v in seq]
    raise TypeError("cannot encode %r" % type(x))


def _print_json(doc) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _digest(instance: Instance) -> str:
    blob = json.dumps(serialize_instance(instance), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _report(args, result: dict, code: int = 0,
            instance: Optional[Instance] = None) -> int:
    doc = {
        "command": args.command,
        "argv": list(args._argv),
        "instance": _digest(instance) if instance is not None else None,
        "result": _enc(result),
        "exit_code": code,
    }
    _print_json(doc)
    return code


def _fail(args, code: int, kind: str, payload) -> int:
    doc = {
        "command": getattr(args, "command", None),
        "argv": list(getattr(args, "_argv", [])),
        "error": {"type": kind,
                  "errors" if isinstance(payload, list) else "message": payload},
        "exit_code": code,
    }
    _print_json(doc)
    return code


def _rat(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError("invalid %s: %r (want an integer, fraction p/q, "
                         "or decimal)" % (what, text))


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc.strerror or exc))


def _load_instance_file(path: str) -> Instance:
    return load_instance(_read(path))


def _load_profile_file(instance: Instance, path: str, kind: str) -> Profile:
    profile = (load_split if kind == "split" else load_schedule)(_read(path))
    errors = validate_profile(instance, profile)
    if errors:
        raise ModelError(errors)
    return profile


def _profile_arg(args, instance: Instance) -> Profile:
    if getattr(args, "split", None) and getattr(args, "schedule", None):
        raise UsageError("--split and --schedule are mutually exclusive")
    if getattr(args, "split", None):
        path = args.split[0] if isinstance(args.split, list) else args.split
        return _load_profile_file(instance, path, "split")
    if getattr(args, "schedule", None):
        return _load_profile_file(instance, args.schedule, "schedule")
    raise UsageError("a profile is required: pass --split FILE or "
                     "--schedule FILE")


def _others_arg(args, instance: Instance, advertiser: str) -> Profile:
    """The rivals' profile for table building; defaults to everyone all-in."""
    if getattr(args, "split", None):
        path = args.split[0] if isinstance(args.split, list) else args.split
        return _load_profile_file(instance, path, "split")
    return all_in_profile(instance, skip=(advertiser,))


def _table_text(headers: List[str], rows: List[List[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for n, cell in enumerate(row):
            widths[n] = max(widths[n], len(cell))
    fmt = "  ".join("%%-%ds" % w for w in widths)
    lines = [fmt % tuple(headers), fmt % tuple("-" * w for w in widths)]
    lines += [fmt % tuple(row) for row in rows]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def _fr(x: Fraction) -> str:
    return "%s (%.4f)" % (format_rational(x), float(x))


# -- subcommands --------------------------------------------------------------

def _cmd_validate(args) -> int:
    instance = _load_instance_file(args.instance)
    result = {"ok": True, "warnings": [], "checked": ["instance"]}
    if args.split or args.schedule:
        _profile_arg(args, instance)
        result["checked"].append("profile")
    if args.ext:
        ext = _load_instance_file(args.ext)
        chk = check_extension(instance, ext)
        if not chk["ok"]:
            raise ModelError(chk["errors"])
        result["checked"].append("extension")
        result["new_edges"] = [list(e) for e in chk["new_edges"]]
    return _report(args, result, 0, instance)


def _cmd_price(args) -> int:
    instance = _load_instance_file(args.instance)
    kw = args.keyword
    if kw not in {k.id for k in instance.keywords}:
        raise UsageError("unknown keyword %r" % kw)
    ids = args.ids or instance.advertisers_on(kw)
    for i in ids:
        if not instance.has_edge(i, kw):
            raise UsageError("no edge (%s, %s) in the instance" % (i, kw))
    from .auction import price_query
    slate = price_query([(i, instance.score(i, kw)) for i in ids],
                        instance.slots, args.reserve)
    result = {
        "keyword": kw,
        "reserve": args.reserve,
        "ranking": [{"advertiser": i, "score": s, "slot": slot}
                    for i, s, slot in slate.ranking],
        "prices": dict(slate.prices),
        "payoffs": dict(slate.payoffs),
        "revenue": slate.revenue,
        "welfare": slate.welfare,
    }
    if args.format == "table":
        rows = [["-" if slot is None else str(slot), i, format_rational(s),
                 _fr(slate.prices[i]), _fr(slate.payoffs[i])]
                for i, s, slot in slate.ranking]
        sys.stdout.write(_table_text(
            ["slot", "advertiser", "score", "price", "payoff"], rows))
        sys.stdout.write("revenue %s  welfare %s\n"
                         % (_fr(slate.revenue), _fr(slate.welfare)))
        return 0
    return _report(args, result, 0, instance)


def _cmd_partition(args) -> int:
    instance = _load_instance_file(args.instance)
    adv = args.advertiser
    if adv is None:
        raise UsageError("--advertiser is required")
    others = _others_arg(args, instance, adv)
    keywords = [args.keyword] if args.keyword else None
    tables = tables_for(instance, adv, others, keywords, args.reserve)
    result = {"advertiser": adv, "keywords": {}}
    for kw, table in sorted(tables.items(),
                            key=lambda kv: instance.keyword_index(kv[0])):
        segs = []
        for lam in range(table.segment_count):
            segs.append({
                "from": table.breakpoints[lam] + 1,
                "to": table.breakpoints[lam + 1],
                "active": list(table.actives[lam]),
                "cost": table.costs[lam],
                "payoff": table.payoffs[lam],
                "rate": table.rate(lam),
            })
        result["keywords"][kw] = {
            "breakpoints": list(table.breakpoints),
            "segments": segs,
        }
    if args.format == "table":
        for kw in result["keywords"]:
            sys.stdout.write("%s (advertiser %s)\n" % (kw, adv))
            rows = [[str(s["from"]), str(s["to"]), ",".join(s["active"]),
                     format_rational(s["cost"]), format_rational(s["payoff"]),
                     "inf" if s["rate"] == _INF else format_rational(s["rate"])]
                    for s in result["keywords"][kw]["segments"]]
            sys.stdout.write(_table_text(
                ["from", "to", "active", "cost", "payoff", "rate"], rows))
        return 0
    return _report(args, result, 0, instance)


def _day_result(instance: Instance, day) -> dict:
    keywords = {}
    for k in instance.keywords:
        keywords[k.id] = {
            "revenue": day.keyword_revenue[k.id],
            "welfare": day.keyword_welfare[k.id],
            "segments": [{"from": s.lo, "to": s.hi, "active": list(s.active),
                          "revenue": s.revenue, "welfare": s.welfare}
                         for s in day.segments[k.id]],
        }
    advertisers = {a.id: {"spend": day.spend[a.id],
                          "payoff": day.payoff[a.id],
                          "leftover": day.leftover[a.id]}
                   for a in instance.advertisers}
    return {"revenue": day.revenue, "welfare": day.welfare,
            "keywords": keywords, "advertisers": advertisers}


def _cmd_simulate(args) -> int:
    instance = _load_instance_file(args.instance)
    profile = _profile_arg(args, instance)
    day = simulate_mod.simulate_day(instance, profile, args.reserve, args.jobs)
    result = _day_result(instance, day)
    mismatches = simulate_mod.check_profile_consistency(
        instance, profile, day, args.reserve)
    result["consistency"] = mismatches
    if args.format == "table":
        rows = [[k, _fr(result["keywords"][k]["revenue"]),
                 _fr(result["keywords"][k]["welfare"])]
                for k in sorted(result["keywords"],
                                key=instance.keyword_index)]
        rows.append(["total", _fr(day.revenue), _fr(day.welfare)])
        sys.stdout.write(_table_text(["keyword", "revenue", "welfare"], rows))
        arow = [[a.id, _fr(day.spend[a.id]), _fr(day.payoff[a.id]),
                 _fr(day.leftover[a.id])] for a in instance.advertisers]
        sys.stdout.write(_table_text(
            ["advertiser", "spend", "payoff", "leftover"], arow))
        return 0
    return _report(args, result, 0, instance)


def _run_response(instance, args, advertiser, others):
    method = args.method
    if method == "greedy":
        return bestresp.greedy_local_best_response(
            instance, advertiser, others, reserve=args.reserve)
    if method == "dp":
        return bestresp.exact_best_response_dp(
            instance, advertiser, others, reserve=args.reserve)
    if method == "fptas":
        if args.eps is None:
            raise UsageError("--eps is required with --method fptas")
        return bestresp.fptas_as2(instance, advertiser, others, args.eps,
                                  reserve=args.reserve)
    if method == "brute":
        return bestresp.brute_force_oracle(
            instance, advertiser, others, reserve=args.reserve)
    raise UsageError("unknown method %r" % method)


def _cmd_best_response(args) -> int:
    instance = _load_instance_file(args.instance)
    adv = args.advertiser
    if adv is None:
        raise UsageError("--advertiser is required")
    if adv not in {a.id for a in instance.advertisers}:
        raise UsageError("unknown advertiser %r" % adv)
    others = _others_arg(args, instance, adv)
    resp = _run_response(instance, args, adv, others)
    result = {
        "advertiser": resp.advertiser,
        "method": resp.method,
        "payoff": resp.payoff,
        "cost": resp.cost,
        "queries": dict(resp.queries),
        "committed": dict(resp.committed),
        "meta": resp.meta,
    }
    if args.format == "table":
        rows = [[kw, str(resp.queries.get(kw, 0)),
                 format_rational(resp.committed.get(kw, Fraction(0)))]
                for kw in sorted(resp.queries, key=instance.keyword_index)]
        sys.stdout.write(_table_text(["keyword", "queries", "committed"],
                                     rows))
        sys.stdout.write("payoff %s  cost %s  (%s)\n"
                         % (_fr(resp.payoff), _fr(resp.cost), resp.method))
        return 0
    return _report(args, result, 0, instance)


def _cmd_verify(args) -> int:
    instance = _load_instance_file(args.instance)
    profile = _profile_arg(args, instance)
    if args.bme == (args.eps_ne is not None):
        raise UsageError("pass exactly one of --bme or --eps-ne EPS")
    if args.bme:
        rep = equilibrium.verify_bme(instance, profile, reserve=args.reserve)
        code = 0 if rep["ok"] else 3
        if args.format == "table":
            sys.stdout.write("stable: %s  (%d rate violations, %d exhaustion "
                             "violations)\n" % (rep["ok"],
                                                len(rep["e1_violations"]),
                                                len(rep["e2_violations"])))
            return code
        return _report(args, {"check": "bme", **rep}, code, instance)
    method = args.method if args.method in ("dp", "fptas") else "dp"
    rep = equilibrium.verify_eps_ne(instance, profile, args.eps_ne,
                                    method=method, reserve=args.reserve)
    code = 0 if rep["ok"] is True else 3
    if args.format == "table":
        rows = [[i, r.get("status", "?")] for i, r in
                sorted(rep["per_advertiser"].items())]
        sys.stdout.write(_table_text(["advertiser", "status"], rows))
        return code
    return _report(args, {"check": "eps-ne", **rep}, code, instance)


def _cmd_dynamics(args) -> int:
    instance = _load_instance_file(args.instance)
    if args.method == "fptas" and args.eps is None:
        raise UsageError("--eps is required with --method fptas")
    start = None
    if args.init:
        start = _load_profile_file(instance, args.init, "split")
    rep = equilibrium.best_response_dynamics(
        instance, method=args.method, eps=args.eps,
        max_rounds=args.max_rounds, shuffle_seed=args.shuffle_seed,
        reserve=args.reserve, profile=start)
    result = dict(rep)
    result["profile"] = serialize_profile(rep["profile"])["allocations"]
    if args.format == "table":
        sys.stdout.write("%s after %d rounds (%s)\n"
                         % (rep["status"], rep["rounds"], rep["method"]))
        return 0
    return _report(args, result, 0, instance)


def _cmd_dilemma(args) -> int:
    base = _load_instance_file(args.base)
    ext = _load_instance_file(args.ext_instance)
    chk = check_extension(base, ext)
    if not chk["ok"]:
        raise ModelError(chk["errors"])
    profiles = [_load_profile_file(ext, p, "split") for p in args.profiles]
    rep = equilibrium.dilemma_report(base, ext, profiles,
                                     reserve=args.reserve)
    if args.format == "table":
        rows = [[str(n), str(p["stable"]), _fr(p["revenue"]), _fr(p["delta"])]
                for n, p in enumerate(rep["profiles"])]
        sys.stdout.write(_table_text(
            ["profile", "stable", "revenue", "delta"], rows))
        sys.stdout.write("dilemma: %s\n" % rep["dilemma"])
        return 0
    return _report(args, rep, 0, base)


def _cmd_acbm(args) -> int:
    base = _load_instance_file(args.base)
    if not args.ext:
        raise UsageError("--ext FILE is required")
    ext = _load_instance_file(args.ext)
    chk = check_extension(base, ext)
    if not chk["ok"]:
        raise ModelError(chk["errors"])
    excess = acbm_mod.excess_budgets(base, reserve=args.reserve)
    witness = acbm_mod.obrev_check(base, ext, reserve=args.reserve)
    plan = acbm_mod.allocate_excess(base, ext, fine=args.fine,
                                    reserve=args.reserve)
    result = {
        "excess": excess,
        "opportunity": witness,
        "moves": plan["moves"],
        "schedule": serialize_profile(plan["schedule"])["allocations"],
        "initial_revenue": plan["initial_revenue"],
        "final_revenue": plan["final_revenue"],
        "delta": plan["delta"],
        "initial_welfare": plan["initial_welfare"],
        "final_welfare": plan["final_welfare"],
    }
    if args.format == "table":
        rows = [["revenue", _fr(plan["initial_revenue"]),
                 _fr(plan["final_revenue"]),
                 _fr(plan["delta"])],
                ["welfare", _fr(plan["initial_welfare"]),
                 _fr(plan["final_welfare"]),
                 _fr(plan["final_welfare"] - plan["initial_welfare"])]]
        sys.stdout.write(_table_text(["metric", "before", "after", "delta"],
                                     rows))
        for mv in plan["moves"]:
            if mv["kind"] == "entry":
                sys.stdout.write("enter %s on %s at query %d (+%s)\n"
                                 % (mv["advertiser"], mv["keyword"],
                                    mv["start_query"],
                                    format_rational(mv["delta"])))
            else:
                sys.stdout.write("enter %s on %s at query %d (+%s)\n"
                                 % ("+".join(mv["advertisers"]), mv["keyword"],
                                    mv["start_query"],
                                    format_rational(mv["delta"])))
        return 0
    return _report(args, result, 0, base)


def _cmd_compare(args) -> int:
    instance = _load_instance_file(args.instance)
    if not args.split or len(args.split) != 2:
        raise UsageError("pass exactly two --split FILE flags")
    days = [simulate_mod.simulate_day(
                instance, _load_profile_file(instance, p, "split"),
                args.reserve, args.jobs)
            for p in args.split]
    diff = simulate_mod.compare_outcomes(days[0], days[1])
    result = {"a": args.split[0], "b": args.split[1], "metrics": diff}
    if args.format == "table":
        rows = []
        for metric in sorted(diff):
            value = diff[metric]
            if isinstance(value, dict):
                for k in sorted(value):
                    a, b, delta = value[k]
                    rows.append(["%s[%s]" % (metric, k),
                                 _fr(a), _fr(b), _fr(delta)])
            else:
                a, b, delta = value
                rows.append([metric, _fr(a), _fr(b), _fr(delta)])
        sys.stdout.write(_table_text(["metric", "a", "b", "delta"], rows))
        return 0
    return _report(args, result, 0, instance)


def _cmd_fixtures(args) -> int:
    if args.name is None:
        result = {"fixtures": {name: dict(FIXTURES[name])
                               for name in sorted(FIXTURES)}}
        return _report(args, result, 0)
    if args.name not in FIXTURES:
        raise UsageError("unknown fixture %r (run `broadmatch fixtures` "
                         "for the list)" % args.name)
    out = Path(args.dir or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError("cannot create %s: %s" % (out, exc))
    written = []
    for fname in FIXTURES[args.name]["files"]:
        src = _FIXTURE_DIR / fname
        shutil.copyfile(src, out / fname)
        written.append(str(out / fname))
    return _report(args, {"written": written}, 0)


# -- argument parsing ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="broadmatch",
        description="Exact engine for broad-match keyword auction games.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, profile=False, jobs=False, ext=False):
        p.add_argument("--reserve", default="0", metavar="R",
                       help="reserve score (integer, fraction or decimal)")
        p.add_argument("--format", choices=("json", "table"), default="json")
        if profile:
            p.add_argument("--split", action="append", metavar="FILE")
            p.add_argument("--schedule", metavar="FILE")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, metavar="N")
        if ext:
            p.add_argument("--ext", metavar="FILE")

    p = sub.add_parser("validate", help="check an instance and profiles")
    p.add_argument("instance")
    common(p, profile=True, ext=True)

    p = sub.add_parser("price", help="price one query of a keyword")
    p.add_argument("instance")
    p.add_argument("keyword")
    p.add_argument("ids", nargs="*", metavar="ADVERTISER")
    common(p)

    p = sub.add_parser("partition", help="per-advertiser segment tables")
    p.add_argument("instance")
    p.add_argument("keyword", nargs="?")
    p.add_argument("--advertiser", metavar="ID")
    common(p, profile=True)

    p = sub.add_parser("simulate", help="run one day under a profile")
    p.add_argument("instance")
    common(p, profile=True, jobs=True)

    p = sub.add_parser("best-response", help="one advertiser's best use of "
                                             "her budget against the rest")
    p.add_argument("instance")
    p.add_argument("--advertiser", metavar="ID")
    p.add_argument("--method", choices=("greedy", "dp", "fptas", "brute"),
                   default="dp")
    p.add_argument("--eps", metavar="E")
    common(p, profile=True)

    p = sub.add_parser("verify", help="check a profile for stability")
    p.add_argument("instance")
    p.add_argument("--bme", action="store_true",
                   help="marginal-payoff stability across keywords")
    p.add_argument("--eps-ne", metavar="E", dest="eps_ne",
                   help="certify an approximate Nash point")
    p.add_argument("--method", choices=("dp", "fptas"), default="dp")
    common(p, profile=True)

    p = sub.add_parser("dynamics", help="iterate best responses")
    p.add_argument("instance")
    p.add_argument("--method", choices=("greedy", "dp", "fptas"),
                   default="greedy")
    p.add_argument("--eps", metavar="E")
    p.add_argument("--max-rounds", type=int, default=100, metavar="N")
    p.add_argument("--init", metavar="FILE",
                   help="starting split (default: all-in on the top keyword)")
    p.add_argument("--shuffle-seed", type=int, metavar="SEED")
    common(p)

    p = sub.add_parser("dilemma", help="revenue effect of a broadening "
                                       "under given stable profiles")
    p.add_argument("base")
    p.add_argument("ext_instance", metavar="ext")
    p.add_argument("--profiles", nargs="+", required=True, metavar="FILE")
    common(p)

    p = sub.add_parser("acbm", help="schedule leftover budgets onto "
                                    "broadened keywords")
    p.add_argument("base")
    p.add_argument("--fine", action="store_true",
                   help="refine entry queries inside segments")
    common(p, ext=True)

    p = sub.add_parser("compare", help="two splits on one instance, side "
                                       "by side")
    p.add_argument("instance")
    common(p, profile=True, jobs=True)

    p = sub.add_parser("fixtures", help="list or emit the bundled examples")
    p.add_argument("name", nargs="?")
    p.add_argument("dir", nargs="?")
    common(p)

    return parser


_DISPATCH = {
    "validate": _cmd_validate,
    "price": _cmd_price,
    "partition": _cmd_partition,
    "simulate": _cmd_simulate,
    "best-response": _cmd_best_response,
    "verify": _cmd_verify,
    "dynamics": _cmd_dynamics,
    "dilemma": _cmd_dilemma,
    "acbm": _cmd_acbm,
    "compare": _cmd_compare,
    "fixtures": _cmd_fixtures,
}


def run(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    args._argv = argv
    try:
        if hasattr(args, "reserve"):
            args.reserve = _rat(args.reserve, "--reserve")
        if getattr(args, "eps", None) is not None:
            args.eps = _rat(args.eps, "--eps")
        if getattr(args, "eps_ne", None) is not None:
            args.eps_ne = _rat(args.eps_ne, "--eps-ne")
        return _DISPATCH[args.command](args)
    except UsageError as exc:
        return _fail(args, 2, "usage", str(exc))
    except ModelError as exc:
        return _fail(args, 2, "schema", exc.errors)
    except bestresp.ScaleError as exc:
        return _fail(args, 1, "scale", str(exc))
    except (ValueError, RuntimeError) as exc:
        return _fail(args, 1, "engine", str(exc))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
