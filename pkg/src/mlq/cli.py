"""Command-line entry point: ``mlq parse|eval|scope|equiv|suite``.

Exit codes: 0 consistent (or success), 1 counterexample (or mismatch /
not scoped), 2 inconclusive, 3 usage or precondition error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

from . import equivalence as eq
from .generators import CorpusEntry, check_side_conditions, load_manifest, schema_instances
from .machine import (
    Configuration, Diverges, OutOfFuel, Stuck, Terminated, Unknown, config_closed,
    detect_divergence, eval as run, trace,
)
from .scoping import exp_scoped
from .surface import ParseError, parse_expr, parse_framestack, pretty, pretty_stack
from .syntax import free_names, parse_name, sorted_names, to_json

EXIT = {"consistent": 0, "counterexample": 1, "inconclusive": 2}
USAGE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _parse_file(path: str):
    src = _read(path)
    try:
        return parse_expr(src)
    except ParseError as exc:
        raise UsageError(json.dumps({"file": path, **exc.to_json()})) from None


def _gamma(text: Optional[str]) -> frozenset:
    if not text:
        return frozenset()
    try:
        return frozenset(parse_name(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"bad --gamma: {exc}") from None


def _seed(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("MLQ_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MLQ_SEED must be an integer, got {env!r}") from None


def _emit(obj: dict, human: bool, render=None) -> None:
    if human and render is not None:
        print(render(obj))
    else:
        print(json.dumps(obj, sort_keys=True, ensure_ascii=False))


def outcome_json(o) -> dict:
    if isinstance(o, Terminated):
        return {"outcome": "terminated", "value": pretty(o.value), "steps": o.steps}
    if isinstance(o, OutOfFuel):
        return {"outcome": "out_of_fuel", "steps": o.steps}
    if isinstance(o, Stuck):
        return {"outcome": "stuck", "reason": o.reason, "steps": o.steps,
                "at": {"stack": pretty_stack(o.at.stack), "expr": pretty(o.at.expr)}}
    if isinstance(o, Diverges):
        return {"outcome": "diverges", "prefix": o.prefix, "period": o.period}
    if isinstance(o, Unknown):
        return outcome_json(o.outcome)
    raise TypeError(o)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_parse(args) -> int:
    e = _parse_file(args.file)
    _emit(to_json(e), args.human, lambda _: pretty(e))
    return 0


def cmd_eval(args) -> int:
    e = _parse_file(args.file)
    k = ()
    if args.stack:
        try:
            k = parse_framestack(_read(args.stack))
        except ParseError as exc:
            raise UsageError(json.dumps({"file": args.stack, **exc.to_json()})) from None
    c = Configuration(k, e)
    if not config_closed(c):
        names = ", ".join(str(n) for n in sorted_names(free_names(e))) or "in the stack"
        raise UsageError(f"configuration is not closed (free: {names})")
    if args.trace:
        for n, cfg in trace(e, k, args.fuel):
            print(json.dumps({"n": n, "stack_depth": len(cfg.stack), "redex": pretty(cfg.expr)},
                             ensure_ascii=False))
    r = detect_divergence(c, args.fuel) if args.certify_divergence else run(e, k, args.fuel)
    out = outcome_json(r)
    _emit(out, args.human, _render_outcome)
    return 0


def _render_outcome(o: dict) -> str:
    kind = o["outcome"]
    if kind == "terminated":
        return f"{o['value']}  ({o['steps']} steps)"
    if kind == "diverges":
        return f"diverges: cycle of period {o['period']} after {o['prefix']} steps"
    if kind == "stuck":
        return f"stuck after {o['steps']} steps: {o['reason']}"
    return f"out of fuel after {o['steps']} steps"


def cmd_scope(args) -> int:
    e = _parse_file(args.file)
    g = _gamma(args.gamma)
    free = free_names(e)
    ok = exp_scoped(g, e)
    out = {"scoped": ok, "gamma": [str(n) for n in sorted_names(g)],
           "free": [str(n) for n in sorted_names(free)],
           "missing": [str(n) for n in sorted_names(free - g)]}
    _emit(out, args.human,
          lambda o: "scoped" if o["scoped"] else "not scoped; missing " + ", ".join(o["missing"]))
    return 0 if ok else 1


def _budget(args) -> eq.Budget:
    try:
        # without --probe-fuel, the rhs gets at least as much fuel as the lhs
        probe = max(50_000, args.fuel) if args.probe_fuel is None else args.probe_fuel
        return eq.Budget(fuel=args.fuel, probe_fuel=probe, depth=args.depth, samples=args.samples,
                         seed=_seed(args.seed), accept_fuel_refutation=args.accept_fuel_refutation)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def verdict_json(method: str, v, b: eq.Budget, elapsed_ms: float) -> dict:
    out = {"method": method, "verdict": v.kind, "budget": b.to_json(),
           "elapsed_ms": round(elapsed_ms, 3)}
    if isinstance(v, eq.Counterexample):
        out["witness"] = v.witness.to_json()
    elif isinstance(v, eq.Inconclusive):
        out["reason"] = v.reason
        if v.witness is not None:
            out["witness"] = v.witness.to_json()
    elif v.note:
        out["note"] = v.note
    return out


def _render_verdict(o: dict) -> str:
    lines = [f"{o['method']}: {o['verdict']}"]
    w = o.get("witness")
    if w:
        where = w.get("stack", w.get("context"))
        lines.append(f"  {w['direction']} fails at probe {w['probe']}: {w['kind']}")
        if where is not None:
            lines.append(f"  probe: {where or '(empty stack)'}")
        if "closing" in w:
            lines.append("  closing: " + ", ".join(f"{k} := {v}" for k, v in w["closing"].items()))
    if "reason" in o:
        lines.append(f"  {o['reason']}")
    return "\n".join(lines)


def cmd_equiv(args) -> int:
    e1, e2 = _parse_file(args.lhs), _parse_file(args.rhs)
    g = _gamma(args.gamma)
    b = _budget(args)
    for name, e in (("lhs", e1), ("rhs", e2)):
        if not exp_scoped(g, e):
            missing = ", ".join(str(n) for n in sorted_names(free_names(e) - g))
            raise UsageError(f"{name} is not scoped in gamma (missing: {missing})")
    t0 = time.perf_counter()
    try:
        v = eq.check(args.method, e1, e2, b, g, symmetric=not args.preorder, naive_ctx=args.naive_values)
    except eq.PreconditionError as exc:
        raise UsageError(str(exc)) from None
    out = verdict_json(args.method, v, b, (time.perf_counter() - t0) * 1000)
    _emit(out, args.human, _render_verdict)
    return EXIT[v.kind]


def _suite_job(job):
    entry, method, b = job
    t0 = time.perf_counter()
    failed = check_side_conditions(entry, b.fuel)
    expected = entry.expected_for(method)
    if failed:
        row = {"name": entry.name, "method": method, "verdict": "side_condition_failed",
               "expected": expected, "match": False, "detail": failed}
    else:
        v = eq.check(method, entry.lhs, entry.rhs, b, entry.gamma)
        row = {"name": entry.name, "method": method, "verdict": v.kind, "expected": expected,
               "match": v.kind == expected}
        if isinstance(v, eq.Counterexample):
            row["witness"] = v.witness.to_json()
    row["elapsed_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    return row


def run_suite(entries: list[CorpusEntry], b: eq.Budget, methods=None, jobs: int = 1) -> dict:
    """Run every entry under every applicable method.  Rows follow
    manifest order whatever the completion order."""
    work = [(e, m, b) for e in entries for m in e.methods if methods is None or m in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_suite_job, work, chunksize=1))
    else:
        rows = [_suite_job(w) for w in work]
    counts: dict = {}
    for r in rows:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    matched = sum(r["match"] for r in rows)
    return {"budget": b.to_json(), "rows": rows,
            "summary": {"total": len(rows), "matched": matched, "mismatched": len(rows) - matched,
                        "by_verdict": dict(sorted(counts.items()))}}


def strip_timing(report: dict) -> dict:
    """The report without ``elapsed_ms`` fields, for comparisons."""
    rows = [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in report["rows"]]
    return {**report, "rows": rows}


def _render_report(rep: dict) -> str:
    lines = []
    for r in rep["rows"]:
        mark = "ok " if r["match"] else "BAD"
        lines.append(f"{mark} {r['name']:<20} {r['method']:<14} {r['verdict']:<15} "
                     f"(expected {r['expected']}) {r['elapsed_ms']:.0f} ms")
    s = rep["summary"]
    lines.append(f"{s['matched']}/{s['total']} matched")
    return "\n".join(lines)


def cmd_suite(args) -> int:
    b = _budget(args)
    try:
        entries = load_manifest(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load manifest: {exc}") from None
    if not args.no_generated and args.manifest is None:
        entries += schema_instances(b.spec)
    methods = set(args.method) if args.method else None
    rep = run_suite(entries, b, methods, args.jobs)
    _emit(rep, args.human, _render_report)
    return 0 if rep["summary"]["mismatched"] == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _budget_flags(p) -> None:
    p.add_argument("--fuel", type=int, default=10_000, help="lhs step budget (default 10000)")
    p.add_argument("--probe-fuel", type=int, default=None,
                   help="rhs step budget (default 50000, or --fuel if larger)")
    p.add_argument("--depth", type=int, default=3, help="enumeration depth (default 3)")
    p.add_argument("--samples", type=int, default=500, help="enumerated probes (default 500)")
    p.add_argument("--seed", type=int, default=None, help="seed (default $MLQ_SEED or 0)")
    p.add_argument("--accept-fuel-refutation", action="store_true",
                   help="count an rhs that runs out of fuel as a counterexample")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="mlq", description="Frame-stack semantics and program equivalence checkers.")
    out = argparse.ArgumentParser(add_help=False)
    g = out.add_mutually_exclusive_group()
    g.add_argument("--json", dest="human", action="store_false", help="JSON output (default)")
    g.add_argument("--human", dest="human", action="store_true", help="readable output")
    out.set_defaults(human=False)
    sub = top.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", parents=[out], help="parse a program and print its AST as JSON")
    p.add_argument("file", help="program file, or - for stdin")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", parents=[out], help="run a closed program on the machine")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--stack", help="initial frame stack (.mlqs file, innermost frame first)")
    p.add_argument("--trace", action="store_true", help="print one JSON line per configuration")
    p.add_argument("--certify-divergence", action="store_true",
                   help="detect repeated configurations and report divergence")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scope", parents=[out], help="check that a program is scoped in gamma")
    p.add_argument("file")
    p.add_argument("--gamma", default="", help="comma-separated names, e.g. X,Y,f/1")
    p.set_defaults(func=cmd_scope)

    p = sub.add_parser("equiv", parents=[out], help="check two programs for equivalence")
    p.add_argument("lhs")
    p.add_argument("rhs")
    p.add_argument("--method", choices=eq.METHODS, default="ciu")
    p.add_argument("--gamma", default="")
    p.add_argument("--preorder", action="store_true", help="check only lhs <= rhs")
    p.add_argument("--naive-values", action="store_true",
                   help="with --method ctx: require equal values (naive contextual equivalence)")
    _budget_flags(p)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("suite", parents=[out], help="run a corpus against expected verdicts")
    p.add_argument("manifest", nargs="?", default=None, help="manifest.json (default: shipped corpus)")
    p.add_argument("--method", action="append", choices=eq.METHODS, help="restrict to these methods")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--no-generated", action="store_true", help="skip generated schema instances")
    _budget_flags(p)
    p.set_defaults(func=cmd_suite)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mlq: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
