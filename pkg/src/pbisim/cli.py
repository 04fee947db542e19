"""Command-line front end.

Every subcommand prints a verdict: the query, its result, an optional
witness and some counters.  The verdict is always in the payload; the exit
status only says whether a query was answered (0), the input was bad (2)
or a resource budget ran out (3).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .bisim import OnTheFly, approximant_blocks, bisimilarity, Partition
from .core import Plts, PltsError, format_prob, parse_dist, parse_plts
from .flow import build_network, max_flow, to_dot
from .lifting import StateRelation, check, decompose, weight_function
from .logic import distinguish, parse_formula, sat_state
from .metric import metric_iterates, stabilise
from .mucalc import BudgetExceeded, Evaluator, characteristic_formula
from .syntax import FormulaSyntaxError, dag_size, parse, show

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3


@dataclass
class Verdict:
    query: dict[str, Any]
    result: Any
    witness: dict[str, Any] | None = None
    stats: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "result": self.result,
            "witness": self.witness,
            "stats": self.stats,
        }

    def to_text(self) -> str:
        words = []
        for k, v in self.query.items():
            if k == "command":
                words.append(str(v))
            elif v is True:
                words.append(f"--{k}")
            elif v is not None and v is not False:
                words.append(f"{k}={v}")
        q = " ".join(words)
        lines = [f"query: {q}", f"result: {_text(self.result)}"]
        if self.witness is not None:
            kind, value = self.witness["kind"], self.witness["value"]
            if kind == "relation":
                body = " ".join(f"({a}, {b})" for a, b in value)
            elif kind == "decomposition":
                body = ", ".join(f"{d['p']}*({d['left']}, {d['right']})" for d in value)
            elif kind == "metric":
                body = "\n" + "\n".join(
                    f"  {row}: " + " ".join(f"{col}={v}" for col, v in cols.items())
                    for row, cols in value.items()
                )
            else:
                body = _text(value)
            lines.append(f"witness ({kind}): {body}")
        if self.stats:
            lines.append("stats: " + " ".join(f"{k}={v}" for k, v in self.stats.items()))
        return "\n".join(lines) + "\n"


def _text(value: Any) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "none"
    if isinstance(value, list):
        if value and isinstance(value[0], list):
            return " ".join("{" + ", ".join(b) + "}" for b in value)
        return "{" + ", ".join(value) + "}"
    return str(value)


def _blocks(p: Plts, part: Partition) -> list[list[str]]:
    return [[p.states[s] for s in b] for b in part.blocks]


def _relation(p: Plts, r: StateRelation) -> dict:
    return {"kind": "relation", "value": [[p.states[s], p.states[t]] for s, t in r]}


def _load(path: str) -> Plts:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_plts(text)


# ------------------------------------------------------------- commands


def cmd_check(args) -> Verdict:
    p = _load(args.file)
    s, t = p.state(args.s), p.state(args.t)
    query = {"command": "check", "s": args.s, "t": args.t, "mode": args.mode}
    checker = OnTheFly(p, symmetric=args.mode == "bisim")
    ok, rel = checker.query(s, t)
    stats = {"restarts": checker.stats.restarts, "matches": checker.stats.matches,
             "lift_checks": checker.stats.checks}
    witness = None
    if ok:
        witness = _relation(p, rel)
    elif args.mode == "bisim":
        witness = {"kind": "formula", "value": show(distinguish(p, s, t))}
    return Verdict(query, ok, witness, stats)


def cmd_distance(args) -> Verdict:
    p = _load(args.file)
    s, t = p.state(args.s), p.state(args.t)
    query = {"command": "distance", "s": args.s, "t": args.t}
    if args.stabilise:
        k, m = stabilise(p)
        query["stabilise"] = True
        stats = {"stabilisation_index": k}
    else:
        m = metric_iterates(p, args.iters)[-1]
        query["iters"] = args.iters
        stats = {"iterations": args.iters}
    witness = {"kind": "metric", "value": m.to_json(p.states)} if args.witness else None
    if args.csv:
        Path(args.csv).write_text(m.to_csv(p.states))
    return Verdict(query, format_prob(m(s, t)), witness, stats)


def cmd_mc(args) -> Verdict:
    p = _load(args.file)
    query = {"command": "mc", "formula": args.formula, "state": args.state, "mu": args.mu}
    if args.mu:
        f = parse(args.formula, mode="mu")
        trace: list = []
        sat = Evaluator(p, trace).states(f, {})
        result: Any = [p.states[x] for x in sorted(sat)]
        if args.state is not None:
            result = p.state(args.state) in sat
        return Verdict(query, result, None, {"fixpoint_rounds": len(trace)})
    f = parse_formula(args.formula)
    if args.state is None:
        raise PltsError("a state is required outside --mu mode")
    return Verdict(query, sat_state(p, args.state, f))


def cmd_charform(args) -> Verdict:
    p = _load(args.file)
    query = {"command": "charform", "s": args.s, "verify": args.verify}
    f = characteristic_formula(p, args.s)
    stats: dict[str, Any] = {"dag_nodes": dag_size(f)}
    if args.verify:
        sat = Evaluator(p).states(f, {})
        part = bisimilarity(p).block_of()
        s = p.state(args.s)
        cls = {x for x in range(p.n_states) if part[x] == part[s]}
        stats["verified"] = "yes" if sat == cls else "no"
        stats["satisfying_set"] = _text([p.states[x] for x in sorted(sat)])
    return Verdict(query, show(f), None, stats)


def cmd_distinguish(args) -> Verdict:
    p = _load(args.file)
    query = {"command": "distinguish", "s": args.s, "t": args.t}
    f = distinguish(p, args.s, args.t)
    return Verdict(query, None if f is None else show(f))


def cmd_partition(args) -> Verdict:
    p = _load(args.file)
    return Verdict({"command": "partition"}, _blocks(p, bisimilarity(p)))


def cmd_approx(args) -> Verdict:
    p = _load(args.file)
    if args.n < 0:
        raise PltsError("approximant level must be non-negative")
    blocks = approximant_blocks(p, args.n)[-1]
    return Verdict({"command": "approx", "n": args.n}, _blocks(p, Partition.from_block_of(blocks)))


def cmd_lift(args) -> Verdict:
    p = _load(args.file)
    d1, d2 = parse_dist(p, args.left), parse_dist(p, args.right)
    if args.bisim:
        r = bisimilarity(p).relation()
    else:
        r = StateRelation(p.n_states, ((p.state(a), p.state(b)) for a, b in args.pair or ()))
    query = {"command": "lift", "left": args.left, "right": args.right,
             "relation": "bisimilarity" if args.bisim else
             " ".join(f"{a}:{b}" for a, b in args.pair or ())}
    ok = check(d1, d2, r)
    witness = None
    if ok and args.witness:
        wit = decompose(weight_function(d1, d2, r))
        witness = {"kind": "decomposition", "value": wit.to_json(p.states)}
    if args.dot:
        net = build_network(d1, d2, r.pairs)
        label = lambda v: v if isinstance(v, str) else f"{v[0]}:{p.states[v[1]]}"
        Path(args.dot).write_text(to_dot(net, max_flow(net), label))
    return Verdict(query, ok, witness)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # subcommands repeat the flags without defaults so values given
        # before the subcommand name survive
        flags = argparse.ArgumentParser(add_help=False)
        default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        flags.add_argument("--format", choices=["text", "json"], default=default("text"))
        flags.add_argument("--witness", action="store_true", default=default(False),
                           help="include lifting decompositions or metric tables")
        flags.add_argument("--seed", type=int, default=default(None),
                           help="reserved for randomised tie-breaking (none at present)")
        return flags

    common = global_flags(suppress=True)
    parser = argparse.ArgumentParser(
        prog="pbisim", parents=[global_flags(suppress=False)],
        description="Exact probabilistic bisimulation, metrics and modal logics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("file", help="pLTS file, or - for stdin")
        sp.set_defaults(run=fn)
        return sp

    sp = add("check", cmd_check, "decide bisimilarity or similarity of two states")
    sp.add_argument("s")
    sp.add_argument("t")
    sp.add_argument("--mode", choices=["bisim", "sim"], default="bisim")

    sp = add("distance", cmd_distance, "iterate the bisimulation metric")
    sp.add_argument("s")
    sp.add_argument("t")
    how = sp.add_mutually_exclusive_group(required=True)
    how.add_argument("--iters", type=int, metavar="K")
    how.add_argument("--stabilise", action="store_true")
    sp.add_argument("--csv", metavar="PATH", help="also write the metric table as CSV")

    sp = add("mc", cmd_mc, "model-check a formula")
    sp.add_argument("formula")
    sp.add_argument("state", nargs="?")
    sp.add_argument("--mu", action="store_true", help="mu-calculus mode: print the satisfying set")

    sp = add("charform", cmd_charform, "characteristic formula of a state")
    sp.add_argument("s")
    sp.add_argument("--verify", action="store_true")

    sp = add("distinguish", cmd_distinguish, "formula true at s and false at t")
    sp.add_argument("s")
    sp.add_argument("t")

    add("partition", cmd_partition, "bisimilarity classes")

    sp = add("approx", cmd_approx, "classes of the n-th approximant")
    sp.add_argument("n", type=int)

    sp = add("lift", cmd_lift, "decide whether two distributions are related by a lifted relation")
    sp.add_argument("--left", required=True, help="e.g. '1/2 u, 1/2 v'")
    sp.add_argument("--right", required=True)
    rel = sp.add_mutually_exclusive_group(required=True)
    rel.add_argument("--pair", nargs=2, action="append", metavar=("S", "T"))
    rel.add_argument("--bisim", action="store_true", help="lift bisimilarity itself")
    sp.add_argument("--dot", metavar="PATH", help="write the flow network in DOT format")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "distance" and args.iters is not None and args.iters < 0:
        parser.error("--iters must be non-negative")
    started = time.perf_counter()
    try:
        verdict = args.run(args)
    except BudgetExceeded as exc:
        print(f"pbisim: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PltsError, FormulaSyntaxError, ValueError, OSError) as exc:
        print(f"pbisim: {exc}", file=sys.stderr)
        return EXIT_INPUT
    verdict.stats["seconds"] = round(time.perf_counter() - started, 6)
    if args.format == "json":
        print(json.dumps(verdict.to_json(), indent=2))
    else:
        sys.stdout.write(verdict.to_text())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
