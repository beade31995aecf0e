"""Command line: run, gen, bench, explain-plan."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, gen
from .engine import EvalConfig, ResourceError, solve
from .lang import ParseError, ValidationError, parse_program, parse_query
from .pdg import classify_shape, plan_split
from .tables import DisjointnessError

EXIT_INPUT = 1
EXIT_RESOURCE = 2
EXIT_MISMATCH = 3


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x]


def _words(text: str) -> list:
    return [x for x in text.split(",") if x]


def _load(path: str, query_text: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such program file: {path}")
    program = parse_program(p.read_text(encoding="utf-8"))
    return program, parse_query(query_text, program)


def _plan_json(program, query, threads: int) -> dict:
    shape = classify_shape(program, query)
    if not shape.parallelizable:
        return {"split": False, "reason": "not a linear reachability query", "shape": shape.kind.value}
    plan = plan_split(program, query, max(threads, 2), shape)
    return plan.to_json(program) if hasattr(plan, "branches") else plan.to_json()


def cmd_run(args) -> int:
    program, query = _load(args.file, args.query)
    if args.explain_plan:
        print(json.dumps(_plan_json(program, query, args.threads), indent=2))
    config = EvalConfig(mode=args.mode, workers=args.threads, merge_strategy=args.merge,
                        dedup=True if args.dedup else None, debug_disjoint=args.debug_disjoint,
                        seed=args.seed)
    res = solve(program, query, config)
    if args.count:
        print(res.stats.answer_count)
    else:
        for row in res.decoded():
            print(f"{query.atom.name}({','.join(row)})")
    if args.stats:
        print(json.dumps(res.stats.as_dict()), file=sys.stderr)
    return 0


def cmd_explain_plan(args) -> int:
    program, query = _load(args.file, args.query)
    print(json.dumps(_plan_json(program, query, args.threads), indent=2))
    return 0


def cmd_gen(args) -> int:
    facts = gen.generate(args.kind, args.n, args.p, args.seed)
    sys.stdout.write(facts.to_text())
    return 0


def cmd_bench(args) -> int:
    config = {
        "suite": args.suite,
        "sizes": args.sizes,
        "trials": args.trials,
        "workers": args.workers,
        "merge": args.merge,
        "seed": args.seed,
    }
    if args.suite == "merge":
        rows = bench.run_merge_suite(args.sizes, args.merge, args.trials)
    else:
        if args.suite == "tc":
            config.update(graph=args.graph, flavor=args.flavor, p=args.p)
            inputs = bench.tc_inputs(args.sizes, args.graph, args.flavor, args.p, args.seed)
        else:
            inputs = bench.pointsto_inputs(args.sizes, args.seed)
        rows = bench.run_query_suite(args.suite, inputs, args.workers, args.merge, args.trials,
                                     tabled=args.tabled, seed=args.seed)
    report = bench.make_report(args.suite, rows, config, args.note)
    text = bench.to_csv(report) if args.format == "csv" else json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    return 0


_SIZE_DEFAULTS = {"tc": [100, 1000], "pointsto": [10000], "merge": [100, 10000, 1000000]}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tabpar", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def query_args(p):
        p.add_argument("file")
        p.add_argument("--query", "-q", required=True)
        p.add_argument("--threads", "-k", type=int, default=2)

    run = sub.add_parser("run", help="evaluate a query")
    query_args(run)
    run.add_argument("--mode", choices=("serial", "parallel", "oracle"), default="serial")
    run.add_argument("--merge", choices=("link", "copy"), default="link")
    run.add_argument("--count", action="store_true", help="print only the answer count")
    run.add_argument("--stats", action="store_true", help="print phase times (JSON, stderr)")
    run.add_argument("--dedup", action="store_true", help="deduplicate across table segments")
    run.add_argument("--debug-disjoint", action="store_true",
                     help="fail if two workers record the same answer")
    run.add_argument("--explain-plan", action="store_true", help="print the split plan first")
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(func=cmd_run)

    ex = sub.add_parser("explain-plan", help="print the frontier split as JSON")
    query_args(ex)
    ex.set_defaults(func=cmd_explain_plan)

    g = sub.add_parser("gen", help="write generated facts to stdout")
    g.add_argument("kind", choices=gen.KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("suite", choices=bench.SUITES)
    b.add_argument("--sizes", type=_ints, default=None)
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--workers", type=_ints, default=[1, 2])
    b.add_argument("--merge", type=_words, default=None)
    b.add_argument("--graph", choices=("complete", "chain", "random"), default="complete")
    b.add_argument("--flavor", choices=("right", "left"), default="right")
    b.add_argument("--p", type=float, default=0.05)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--tabled", action="store_true",
                   help="also time the general tabled evaluator (small inputs only)")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.add_argument("--output", "-o")
    b.add_argument("--note", default="", help="free-text machine note for the report")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench":
        args.sizes = args.sizes or _SIZE_DEFAULTS[args.suite]
        if args.merge is None:
            args.merge = ["link", "copy"] if args.suite == "merge" else ["link"]
        bad = [m for m in args.merge if m not in ("link", "copy")]
        if bad:
            print(f"tabpar: unknown merge strategy {bad[0]!r}", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (FileNotFoundError, ParseError, ValidationError, ValueError) as e:
        print(f"tabpar: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as e:
        print(f"tabpar: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (bench.AnswerMismatch, DisjointnessError) as e:
        print(f"tabpar: correctness check failed: {e}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
