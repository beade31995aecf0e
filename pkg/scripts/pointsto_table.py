"""Points-to timings in the shape of a serial / copy-merge / link-merge table.

    python3 scripts/pointsto_table.py --n 10000 --trials 15
"""
import argparse
import json
import statistics
from pathlib import Path

from tabpar import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--trials", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/pointsto.json")
    args = ap.parse_args()

    inputs = bench.pointsto_inputs([args.n], args.seed)
    rows = bench.run_query_suite("pointsto", inputs, [1, 2], ["link", "copy"], args.trials, seed=args.seed)
    report = bench.make_report("pointsto", rows, vars(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2))

    print(f"{'configuration':<22}{'total ms':>10}{'worker ms':>22}{'merge ms':>10}")
    for agg in report["aggregates"]:
        sel = [r for r in report["rows"] if r["mode"] == agg["mode"]
               and r["merge_strategy"] == agg["merge_strategy"]]
        per_worker = [statistics.median(w) for w in zip(*(r["worker_ms"] for r in sel))]
        label = "serial" if agg["mode"] == "serial" else f"2 workers, {agg['merge_strategy']}"
        print(f"{label:<22}{agg['median_total_ms']:>10.3f}{' / '.join(f'{w:.3f}' for w in per_worker):>22}"
              f"{agg['median_merge_ms']:>10.3f}")


if __name__ == "__main__":
    main()
