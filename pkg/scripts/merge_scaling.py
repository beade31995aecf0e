"""merge_link vs merge_copy wall time by child table size.

    python3 scripts/merge_scaling.py --sizes 100,10000,1000000 --trials 7
"""
import argparse
import json
from pathlib import Path

from tabpar import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,10000,1000000")
    ap.add_argument("--trials", type=int, default=7)
    ap.add_argument("--out", default="results/merge.json")
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rows = bench.run_merge_suite(sizes, trials=args.trials)
    report = bench.make_report("merge", rows, vars(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2))
    med = {(a["merge_strategy"], a["input"]["size"]): a["median_total_ms"] for a in report["aggregates"]}
    for size in sizes:
        print(f"size={size:>9}  link={med[('link', size)] * 1e3:9.1f} us  copy={med[('copy', size)] * 1e3:12.1f} us")


if __name__ == "__main__":
    main()
