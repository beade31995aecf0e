"""Serial vs 2-worker transitive closure on complete graphs.

    python3 scripts/tc_speedup.py --sizes 100,1000,2000 --trials 5 --out results/tc.json
"""
import argparse
import json
from pathlib import Path

from tabpar import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,1000,2000")
    ap.add_argument("--workers", default="1,2,4")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--flavor", choices=("right", "left"), default="right")
    ap.add_argument("--graph", choices=("complete", "random", "chain"), default="complete")
    ap.add_argument("--out", default="results/tc.json")
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    workers = [int(w) for w in args.workers.split(",")]
    inputs = bench.tc_inputs(sizes, args.graph, args.flavor)
    rows = bench.run_query_suite("tc", inputs, workers, ["link"], args.trials)
    report = bench.make_report("tc", rows, vars(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2))
    for imp in report["improvements"]:
        print(f"n={imp['input']['n']:>6} workers={imp['workers']} "
              f"serial={imp['baseline_median_ms']:9.2f} ms  parallel={imp['candidate_median_ms']:9.2f} ms  "
              f"improvement={imp['improvement_pct']:6.1f}%")


if __name__ == "__main__":
    main()
