"""Run every pipeline stage for one tournament and leave the outputs in one directory.

The output directory can be handed to the acceptance suite as GVDEP_ARTIFACTS.

    python3 scripts/run_tournament.py --data-root open-data/data --out-dir runs/euro2020
    python3 scripts/run_tournament.py --data-root /tmp/syn --competition 9001 --season 1 --quick
"""
import argparse
import sys
import time

from gvdep.cli import EXIT_OK, main as gvdep

QUICK = ["--n-trees", "10", "--max-depth", "3", "--folds", "4"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-root", required=True)
    ap.add_argument("--competition", default="55")
    ap.add_argument("--season", default="43")
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--seed", default="0")
    ap.add_argument("--quick", action="store_true", help="small models, for smoke runs")
    ap.add_argument("--skip-ablation", action="store_true", help="the ablation trains 480 models")
    a = ap.parse_args()
    common = ["--data-root", a.data_root, "--competition", a.competition, "--season", a.season,
              "--out-dir", a.out_dir, "--seed", a.seed]
    model = QUICK if a.quick else []
    stages = [["ingest"], ["value", *model]]
    if not a.skip_ablation:
        stages.insert(1, ["ablate", *model])
    stages.append(["report"])
    for stage in stages:
        t0 = time.perf_counter()
        code = gvdep([stage[0], *common, *stage[1:]])
        print(f"-- {stage[0]} finished in {time.perf_counter() - t0:.1f}s (exit {code})")
        if code != EXIT_OK:
            sys.exit(code)


if __name__ == "__main__":
    main()
