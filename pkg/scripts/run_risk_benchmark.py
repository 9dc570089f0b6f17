#!/usr/bin/env python3
"""Run the weekly risk prediction benchmark and print the model table."""

import argparse

import numpy as np

from adherelab.benchmarks import run_risk_benchmark
from adherelab.evalkit import doses_caught, fpr_matched_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--patients", type=int, default=1500)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    bench = run_risk_benchmark(n_patients=args.patients, seed=args.seed)
    print(f"test samples: {len(bench.bundle.test)}")
    print(f"AUC  lw-misses      {bench.auc_lw:.4f}")
    print(f"AUC  random forest  {bench.auc_forest:.4f}")
    print(f"AUC  leap           {bench.auc_leap:.4f}")

    labels = bench.bundle.labels()
    leap_scores = bench.bundle.scores("leap")
    lw_scores = bench.bundle.scores("lw_misses")
    table = doses_caught(
        bench.bundle.test, leap_scores, lw_scores, bench.cohort.calendars, baseline_threshold=3
    )
    print("\nmissed doses caught at the baseline operating point (lw >= 3):")
    print(f"  baseline: {table['baseline']}")
    print(f"  model:    {table['model']}")
    print(
        f"  improvement: {table['improvement_tp_pct']:.1f}% patients, "
        f"{table['improvement_doses_pct']:.1f}% doses"
    )

    print("\nFPR at matched TPR:")
    for row in fpr_matched_table(lw_scores, leap_scores, labels):
        print(
            f"  TPR {row['tpr']:.0%}: baseline FPR {row['fpr_a']:.1%} "
            f"leap FPR {row['fpr_b']:.1%} improvement {row['improvement_pct']:.0f}%"
        )


if __name__ == "__main__":
    main()
