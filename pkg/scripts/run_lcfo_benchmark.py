#!/usr/bin/env python3
"""Run the low-call favorable-outcome benchmark: heuristics and models."""

import argparse

from adherelab.benchmarks import lcfo_benchmark_config, run_lcfo_benchmark
from adherelab.evalkit import roc_auc
from adherelab.pipeline import train_task
from adherelab.simkit import simulate_cohort
from adherelab.tasklab import Task


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--patients", type=int, default=1200)
    ap.add_argument("--seed", type=int, default=17)
    ap.add_argument("--with-models", action="store_true", help="also train forest and leap")
    args = ap.parse_args()

    bench = run_lcfo_benchmark(n_patients=args.patients, seed=args.seed)
    print(f"AUC lw-manual  {bench.auc_lw_manual:.4f}")
    print(f"AUC lw-misses  {bench.auc_lw_misses:.4f}")

    if args.with_models:
        bundle = train_task(bench.cohort, Task.LCFO, seed=args.seed)
        labels = bundle.labels()
        _, rf = roc_auc(bundle.scores("forest"), labels)
        _, leap = roc_auc(bundle.scores("leap"), labels)
        print(f"AUC forest     {rf:.4f}")
        print(f"AUC leap       {leap:.4f}")


if __name__ == "__main__":
    main()
