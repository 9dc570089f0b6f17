#!/usr/bin/env python3
"""Run the treatment-outcome prediction task and the staffing cost
projection built from a pair of operating points."""

import argparse

from adherelab.evalkit import cost_projection, fpr_at_tpr, roc_auc
from adherelab.pipeline import train_task
from adherelab.simkit import SimConfig, simulate_cohort
from adherelab.tasklab import Task


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--patients", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=23)
    ap.add_argument("--with-leap", action="store_true", help="also train the network (slower)")
    args = ap.parse_args()

    cohort = simulate_cohort(SimConfig(n_patients=args.patients, seed=args.seed))
    bundle = train_task(cohort, Task.OUTCOME, seed=args.seed, with_leap=args.with_leap)
    labels = bundle.labels()
    print(f"test samples: {len(labels)} ({labels.sum()} unfavorable)")

    scores = {}
    for kind in ("lw_misses", "t_misses", "forest") + (("leap",) if args.with_leap else ()):
        s = bundle.scores(kind)
        _, auc = roc_auc(s, labels)
        scores[kind] = s
        print(f"AUC {kind:10s} {auc:.4f}")

    best = "leap" if args.with_leap else "forest"
    fpr_base = fpr_at_tpr(scores["lw_misses"], labels, 0.80)
    fpr_model = fpr_at_tpr(scores[best], labels, 0.80)
    report = cost_projection(17000, 0.10, 0.80, fpr_base, fpr_model, 25, 216864)
    print(
        f"\nat 80% catch rate: baseline FPR {fpr_base:.1%} vs {best} FPR {fpr_model:.1%} -> "
        f"{report['workers_saved']:.0f} workers, {report['savings']:,.0f} saved"
    )


if __name__ == "__main__":
    main()
