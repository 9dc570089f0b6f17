"""Command-line driver for the adherence engine.

Every run writes a manifest (seed, config hash, artifact paths) next to its
outputs so results can be traced and reproduced.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from datetime import timedelta
from pathlib import Path

import numpy as np

from . import benchmarks
from .evalkit import cost_projection, doses_caught, fpr_matched_table, roc_auc
from .featurize import FEATURE_NAMES, CategoryCodec
from .ingest import ingest_dir
from .learn.leap import LeapModel
from .pipeline import TrainedTask, load_cohort, save_manifest, train_task
from .plan import build_instance, solve_plan, true_coefficients
from .simkit import PolicyMode, SimConfig, Simulator, dataset_digest, export_dataset
from .tasklab import Task, write_samples


def _sim_config(args) -> SimConfig:
    if args.preset == "risk":
        cfg = benchmarks.risk_benchmark_config(args.patients, args.seed)
    elif args.preset == "lcfo":
        cfg = benchmarks.lcfo_benchmark_config(args.patients, args.seed)
    elif args.preset == "dfl":
        cfg = benchmarks.dfl_benchmark_config(args.patients, args.seed)
    else:
        cfg = SimConfig(n_patients=args.patients, seed=args.seed)
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        cfg = replace(cfg, **overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    sim = Simulator(cfg)
    sim.set_policy_mode(PolicyMode(args.mode))
    cohort = sim.run()
    paths = export_dataset(cohort, args.out)
    save_manifest(
        args.out,
        "simulate",
        cfg.seed,
        {"config": str(cfg), "mode": args.mode, "digest": dataset_digest(args.out)},
        paths,
    )
    print(f"wrote {len(paths)} tables for {len(cohort.patients)} patients to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    data = ingest_dir(args.data)
    report = {
        "patients_loaded": len(data.tables.patients),
        "patients_kept": len(data.patients),
        "removed_shared_phone": sorted(data.dedup.removed_patients),
        "removal_fraction": data.dedup.removal_fraction,
        "calls_dropped_unknown_phone": data.join.dropped_unknown_phone,
        "rejected_rows": [
            {"table": r.table, "line": r.line, "reason": r.reason} for r in data.tables.rejects
        ],
    }
    out = Path(args.report or (Path(args.data) / "ingest_report.json"))
    out.write_text(json.dumps(report, indent=2))
    print(f"kept {report['patients_kept']}/{report['patients_loaded']} patients; report at {out}")
    return 0


def cmd_label(args) -> int:
    cohort = load_cohort(args.data)
    from .pipeline import TASK_GENERATORS

    codec = CategoryCodec.from_patients(cohort.patients)
    samples = TASK_GENERATORS[Task(args.task)](cohort, codec=codec)
    write_samples(samples, args.out, FEATURE_NAMES)
    out_dir = Path(args.out).parent
    save_manifest(out_dir, "label", None, {"task": args.task, "n": len(samples)}, {"samples": args.out})
    print(f"wrote {len(samples)} {args.task} samples to {args.out}")
    return 0


def _train_bundle(args) -> tuple[TrainedTask, object]:
    cohort = load_cohort(args.data)
    bundle = train_task(
        cohort,
        Task(args.task),
        seed=args.seed,
        with_leap=args.model in ("leap", "all"),
        with_forest=args.model in ("forest", "all"),
    )
    return bundle, cohort


def cmd_featurize(args) -> int:
    bundle, _ = _train_bundle(replace_ns(args, model="none"))
    bundle.scaler.save(args.out)
    print(f"fitted percentile scaler on {len(bundle.train)} training samples -> {args.out}")
    return 0


def replace_ns(ns, **kw):
    out = argparse.Namespace(**vars(ns))
    for k, v in kw.items():
        setattr(out, k, v)
    return out


def cmd_train(args) -> int:
    bundle, _ = _train_bundle(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {}
    scaler_path = out_dir / "scaler.json"
    bundle.scaler.save(scaler_path)
    artifacts["scaler"] = scaler_path
    if bundle.leap is not None:
        path = out_dir / "leap.json"
        bundle.leap.save(path, scaler_ref="scaler.json")
        artifacts["leap"] = path
    if bundle.forest is not None:
        path = out_dir / "forest.json"
        path.write_text(json.dumps(bundle.forest.to_json()))
        artifacts["forest"] = path
    save_manifest(out_dir, "train", args.seed, {"task": args.task, "model": args.model}, artifacts)
    labels = bundle.labels()
    for kind in ("lw_misses", "leap", "forest"):
        try:
            _, auc = roc_auc(bundle.scores(kind), labels)
            print(f"test AUC {kind}: {auc:.4f}")
        except (ValueError, AttributeError, TypeError):
            pass
    return 0


def _roc_svg(points, size: int = 320, margin: int = 30) -> str:
    """Minimal SVG line chart of an ROC curve; the CSV holds the exact data."""
    span = size - 2 * margin
    xy = " ".join(
        f"{margin + f * span:.1f},{margin + (1 - t) * span:.1f}" for f, t in points
    )
    diag = f"{margin},{size - margin} {size - margin},{margin}"
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">'
        f'<rect width="{size}" height="{size}" fill="white"/>'
        f'<polyline points="{diag}" fill="none" stroke="#bbb" stroke-dasharray="4"/>'
        f'<polyline points="{xy}" fill="none" stroke="#1565c0" stroke-width="1.5"/>'
        f'<text x="{size // 2}" y="{size - 8}" font-size="10" text-anchor="middle">FPR</text>'
        f'<text x="10" y="{size // 2}" font-size="10" transform="rotate(-90 10 {size // 2})" '
        f'text-anchor="middle">TPR</text></svg>'
    )


def cmd_eval(args) -> int:
    bundle, cohort = _train_bundle(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = bundle.labels()
    scorer = "leap" if args.model in ("leap", "all") else "forest"
    scores = bundle.scores(scorer)
    results = {}

    if args.kind in ("roc", "all"):
        points, auc = roc_auc(scores, labels)
        with (out_dir / "roc.csv").open("w") as fh:
            fh.write("fpr,tpr\n")
            for f, t in points:
                fh.write(f"{f},{t}\n")
        (out_dir / "roc.svg").write_text(_roc_svg(points))
        results["auc"] = auc
    if args.kind in ("doses", "all") and bundle.task is Task.RISK:
        baseline = bundle.scores("lw_misses")
        results["doses_caught"] = doses_caught(
            bundle.test, scores, baseline, cohort.calendars, baseline_threshold=3
        )
    if args.kind in ("fpr-table", "all"):
        baseline = bundle.scores("lw_misses")
        results["fpr_table"] = fpr_matched_table(baseline, scores, labels)
    if args.kind in ("cost", "all"):
        results["cost_projection"] = cost_projection(
            17000, 0.10, 0.80, 0.70, 0.42, 25, 216864
        )
    (out_dir / "eval.json").write_text(json.dumps(results, indent=2, default=float))
    save_manifest(
        out_dir,
        "eval",
        args.seed,
        {"kind": args.kind, "auc": results.get("auc")},
        {"eval": out_dir / "eval.json"},
    )
    print(json.dumps(results, indent=2, default=float)[:2000])
    return 0


def cmd_plan(args) -> int:
    cohort = load_cohort(args.data)
    base = min(p.enrollment_date for p in cohort.patients)
    week_start = base + timedelta(days=args.week_offset)
    eligible = []
    for p in cohort.patients:
        cal = cohort.calendars[p.patient_id]
        t0 = cal.day_index(week_start)
        if t0 >= 6 and t0 + 7 < cal.n_days:
            eligible.append(p.patient_id)
    rng = np.random.default_rng(args.seed)
    rng.shuffle(eligible)

    model = scaler = None
    if args.model_dir:
        from .featurize import PercentileScaler

        model = LeapModel.load(Path(args.model_dir) / "leap.json")
        scaler = PercentileScaler.load(Path(args.model_dir) / "scaler.json")
    codec = CategoryCodec.from_patients(cohort.patients)

    plans = []
    for i in range(0, len(eligible) - args.group_size + 1, args.group_size):
        group = eligible[i : i + args.group_size]
        if model is not None:
            from .plan import predict_coefficients, week_instance

            w = week_instance(cohort, week_start, group, codec, scaler=scaler)
            instance = w.instance_from(predict_coefficients(model, w))
        else:
            c = true_coefficients(cohort, week_start, group)
            locs = [cohort.patient(pid).tb_unit_id for pid in group]
            instance, _ = build_instance(locs, c)
        plan = solve_plan(instance)
        plans.append(
            {
                "group": i // args.group_size,
                "week_start": week_start.isoformat(),
                "coefficients": "predicted" if model is not None else "true",
                "locations": list(instance.locations),
                "r": instance.r.tolist(),
                "x": plan.x.tolist(),
                "objective": plan.objective,
            }
        )
    Path(args.out).write_text(json.dumps(plans, indent=2))
    save_manifest(Path(args.out).parent, "plan", args.seed, {"group_size": args.group_size}, {"plans": args.out})
    print(f"solved {len(plans)} group plans; objectives: {[p['objective'] for p in plans]}")
    return 0


def cmd_dfl(args) -> int:
    result = benchmarks.run_planning_benchmark(
        n_patients=args.patients, seed=args.seed, gamma=args.gamma, dfl_epochs=args.epochs
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = asdict(result)
    (out / "dfl_summary.json").write_text(json.dumps(summary, indent=2))
    save_manifest(out, "dfl", args.seed, {"gamma": args.gamma}, {"summary": out / "dfl_summary.json"})
    print(json.dumps(summary, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import build_state, create_app

    state = build_state(args.data, model_dir=args.model_dir)
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adherelab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic cohort dataset")
    sim.add_argument("--out", required=True)
    sim.add_argument("--config", help="JSON file with SimConfig field overrides")
    sim.add_argument("--preset", default="default", choices=["default", "risk", "lcfo", "dfl"])
    sim.add_argument("--patients", type=int, default=200)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mode", default="proxy_respecting", choices=[m.value for m in PolicyMode])
    sim.set_defaults(fn=cmd_simulate)

    ing = sub.add_parser("ingest", help="validate and join raw tables")
    ing.add_argument("--data", required=True)
    ing.add_argument("--report")
    ing.set_defaults(fn=cmd_ingest)

    lab = sub.add_parser("label", help="generate task samples")
    lab.add_argument("--data", required=True)
    lab.add_argument("--task", required=True, choices=[t.value for t in Task])
    lab.add_argument("--out", required=True)
    lab.set_defaults(fn=cmd_label)

    fea = sub.add_parser("featurize", help="fit the percentile scaler")
    fea.add_argument("--data", required=True)
    fea.add_argument("--task", default="risk", choices=[t.value for t in Task])
    fea.add_argument("--out", required=True)
    fea.add_argument("--seed", type=int, default=0)
    fea.set_defaults(fn=cmd_featurize)

    tr = sub.add_parser("train", help="train task models")
    tr.add_argument("--data", required=True)
    tr.add_argument("--task", required=True, choices=[t.value for t in Task])
    tr.add_argument("--model", default="all", choices=["leap", "forest", "all"])
    tr.add_argument("--out", required=True)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(fn=cmd_train)

    ev = sub.add_parser("eval", help="evaluate models and emit report tables")
    ev.add_argument("--data", required=True)
    ev.add_argument("--task", default="risk", choices=[t.value for t in Task])
    ev.add_argument("--model", default="leap", choices=["leap", "forest", "all"])
    ev.add_argument("--kind", default="all", choices=["roc", "doses", "fpr-table", "cost", "all"])
    ev.add_argument("--out", required=True)
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(fn=cmd_eval)

    pl = sub.add_parser("plan", help="solve weekly visit plans for patient groups")
    pl.add_argument("--data", required=True)
    pl.add_argument("--model-dir", dest="model_dir", help="plan on predicted coefficients")
    pl.add_argument("--group-size", type=int, default=100, dest="group_size")
    pl.add_argument("--week-offset", type=int, default=21, dest="week_offset")
    pl.add_argument("--out", required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.set_defaults(fn=cmd_plan)

    df = sub.add_parser("dfl", help="run the decision-focused planning benchmark")
    df.add_argument("--patients", type=int, default=2000)
    df.add_argument("--seed", type=int, default=29)
    df.add_argument("--gamma", type=float, default=1.0)
    df.add_argument("--epochs", type=int, default=15)
    df.add_argument("--out", required=True)
    df.set_defaults(fn=cmd_dfl)

    sv = sub.add_parser("serve", help="serve the dashboard API")
    sv.add_argument("--data", required=True)
    sv.add_argument("--model-dir", dest="model_dir")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except Exception as exc:  # pipeline failures exit nonzero with a reason
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
