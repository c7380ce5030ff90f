"""``streamcast`` command line.

Every command validates the run configuration first, writes into its own
output directory, echoes the resolved configuration there as
``config.json`` and records a ``manifest.json`` holding the config hash,
input checksums and library versions. Failures print one JSON object on
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from . import archive as arc
from . import config as cfgmod
from .cross_validation import SplitPlan, check_plan, make_plan
from .data import area_discrepancy, filter_gauges, load_basins, write_basin
from .evaluation.compare import compare_models
from .evaluation.scoring import OBSERVED, event_scores, fit_return_periods, hydro_scores
from .frequency import TableSet
from .model import EncoderDecoderForecaster, HORIZON, load_checkpoint, predict_ensemble
from .dataset import ForecastDataset
from .report import boxplot_svg, summarize
from .skill import (
    SkillForestClassifier,
    attribute_correlations,
    evaluate_classifier,
    fit_skill_regressor,
    load_forest,
    median_impute,
    skill_labels,
    which_model_labels,
)

logger = logging.getLogger("streamcast")

EXIT_USAGE = 2
EXIT_FAILURE = 1


class CommandError(RuntimeError):
    """A failure the user can fix: missing input, bad argument, empty result."""


# --------------------------------------------------------------------------
# shared plumbing


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions():
    import scipy
    import sklearn

    return {
        "streamcast": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _require(path, what):
    path = Path(path)
    if not path.exists():
        raise CommandError(f"{what} not found: {path}")
    return path


def _write_json(obj, path: Path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (pd.Timestamp,)):
        return o.strftime("%Y-%m-%d")
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _write_csv(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")


class Run:
    """Output directory of one command invocation."""

    def __init__(self, command, cfg: cfgmod.RunConfig, out, argv):
        self.command = command
        self.cfg = cfg
        self.out = Path(out) if out else cfg.output_path / command
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = []
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.json").write_text(cfg.dumps())

    def input(self, path, what="input"):
        path = _require(path, what)
        if path.is_file():
            self.inputs[str(path)] = _sha256(path)
        return path

    def path(self, name):
        self.outputs.append(name)
        return self.out / name

    def finish(self, **extra):
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "config_sha256": self.cfg.digest(),
            "data_root": str(self.cfg.data_path),
            "inputs": self.inputs,
            "outputs": sorted(set(self.outputs)),
            "versions": _versions(),
            "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            **extra,
        }
        _write_json(manifest, self.out / "manifest.json")
        return 0


def _records(cfg, gauge_ids=None, skips=None):
    """Basins under the data root, minus gauges failing the area check."""
    root = _require(cfg.data_path, "data root")
    records = load_basins(root, gauge_ids)
    kept = filter_gauges(records, cfg.area_tolerance)
    if skips is not None:
        kept_ids = {r.gauge_id for r in kept}
        for r in records:
            if r.gauge_id not in kept_ids:
                skips.append({"gauge_id": r.gauge_id, "stage": "area-filter",
                              "reason": f"drainage area discrepancy {area_discrepancy(r):.3f} "
                                        f"exceeds {cfg.area_tolerance}"})
    if not kept:
        raise CommandError(f"no usable basins under {root}")
    return kept


def _meta_table(cfg):
    """gauge id -> meta.json and attributes.json contents, without reading time series."""
    root = _require(cfg.data_path, "data root")
    meta, attrs = {}, {}
    for p in sorted(root.iterdir()):
        if not (p / "meta.json").exists():
            continue
        m = json.loads((p / "meta.json").read_text())
        gid = str(m.get("gauge_id", p.name))
        meta[gid] = m
        a = p / "attributes.json"
        attrs[gid] = json.loads(a.read_text()) if a.exists() else {}
    return meta, attrs


def _attribute_frame(cfg, path=None) -> pd.DataFrame:
    if path is not None:
        frame = pd.read_csv(_require(path, "attribute table"), dtype={"gauge_id": str})
        if "gauge_id" not in frame.columns:
            raise CommandError(f"{path}: missing column 'gauge_id'")
        return frame.set_index("gauge_id").sort_index().astype(float)
    _, attrs = _meta_table(cfg)
    frame = pd.DataFrame.from_dict(attrs, orient="index").sort_index()
    frame.index.name = "gauge_id"
    return frame.astype(float)


def _parse_archives(specs, run):
    out = {}
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise CommandError(f"--archive expects NAME=PATH, got {spec!r}")
        if name == OBSERVED:
            raise CommandError(f"model name {OBSERVED!r} is reserved")
        if name in out:
            raise CommandError(f"model name {name!r} given twice")
        out[name] = arc.read_archive(run.input(path, f"archive {name!r}"))
    return out


def _date(s):
    return None if s is None else pd.Timestamp(s)


# --------------------------------------------------------------------------
# commands


def cmd_synth(args, run):
    from .synthetic import benchmark_archive, make_basins

    basins_dir = run.out / "basins"
    basins_dir.mkdir(exist_ok=True)
    records = make_basins(n=args.n, n_years=args.years, seed=run.cfg.seed)
    for r in records:
        write_basin(r, basins_dir)
    run.outputs.append("basins/")
    arc.write_archive(benchmark_archive(records, seed=run.cfg.seed), run.path("benchmark.csv"))
    return run.finish(n_basins=len(records))


def cmd_cv_split(args, run):
    s = run.cfg.split
    scheme = args.scheme or s.scheme
    k = args.k if args.k is not None else s.k
    if scheme != "random" and args.k is None:
        k = None
    skips = []
    records = _records(run.cfg, skips=skips)
    test_ranges = None
    if args.test_range:
        test_ranges = [tuple(r.split(":")) for r in args.test_range]
    plan = make_plan(records, scheme=scheme, k=k, seed=run.cfg.split.seed if args.seed is None else args.seed,
                     start=s.start, end=s.end, n_time_folds=s.n_time_folds,
                     buffer_days=s.buffer_days, test_ranges=test_ranges)
    check_plan(plan)
    run.path("split_plan.json").write_text(plan.dumps())
    _write_json({"skipped": skips}, run.path("skip_report.json"))
    return run.finish(n_folds=len(plan.folds))


def _forecaster(cfg, jobs):
    m = cfg.model
    return EncoderDecoderForecaster(
        hindcast_length=m.hindcast_length, hidden_size=m.hidden_size, batch_size=m.batch_size,
        training_steps=m.training_steps, learning_rate=m.learning_rate, lr_schedule=m.lr_schedule,
        clip_norm=m.clip_norm, statics_in_decoder=m.statics_in_decoder, shared_head=m.shared_head,
        validate_every=m.validate_every, n_members=m.n_members, forecast_sources=tuple(m.forecast_sources),
        random_state=cfg.seed, n_jobs=jobs,
    )


def _load_plan(path, run):
    plan = SplitPlan.loads(run.input(path, "split plan").read_text())
    check_plan(plan)
    return plan


def _select_folds(plan, fold_ids):
    if not fold_ids:
        return plan.folds
    by_id = {f.fold_id: f for f in plan.folds}
    missing = [f for f in fold_ids if f not in by_id]
    if missing:
        raise CommandError(f"folds not in plan: {missing}")
    return [by_id[f] for f in fold_ids]


def cmd_train(args, run):
    skips = []
    records = _records(run.cfg, skips=skips)
    by_id = {r.gauge_id: r for r in records}
    ckpt_dir = run.out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    trained = {}
    if args.plan:
        plan = _load_plan(args.plan, run)
        jobs = [(f.fold_id, [by_id[g] for g in f.train_gauges if g in by_id], f.train_ranges) for f in _select_folds(plan, args.fold)]
    else:
        jobs = [("all", records, None)]
    for fold_id, train_records, ranges in jobs:
        if not train_records:
            raise CommandError(f"fold {fold_id}: no training basins available")
        date_pairs = [(r.start.isoformat(), r.end.isoformat()) for r in ranges] if ranges else None
        logger.info("training fold %s on %d basins", fold_id, len(train_records))
        est = _forecaster(run.cfg, args.jobs).fit(train_records, train_ranges=date_pairs)
        est.save(run.path(f"checkpoints/{fold_id}.json"))
        for gid, reason in sorted(est.excluded_.items()):
            skips.append({"gauge_id": gid, "stage": "train", "fold_id": fold_id, "reason": reason})
        trained[fold_id] = {
            "n_basins": len(train_records),
            "final_loss": [m.loss_trace[-1] if m.loss_trace else None for m in est.members_],
        }
    _write_json({"skipped": skips}, run.path("skip_report.json"))
    _write_json(trained, run.path("training_summary.json"))
    return run.finish(folds=sorted(trained))


def _issue_dates(dataset, bi, ranges):
    b = dataset.basins[bi]
    th = dataset.hindcast_length
    valid = b.dates[th : len(b.dates) - HORIZON + 1]
    if ranges is None:
        return valid
    keep = np.zeros(len(valid), dtype=bool)
    for r in ranges:
        keep |= (valid >= pd.Timestamp(r.start)) & (valid <= pd.Timestamp(r.end))
    return valid[keep]


def _forecast_with(states, pre, records, ranges, skips, fold_id):
    dataset = ForecastDataset(records, pre, states[0].config.hindcast_length,
                              statics_in_decoder=states[0].config.statics_in_decoder)
    for gid, reason in sorted(dataset.excluded.items()):
        skips.append({"gauge_id": gid, "stage": "forecast", "fold_id": fold_id, "reason": reason})
    dates = {b.gauge_id: _issue_dates(dataset, bi, ranges) for bi, b in enumerate(dataset.basins)}
    return predict_ensemble(states, dataset, dates, n_members=len(states))


def cmd_forecast(args, run):
    skips = []
    records = _records(run.cfg, skips=skips)
    by_id = {r.gauge_id: r for r in records}
    frames = []
    if args.plan:
        plan = _load_plan(args.plan, run)
        ckpt_dir = _require(args.checkpoints, "checkpoint directory")
        for fold in _select_folds(plan, args.fold):
            states, pre = load_checkpoint(run.input(ckpt_dir / f"{fold.fold_id}.json", "checkpoint"))
            test = [by_id[g] for g in fold.test_gauges if g in by_id]
            if test:
                frames.append(_forecast_with(states, pre, test, fold.test_ranges, skips, fold.fold_id))
    else:
        path = Path(args.checkpoints)
        if path.is_dir():
            path = path / "all.json"
        states, pre = load_checkpoint(run.input(path, "checkpoint"))
        frames.append(_forecast_with(states, pre, records, None, skips, "all"))
    predictions = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=arc.ARCHIVE_COLUMNS)
    if predictions.duplicated(["gauge_id", "issue_date", "lead_days"]).any():
        raise CommandError("split plan tests a (gauge, issue date) more than once")
    arc.write_archive(predictions, run.path("predictions.csv"))
    _write_json({"skipped": skips}, run.path("skip_report.json"))
    return run.finish(n_rows=len(predictions))


def cmd_return_periods(args, run):
    fr = run.cfg.frequency
    skips = []
    records = _records(run.cfg, skips=skips)
    archives = _parse_archives(args.archive or [], run)
    tables = fit_return_periods(records, archives, fr.return_periods, fr.threshold_lead,
                                min_years=fr.min_years, start_month=fr.start_month, min_coverage=fr.min_coverage)
    _write_csv(tables.to_frame(), run.path("return_periods.csv"))
    skips += [{**s, "stage": "return-periods"} for s in tables.skipped]
    _write_json({"skipped": skips}, run.path("skip_report.json"))
    return run.finish(n_tables=len(tables.tables))


def _tables(path, run):
    frame = pd.read_csv(run.input(path, "return-period table"), dtype={"gauge_id": str, "source": str})
    return TableSet.from_frame(frame)


def cmd_eval_events(args, run):
    fr, ev = run.cfg.frequency, run.cfg.evaluation
    skips = []
    records = _records(run.cfg, skips=skips)
    archives = _parse_archives(args.archive, run)
    tables = _tables(args.return_periods, run)
    scores, skipped = event_scores(records, archives, tables, fr.return_periods, window=ev.window_days,
                                   start=_date(ev.start), end=_date(ev.end))
    _write_csv(scores, run.path("event_scores.csv"))
    skips += [{**s, "stage": "eval-events"} for s in skipped]
    _write_json({"skipped": skips}, run.path("skip_report.json"))
    return run.finish(n_rows=len(scores))


def cmd_eval_hydro(args, run):
    ev = run.cfg.evaluation
    records = _records(run.cfg)
    archives = _parse_archives(args.archive, run)
    metrics = hydro_scores(records, archives, start=_date(ev.start), end=_date(ev.end))
    _write_csv(metrics, run.path("hydro_metrics.csv"))
    return run.finish(n_rows=len(metrics))


def _read_scores(path, run):
    frame = pd.read_csv(run.input(path, "score table"), dtype={"gauge_id": str, "model": str})
    needed = {"gauge_id", "model", "T", "lead"}
    if not needed <= set(frame.columns):
        raise CommandError(f"{path}: score table lacks columns {sorted(needed - set(frame.columns))}")
    return frame


def _model_rows(scores, model, lead=None):
    rows = scores[scores["model"] == model]
    if rows.empty:
        raise CommandError(f"no scores for model {model!r}")
    if lead is not None:
        rows = rows[rows["lead"] == lead]
        if rows.empty:
            raise CommandError(f"no scores for model {model!r} at lead {lead}")
    return rows


def cmd_compare(args, run):
    ev = run.cfg.evaluation
    scores_a = _read_scores(args.scores, run)
    scores_b = _read_scores(args.scores_b, run) if args.scores_b else scores_a
    a = _model_rows(scores_a, args.model_a, args.lead_a)
    b = _model_rows(scores_b, args.model_b, args.lead_b)
    metric = args.metric or ev.metric
    grouping = args.grouping or ev.grouping
    pair_on = ["gauge_id", "T", "lead"]
    if args.lead_a is not None or args.lead_b is not None:
        # cross-lead comparison: pair each gauge and return period only
        pair_on = ["gauge_id", "T"]
        a, b = a.drop(columns="lead"), b.drop(columns="lead")
        grouping = [g for g in grouping if g != "lead"]
    if args.T is not None:
        a, b = a[a["T"] == args.T], b[b["T"] == args.T]
    continents = None
    if "continent" in grouping:
        meta, _ = _meta_table(run.cfg)
        continents = {g: m.get("continent", "") for g, m in meta.items()}
    results, notes = compare_models(a, b, metric=metric, grouping=grouping, pair_on=pair_on, continents=continents)
    payload = {
        "model_a": args.model_a,
        "model_b": args.model_b,
        "lead_a": args.lead_a,
        "lead_b": args.lead_b,
        "metric": metric,
        "grouping": list(grouping),
        "comparisons": [r.as_dict() for r in results],
        "notes": notes,
    }
    _write_json(_finite(payload), run.path("comparison.json"))
    return run.finish(n_comparisons=len(results))


def _finite(obj):
    """Replace NaN/inf by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not np.isfinite(obj):
        return None
    return obj


def _skill_table(args, run):
    scores = _read_scores(args.scores, run)
    metric = args.metric or run.cfg.evaluation.metric

    def pick(model):
        rows = scores[(scores["model"] == model) & (scores["T"] == args.T) & (scores["lead"] == args.lead)]
        if rows.empty:
            raise CommandError(f"no scores for model {model!r} at T={args.T}, lead={args.lead}")
        return rows.set_index("gauge_id")[metric].dropna()

    attrs = median_impute(_attribute_frame(run.cfg, args.attributes))
    return pick, attrs


def cmd_skill_fit(args, run):
    sk = run.cfg.skill
    pick, attrs = _skill_table(args, run)
    params = {"n_estimators": sk.n_estimators, "n_jobs": args.jobs}
    f1 = pick(args.model)
    if args.task == "which-model":
        if not args.model_b:
            raise CommandError("--model-b is required for the which-model task")
        f1_b = pick(args.model_b)
        common = f1.index.intersection(f1_b.index).intersection(attrs.index)
        X = attrs.loc[common]
        y = which_model_labels(f1.loc[common], f1_b.loc[common], sk.similar_band)
    else:
        common = f1.index.intersection(attrs.index)
        X = attrs.loc[common]
        y = skill_labels(f1.loc[common]) if args.task == "classifier" else f1.loc[common].to_numpy()
    if len(common) == 0:
        raise CommandError("no gauges have both scores and attributes")

    summary = {"task": args.task, "n_gauges": int(len(common)), "attributes": list(X.columns)}
    if args.task == "regressor":
        forest = fit_skill_regressor(X, y, seed=sk.seed, **params)
    else:
        labels = sorted(set(y.tolist()))
        ev = evaluate_classifier(X, y, k=sk.k, seed=sk.seed, labels=labels, **params)
        _write_csv(ev.confusion.reset_index(), run.path("confusion.csv"))
        summary.update(micro_precision=ev.micro_precision, micro_recall=ev.micro_recall, accuracy=ev.accuracy)
        forest = SkillForestClassifier(random_state=sk.seed, **params).fit(X, y)
    forest.save(run.path("skill_model.json"))
    summary["schema_hash"] = forest.schema_hash_
    imp = forest.importances().rename("importance").rename_axis("attribute").reset_index()
    _write_csv(imp, run.path("importances.csv"))
    corr = attribute_correlations(X, f1.loc[common]).rename_axis("attribute").reset_index()
    _write_csv(corr, run.path("correlations.csv"))
    _write_json(_finite(summary), run.path("skill_summary.json"))
    return run.finish(schema_hash=forest.schema_hash_)


def cmd_skill_predict(args, run):
    forest = load_forest(str(run.input(args.model, "skill model")))
    attrs = median_impute(_attribute_frame(run.cfg, args.attributes))
    missing = sorted(set(forest.feature_names_in_) - set(attrs.columns))
    if missing:
        raise CommandError(f"attribute table lacks columns required by the model: {missing}")
    pred = forest.predict(attrs[list(forest.feature_names_in_)])
    out = pd.DataFrame({"basin_id": attrs.index, "predicted": pred})
    _write_csv(out, run.path("predicted_f1.csv"))
    return run.finish(schema_hash=forest.schema_hash_, n_basins=len(out))


def cmd_report(args, run):
    scores = _read_scores(args.scores, run)
    if "continent" not in scores.columns:
        meta, _ = _meta_table(run.cfg)
        scores["continent"] = scores["gauge_id"].map({g: m.get("continent", "") for g, m in meta.items()})
    views = {"T": ["model", "T"], "lead": ["model", "lead"], "continent": ["model", "continent"]}
    for name, by in views.items():
        summary = summarize(scores, by)
        _write_csv(summary, run.path(f"summary_by_{name}.csv"))
        for metric in ("precision", "recall", "f1"):
            part = summary[summary["metric"] == metric]
            if part.empty:
                continue
            svg = boxplot_svg(part, name, f"{metric} by {name}")
            run.path(f"boxplot_{metric}_by_{name}.svg").write_text(svg)
    return run.finish()


# --------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers (members, trees)")
    common.add_argument("--out", help="output directory (default: <output_root>/<command>)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="streamcast", description="Streamflow forecasting and evaluation.")
    p.add_argument("--version", action="version", version=f"streamcast {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "write a synthetic basin fixture and benchmark archive")
    sp.add_argument("--n", type=int, default=20)
    sp.add_argument("--years", type=float, default=5)

    sp = add("cv-split", cmd_cv_split, "generate a cross-validation split plan")
    sp.add_argument("--scheme", choices=cfgmod.SCHEMES)
    sp.add_argument("--k", type=int)
    sp.add_argument("--test-range", action="append", metavar="START:END",
                    help="explicit test window; repeat for several")

    sp = add("train", cmd_train, "train forecaster ensembles")
    sp.add_argument("--plan", help="split plan; one ensemble per fold")
    sp.add_argument("--fold", action="append", help="restrict to these fold ids")

    sp = add("forecast", cmd_forecast, "write a prediction archive")
    sp.add_argument("--checkpoints", required=True, help="checkpoint directory or file")
    sp.add_argument("--plan", help="split plan; forecasts test gauges over test ranges")
    sp.add_argument("--fold", action="append")

    sp = add("return-periods", cmd_return_periods, "fit log-Pearson III return-period tables")
    sp.add_argument("--archive", action="append", metavar="NAME=PATH")

    sp = add("eval-events", cmd_eval_events, "score threshold-crossing events")
    sp.add_argument("--archive", action="append", required=True, metavar="NAME=PATH")
    sp.add_argument("--return-periods", required=True)

    sp = add("eval-hydro", cmd_eval_hydro, "hydrograph metrics per gauge and lead")
    sp.add_argument("--archive", action="append", required=True, metavar="NAME=PATH")

    sp = add("compare", cmd_compare, "paired comparison of two models")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--scores-b", help="score table for model B (default: same as --scores)")
    sp.add_argument("--model-a", required=True)
    sp.add_argument("--model-b", required=True)
    sp.add_argument("--metric", choices=("precision", "recall", "f1"))
    sp.add_argument("--grouping", nargs="+", choices=sorted(cfgmod.GROUPINGS))
    sp.add_argument("--lead-a", type=int)
    sp.add_argument("--lead-b", type=int)
    sp.add_argument("--T", type=float)

    sp = add("skill-fit", cmd_skill_fit, "fit a skill predictor on catchment attributes")
    sp.add_argument("--scores", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--model-b")
    sp.add_argument("--task", choices=("classifier", "regressor", "which-model"), default="classifier")
    sp.add_argument("--T", type=float, default=2)
    sp.add_argument("--lead", type=int, default=0)
    sp.add_argument("--metric", choices=("precision", "recall", "f1"))
    sp.add_argument("--attributes", help="attribute CSV with a gauge_id column (default: data root)")

    sp = add("skill-predict", cmd_skill_predict, "apply a skill predictor to a basin universe")
    sp.add_argument("--model", required=True)
    sp.add_argument("--attributes")

    sp = add("report", cmd_report, "score distributions as CSV and SVG box plots")
    sp.add_argument("--scores", required=True)
    return p


def _emit_error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _emit_error("usage", "invalid command line; see --help", EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {} if args.seed is None else {"seed": args.seed}
        cfg = cfgmod.load_config(args.config, overrides)
        if args.jobs < 1:
            raise cfgmod.ConfigError("--jobs must be >= 1")
        run = Run(args.command, cfg, args.out, argv)
        return args.func(args, run)
    except cfgmod.ConfigError as exc:
        return _emit_error("config", str(exc), EXIT_USAGE)
    except (CommandError, FileNotFoundError) as exc:
        return _emit_error("input", str(exc), EXIT_FAILURE)
    except Exception as exc:  # noqa: BLE001 - surfaced as structured error
        logger.debug("command failed", exc_info=True)
        return _emit_error(type(exc).__name__, str(exc), EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
