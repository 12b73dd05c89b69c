"""Pipeline stages behind the CLI commands.

Each ``run_*`` function reads its inputs from the config's paths, writes its
artifacts under ``paths.out`` and returns a small summary dict. Every random
draw comes from a named stream of the config seed.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from . import charts
from .data import FEATURES, SplitSpec, load_matrix_csv, load_tracks_csv, to_feature_matrix, write_matrix_csv, write_tracks_csv
from .errors import SchemaError
from .evaluation import build_test_set, compare, overlap, read_report_csv, write_report_csv
from .ingestion import acquire, open_transport
from .ingestion.synthetic import record_fixtures
from .pca import fit_pca, loading_report, n_components_for
from .pipeline import grid_search, load_model, make_pipeline, save_model
from .preprocess import apply_scaler, cleanup, fit_scaler, prepare_matrix

log = logging.getLogger(__name__)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _dirs(cfg, *names):
    paths = [cfg.out / n for n in names]
    for p in paths:
        p.mkdir(parents=True, exist_ok=True)
    return paths if len(paths) > 1 else paths[0]


def run_make_fixtures(cfg, root=None, **catalog):
    root = Path(root or cfg["paths.fixtures"])
    tracks, summary = record_fixtures(root, cfg["ingest.years"], cfg["ingest.requests"],
                                      cfg["ingest.keep"], seed=cfg["seed"], **catalog)
    return {"fixtures": str(root), "tracks": len(tracks), **summary.to_dict()}


def run_ingest(cfg):
    transport = open_transport(cfg["ingest.mode"], cfg["paths.fixtures"],
                               requests_per_second=cfg["ingest.requests_per_second"])
    try:
        tracks, summary = acquire(cfg["ingest.years"], cfg["ingest.requests"], cfg["ingest.keep"],
                                  cfg["seed"], transport, cfg["ingest.max_in_flight"])
    finally:
        transport.close()
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_tracks_csv(tracks, cfg.dataset)
    info = {"rows": len(tracks), **summary.to_dict()}
    _write_json(cfg.out / "ingest_summary.json", info)
    return {"dataset": str(cfg.dataset), **info}


def load_clean_tracks(cfg):
    tracks = load_tracks_csv(cfg.dataset)
    kept, dropped = cleanup(tracks, drop_no_key=cfg["prepare.drop_no_key"])
    return tracks, kept, dropped


def run_prepare(cfg):
    """cleanup -> feature matrix -> oversample/split; writes train/validation CSVs."""
    tracks, kept, dropped = load_clean_tracks(cfg)
    matrix = to_feature_matrix(kept)
    spec = SplitSpec(cfg["split.train_fraction"], cfg["seed"], cfg["split.mode"])
    train, validation = prepare_matrix(matrix, spec, cfg["seed"])
    out = _dirs(cfg, "prepared")
    write_matrix_csv(train, out / "train.csv")
    write_matrix_csv(validation, out / "validation.csv")
    n_neg, n_pos = matrix.class_counts()
    info = {
        "input_rows": len(tracks),
        "clean_rows": len(kept),
        "dropped": dict(sorted(dropped.items())),
        "hits": n_pos,
        "nonhits": n_neg,
        "mode": spec.mode,
        "train_rows": len(train),
        "train_class_counts": list(train.class_counts()),
        "validation_rows": len(validation),
        "validation_class_counts": list(validation.class_counts()),
    }
    _write_json(out / "summary.json", info)
    return info


def load_prepared(cfg):
    """Re-run prepare (it is deterministic) so splits never go stale."""
    run_prepare(cfg)
    out = cfg.out / "prepared"
    return load_matrix_csv(out / "train.csv"), load_matrix_csv(out / "validation.csv")


def run_pca(cfg):
    train, _ = load_prepared(cfg)
    scaled = apply_scaler(fit_scaler(train), train)
    model = fit_pca(scaled)
    threshold = cfg["pca.threshold"]
    cum = np.cumsum(model.explained_variance_ratio)
    k = n_components_for(model.explained_variance_ratio, threshold)
    out = _dirs(cfg, "pca")
    _write_json(out / "pca.json", model.to_dict())
    with (out / "variance.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("component", "explained_variance_ratio", "cumulative"))
        for i, (r, c) in enumerate(zip(model.explained_variance_ratio, cum), start=1):
            w.writerow((f"PC{i}", repr(float(r)), repr(float(c))))
    with (out / "loadings.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("component", "feature", "loading"))
        for row in loading_report(model):
            w.writerow((f"PC{row.component}", row.feature, repr(row.loading)))
    charts.cumulative_variance(model.explained_variance_ratio, out / "variance.svg", threshold)
    return {"components": model.k, "selected": k, "threshold": threshold,
            "cumulative_at_selected": float(cum[k - 1])}


def classifier_params(cfg, kind):
    params = cfg.model_params(kind)
    if kind == "forest":
        params.update(random_state=cfg["seed"], n_jobs=cfg["threads"])
    return params


def model_names(cfg):
    return list(cfg["models"]) + [f"{k}-opt" for k in cfg["opt"]]


def _write_predictions(path, model, matrix):
    proba = model.predict_proba(matrix.values)[:, 1]
    pred = model.predict(matrix.values)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id", "class", "probability", "hit"))
        for tid, c, p, t in zip(matrix.track_ids, pred, proba, matrix.y):
            w.writerow((tid, int(c), repr(float(p)), int(t)))


def run_train(cfg):
    train, validation = load_prepared(cfg)
    models_dir, reports_dir, pred_dir = _dirs(cfg, "models", "reports", "predictions")
    base_pca = cfg["pca.threshold"] if cfg["pca.base"] else None
    trained = []
    for kind in cfg["models"]:
        model = make_pipeline(kind, classifier_params(cfg, kind), base_pca).fit(train.values, train.y)
        save_model(model, models_dir / f"{kind}.json", name=kind)
        trained.append((kind, model))
    for kind in cfg["opt"]:
        name = f"{kind}-opt"
        base = make_pipeline(kind, classifier_params(cfg, kind), cfg["pca.threshold"])
        model, result = grid_search(base, train.values, train.y, cfg.grid(kind), cfg["cv.folds"],
                                    cfg["seed"], cfg["threads"])
        extra = {"grid_search": {"best_params": result.best_params, "mean_scores": result.mean_scores}}
        save_model(model, models_dir / f"{name}.json", name=name, extra=extra)
        with (reports_dir / f"cv_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("grid_index", "params", "fold", "accuracy"))
            for g, params, fold, acc in result.table:
                w.writerow((g, json.dumps(params, sort_keys=True), fold, repr(acc)))
        trained.append((name, model))
    reports = compare(trained, validation)
    write_report_csv(reports, reports_dir / "validation.csv")
    charts.metric_bars(reports, reports_dir / "validation_metrics.svg", "Validation set")
    for (name, model), report in zip(trained, reports):
        _write_predictions(pred_dir / f"validation_{name}.csv", model, validation)
        charts.confusion_heatmap(report, reports_dir / f"confusion_validation_{name}.svg")
    return {"models": [n for n, _ in trained],
            "validation": {r.model: r.accuracy for r in reports}}


def run_evaluate(cfg):
    """Score saved models on the validation split and the balanced test set."""
    train, validation = load_prepared(cfg)
    _, kept, _ = load_clean_tracks(cfg)
    test = build_test_set(kept, cfg["seed"])
    models_dir, reports_dir = _dirs(cfg, "models", "reports")
    models = [(name, load_model(models_dir / f"{name}.json")) for name in model_names(cfg)]
    reports = compare(models, validation, test if cfg["test.enabled"] else None)
    write_report_csv(reports, reports_dir / "evaluation.csv")
    test_reports = [r for r in reports if r.split == "test"]
    if test_reports:
        write_report_csv(test_reports, reports_dir / "test.csv")
        charts.metric_bars(test_reports, reports_dir / "test_metrics.svg", "Test set")
        for r in test_reports:
            charts.confusion_heatmap(r, reports_dir / f"confusion_test_{r.model}.svg")
    train_ids = set(train.track_ids)
    hit_ids = [t for t, y in zip(test.track_ids, test.y) if y == 1]
    info = {
        "test_rows": len(test),
        "test_class_counts": list(test.class_counts()),
        "test_ids_in_train": overlap(test.track_ids, train_ids),
        "test_hits_in_train": overlap(hit_ids, train_ids),
        "test_ids_in_validation": overlap(test.track_ids, validation.track_ids),
    }
    _write_json(reports_dir / "test_overlap.json", info)
    return {**info, "test": {r.model: r.accuracy for r in test_reports}}


def run_report(cfg):
    reports_dir = cfg.out / "reports"
    source = reports_dir / "evaluation.csv"
    if not source.exists():
        source = reports_dir / "validation.csv"
    reports = read_report_csv(source)
    write_report_csv(reports, reports_dir / "report.csv")
    for split_name in ("validation", "test"):
        subset = [r for r in reports if r.split == split_name]
        if subset:
            charts.metric_bars(subset, reports_dir / f"report_{split_name}.svg",
                               f"{split_name.capitalize()} set")
    return reports


def read_feature_rows(path):
    """ids and the 15 model features from any CSV whose header contains them."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [f for f in FEATURES if f not in header]
        if missing:
            raise SchemaError(f"input is missing model columns: {', '.join(missing)}", missing[0])
        ids, rows = [], []
        for i, row in enumerate(reader):
            ids.append(row.get("id") or str(i))
            rows.append([_feature_value(row[f]) for f in FEATURES])
    return ids, np.array(rows, dtype=np.float64).reshape(len(rows), len(FEATURES))


def _feature_value(text):
    low = text.strip().lower()
    if low in ("true", "false"):
        return 1.0 if low == "true" else 0.0
    return float(text)


def run_predict(model_path, input_path, output_path):
    model = load_model(model_path)
    ids, X = read_feature_rows(input_path)
    Path(output_path).parent.mkdir(parents=True, exist_ok=True)
    with Path(output_path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id", "class", "probability"))
        if len(X):
            proba = model.predict_proba(X)[:, 1]
            for tid, c, p in zip(ids, model.predict(X), proba):
                w.writerow((tid, int(c), repr(float(p))))
    return {"rows": len(ids), "output": str(output_path)}


__all__ = [
    "run_evaluate", "run_ingest", "run_make_fixtures", "run_pca", "run_predict",
    "run_prepare", "run_report", "run_train", "write_tracks_csv",
]
