"""Scaler -> optional PCA -> classifier pipelines, grid search and model files."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import clone
from sklearn.model_selection import StratifiedKFold
from sklearn.pipeline import Pipeline

from .errors import FormatError, ParameterError
from .models import KINDS
from .pca import StandardPCA
from .preprocess import MinMaxScaler
from .rng import subseed

FORMAT = "hitpredict-model"
VERSION = 1
# execution knobs that must not leak into saved models
RUNTIME_PARAMS = ("n_jobs",)


def make_pipeline(kind, params=None, pca_threshold=0.98):
    """``pca_threshold=None`` drops the PCA stage."""
    if kind not in KINDS:
        raise ParameterError(f"unknown classifier kind {kind!r}; expected one of {sorted(KINDS)}")
    steps = [("scaler", MinMaxScaler())]
    if pca_threshold is not None:
        steps.append(("pca", StandardPCA(pca_threshold)))
    steps.append(("clf", KINDS[kind](**(params or {}))))
    return Pipeline(steps)


def kind_of(pipeline):
    clf = pipeline.steps[-1][1]
    for kind, cls in KINDS.items():
        if type(clf) is cls:
            return kind
    raise ParameterError(f"unsupported classifier {type(clf).__name__}")


@dataclass
class PipelineSpec:
    kind: str
    params: dict = field(default_factory=dict)
    pca_threshold: float | None = 0.98
    grid: dict = field(default_factory=dict)
    cv_folds: int = 3
    seed: int = 0

    def build(self):
        return make_pipeline(self.kind, self.params, self.pca_threshold)


@dataclass
class GridResult:
    best_params: dict
    best_index: int
    mean_scores: list
    table: list  # (grid index, params, fold, accuracy)


def _expand(grid):
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _fold_score(pipeline, params, X_fit, y_fit, X_held, y_held):
    model = clone(pipeline).set_params(**params)
    model.fit(X_fit, y_fit)
    return float(np.mean(model.predict(X_held) == y_held))


def grid_search(pipeline, X, y, grid, folds=3, seed=0, n_jobs=1):
    """Stratified k-fold accuracy for every grid point; refit the winner on all rows.

    ``grid`` maps pipeline parameter names (``"clf__k"``) to candidate lists;
    points are enumerated in declaration order and ties go to the earliest.
    Each fold fit sees only its own training rows, so scaler and PCA are
    refit per fold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    points = _expand(grid) if grid else [{}]
    if folds < 2:
        raise ParameterError(f"need at least 2 folds, got {folds}")
    smallest = int(min(np.sum(y == 0), np.sum(y == 1)))
    if smallest < folds:
        raise ParameterError(
            f"a fold would contain a single class ({smallest} rows in the smaller class); "
            f"use fewer than {folds} folds")
    splitter = StratifiedKFold(folds, shuffle=True, random_state=subseed(seed, "cv"))
    splits = list(splitter.split(X, y))
    for fit_rows, _ in splits:
        if len(np.unique(y[fit_rows])) < 2:
            raise ParameterError("a training fold contains a single class; use fewer folds")
    jobs = [(g, f) for g in range(len(points)) for f in range(len(splits))]
    scores = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_fold_score)(pipeline, points[g], X[splits[f][0]], y[splits[f][0]],
                             X[splits[f][1]], y[splits[f][1]])
        for g, f in jobs)
    table = [(g, points[g], f, s) for (g, f), s in zip(jobs, scores)]
    means = [float(np.mean([s for (g2, _, _, s) in table if g2 == g])) for g in range(len(points))]
    best = int(np.argmax(means))
    winner = clone(pipeline).set_params(**points[best]).fit(X, y)
    return winner, GridResult(points[best], best, means, table)


def _clean(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def to_envelope(pipeline, name=None, extra=None):
    kind = kind_of(pipeline)
    steps = dict(pipeline.steps)
    clf = steps["clf"]
    hyper = {k: _clean(v) for k, v in sorted(clf.get_params().items()) if k not in RUNTIME_PARAMS}
    env = {
        "format": FORMAT,
        "version": VERSION,
        "kind": kind,
        "name": name or kind,
        "hyperparameters": hyper,
        "parameters": clf.to_dict(),
        "scaler": steps["scaler"].to_dict(),
        "pca": None,
    }
    if "pca" in steps:
        env["pca"] = {"variance_threshold": steps["pca"].variance_threshold, **steps["pca"].to_dict()}
    if extra:
        env.update(extra)
    return env


def from_envelope(env):
    if env.get("format") != FORMAT:
        raise FormatError(f"not a model file (format={env.get('format')!r})")
    if env.get("version") != VERSION:
        raise FormatError(f"unsupported model version {env.get('version')!r}; expected {VERSION}")
    kind = env["kind"]
    if kind not in KINDS:
        raise FormatError(f"unknown model kind {kind!r}")
    steps = [("scaler", MinMaxScaler.from_dict(env["scaler"]))]
    if env.get("pca") is not None:
        pca = dict(env["pca"])
        steps.append(("pca", StandardPCA.from_dict(pca, pca.pop("variance_threshold", None))))
    clf = KINDS[kind](**env["hyperparameters"]).load_dict(env["parameters"])
    steps.append(("clf", clf))
    return Pipeline(steps)


def dumps_model(pipeline, name=None, extra=None):
    return json.dumps(to_envelope(pipeline, name, extra), sort_keys=True, separators=(",", ":")) + "\n"


def save_model(pipeline, path, name=None, extra=None):
    Path(path).write_text(dumps_model(pipeline, name, extra), encoding="utf-8")


def load_model(path):
    try:
        env = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    return from_envelope(env)
