"""Run configuration: a flat ``key = value`` text file with dotted keys.

Blank lines and ``#`` comments are ignored. Every key must be one of
``SCHEMA``; values are parsed by the key's declared type. ``dumps`` writes
every key in schema order, and ``loads(dumps(c)) == c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParameterError


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(parse):
    def inner(text):
        return None if text.strip().lower() in ("none", "") else parse(text)
    return inner


def _number_or_word(text):
    text = text.strip()
    try:
        value = float(text)
    except ValueError:
        return text
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def _list(parse):
    def inner(text):
        return [parse(part.strip()) for part in text.split(",") if part.strip()]
    return inner


def _choice(*options):
    def inner(text):
        value = text.strip()
        if value not in options:
            raise ValueError(f"{value!r} is not one of {', '.join(options)}")
        return value
    return inner


def _years(text):
    text = text.strip()
    if "-" in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(y) for y in text.split(",")]


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# key -> (parser, default)
SCHEMA = {
    "seed": (int, 0),
    "threads": (int, 1),
    "paths.out": (str, "out"),
    "paths.dataset": (_optional(str), None),
    "paths.fixtures": (str, "fixtures"),
    "ingest.mode": (_choice("replay", "record", "live"), "replay"),
    "ingest.years": (_years, list(range(2011, 2022))),
    "ingest.requests": (int, 180),
    "ingest.keep": (int, 10),
    "ingest.max_in_flight": (int, 4),
    "ingest.requests_per_second": (float, 5.0),
    "prepare.drop_no_key": (_bool, True),
    "split.train_fraction": (float, 0.7),
    "split.mode": (_choice("paper", "strict"), "paper"),
    "pca.threshold": (float, 0.98),
    "pca.base": (_bool, False),
    "cv.folds": (int, 3),
    "models": (_list(str), ["svm", "logreg", "forest", "knn"]),
    "opt": (_list(str), ["svm", "knn"]),
    "models.knn.k": (int, 25),
    "models.knn.metric": (_choice("euclidean", "hamming"), "euclidean"),
    "models.logreg.learning_rate": (float, 0.1),
    "models.logreg.max_epochs": (int, 5000),
    "models.logreg.tolerance": (float, 1e-6),
    "models.forest.n_estimators": (int, 100),
    "models.forest.max_features": (_number_or_word, "sqrt"),
    "models.forest.max_depth": (_optional(int), None),
    "models.forest.min_samples_leaf": (int, 1),
    "models.svm.C": (float, 10.0),
    "models.svm.gamma": (_number_or_word, "auto"),
    "models.svm.tol": (float, 1e-3),
    "models.svm.max_iter": (_optional(int), None),
    "grid.knn.k": (_list(int), [5, 15, 25, 35]),
    "grid.svm.C": (_list(float), [1.0, 10.0, 100.0]),
    "grid.svm.gamma": (_list(_number_or_word), [0.01, "auto", 0.1, 1]),
    "test.enabled": (_bool, True),
}


def parse_value(key, text):
    if key not in SCHEMA:
        raise ParameterError(f"unknown config key {key!r}")
    try:
        return SCHEMA[key][0](text)
    except ValueError as exc:
        raise ParameterError(f"bad value for {key}: {exc}") from None


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def override(self, pairs):
        """New config with ``{key: text}`` overrides applied."""
        values = dict(self.values)
        for key, text in pairs.items():
            values[key] = parse_value(key, text) if isinstance(text, str) else text
        return RunConfig(values)

    @classmethod
    def loads(cls, text):
        pairs = {}
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            pairs[key] = value
        return cls().override(pairs)

    @classmethod
    def load(cls, path):
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def dumps(self):
        return "".join(f"{k} = {_fmt(self.values[k])}\n" for k in SCHEMA)

    @property
    def out(self):
        return Path(self["paths.out"])

    @property
    def dataset(self):
        return Path(self["paths.dataset"] or self.out / "tracks.csv")

    def model_params(self, kind):
        prefix = f"models.{kind}."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def grid(self, kind):
        prefix = f"grid.{kind}."
        return {f"clf__{k[len(prefix):]}": list(v) for k, v in self.values.items()
                if k.startswith(prefix)}
