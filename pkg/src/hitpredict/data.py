"""Track records, feature matrices, the dataset CSV schema and splitting."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyDatasetError,
    InsufficientDataError,
    ParameterError,
    RowError,
    SchemaError,
    ValidationError,
)
from .rng import substream

CSV_COLUMNS = (
    "id", "artist", "popularity", "explicit", "album_type", "danceability",
    "energy", "key", "loudness", "mode", "speechiness", "acousticness",
    "instrumentalness", "liveness", "valence", "tempo", "duration_ms",
    "time_signature", "hit",
)

FEATURES = (
    "explicit", "mode", "key", "acousticness", "valence", "danceability",
    "popularity", "tempo", "instrumentalness", "liveness", "duration_ms",
    "energy", "loudness", "speechiness", "time_signature",
)

AUDIO_FIELDS = (
    "danceability", "energy", "key", "loudness", "mode", "speechiness",
    "acousticness", "instrumentalness", "liveness", "valence", "tempo",
    "duration_ms", "time_signature",
)

UNIT_FIELDS = (
    "danceability", "energy", "speechiness", "acousticness",
    "instrumentalness", "liveness", "valence",
)
INT_FIELDS = ("popularity", "key", "mode", "duration_ms", "time_signature")
ALBUM_TYPES = ("album", "single", "compilation")


@dataclass(frozen=True)
class TrackRecord:
    """One Spotify track plus its hit label.

    Audio fields are ``None`` until the track has been enriched; cleanup
    drops records that still miss any of them.
    """

    id: str
    artist: str = ""
    popularity: int = 0
    explicit: bool = False
    album_type: str = "album"
    danceability: Optional[float] = None
    energy: Optional[float] = None
    key: Optional[int] = None
    loudness: Optional[float] = None
    mode: Optional[int] = None
    speechiness: Optional[float] = None
    acousticness: Optional[float] = None
    instrumentalness: Optional[float] = None
    liveness: Optional[float] = None
    valence: Optional[float] = None
    tempo: Optional[float] = None
    duration_ms: Optional[int] = None
    time_signature: Optional[int] = None
    hit: bool = False

    def __post_init__(self):
        validate_track(self)

    @property
    def complete(self):
        return all(getattr(self, name) is not None for name in FEATURES)

    def missing(self):
        return [name for name in FEATURES if getattr(self, name) is None]


def validate_track(t):
    if not t.id:
        raise ValidationError("id", t.id, "must be non-empty")
    if not 0 <= t.popularity <= 100:
        raise ValidationError("popularity", t.popularity)
    if t.album_type not in ALBUM_TYPES:
        raise ValidationError("album_type", t.album_type, f"expected one of {ALBUM_TYPES}")
    for name in UNIT_FIELDS:
        v = getattr(t, name)
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValidationError(name, v)
    checks = {
        "key": lambda v: -1 <= v <= 11,
        "mode": lambda v: v in (0, 1),
        "tempo": lambda v: v > 0 and math.isfinite(v),
        "loudness": math.isfinite,
        "duration_ms": lambda v: v > 0,
        "time_signature": lambda v: 1 <= v <= 7,
    }
    for name, ok in checks.items():
        v = getattr(t, name)
        if v is not None and not ok(v):
            raise ValidationError(name, v)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true"):
        return True
    if low in ("0", "false"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_cell(name, text):
    if name in ("id", "artist", "album_type"):
        return text
    if name in ("explicit", "hit"):
        return _parse_bool(text)
    if text == "":
        if name == "popularity":
            raise ValueError("popularity is required")
        return None
    if name in INT_FIELDS:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"{name} must be an integer, got {text!r}")
        return int(value)
    return float(text)


def load_tracks_csv(path):
    """Read a dataset CSV (exact canonical header) into TrackRecords."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header") from None
        _check_header(header, CSV_COLUMNS)
        records = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                raise RowError(f"row {row_no}: expected {len(CSV_COLUMNS)} cells, got {len(row)}", row_no)
            values = {}
            for name, text in zip(CSV_COLUMNS, row):
                try:
                    values[name] = _parse_cell(name, text)
                except ValueError as exc:
                    raise RowError(f"row {row_no}, column {name!r}: {exc}", row_no) from None
            try:
                records.append(TrackRecord(**values))
            except ValidationError as exc:
                exc.args = (f"row {row_no}: {exc}",)
                exc.row = row_no
                raise
    return records


def _check_header(header, expected):
    header = [h.strip() for h in header]
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r}", missing[0])
    extra = [c for c in header if c not in expected]
    if extra:
        raise SchemaError(f"unexpected column {extra[0]!r}", extra[0])
    if tuple(header) != tuple(expected):
        raise SchemaError(f"columns out of order; expected {','.join(expected)}")


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_tracks_csv(tracks, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for t in tracks:
            writer.writerow([_format_cell(getattr(t, name)) for name in CSV_COLUMNS])


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Dense N x d model input with aligned labels (1 = hit) and track ids."""

    values: np.ndarray
    labels: np.ndarray
    track_ids: tuple = ()
    feature_names: tuple = FEATURES

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, ndmin=2)
        if values.size == 0:
            values = values.reshape(0, len(self.feature_names))
        labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        ids = tuple(str(i) for i in self.track_ids) or tuple(str(i) for i in range(len(labels)))
        names = tuple(self.feature_names)
        if values.shape[1] != len(names):
            raise SchemaError(f"{values.shape[1]} columns but {len(names)} feature names")
        if not (len(values) == len(labels) == len(ids)):
            raise SchemaError("values, labels and track_ids must have equal length")
        if not np.all(np.isfinite(values)):
            raise ValidationError("values", "NaN/Inf", "matrix must be finite")
        if not np.all((labels == 0) | (labels == 1)):
            raise ValidationError("labels", "non-binary", "labels must be 0 or 1")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "track_ids", ids)
        object.__setattr__(self, "feature_names", names)

    def __len__(self):
        return len(self.labels)

    @property
    def y(self):
        return self.labels.astype(np.int64)

    def take(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(
            self.values[rows], self.labels[rows],
            tuple(self.track_ids[i] for i in rows), self.feature_names,
        )

    def with_values(self, values, feature_names=None):
        return FeatureMatrix(values, self.labels, self.track_ids,
                             self.feature_names if feature_names is None else feature_names)

    def class_counts(self):
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def require_columns(self, names):
        if tuple(names) != self.feature_names:
            raise SchemaError(
                f"column mismatch: expected {list(names)}, got {list(self.feature_names)}")


def to_feature_matrix(tracks):
    """Model input matrix in canonical column order; rows follow input order."""
    tracks = list(tracks)
    if not tracks:
        raise EmptyDatasetError("cannot build a feature matrix from zero tracks")
    rows = []
    for t in tracks:
        missing = t.missing()
        if missing:
            raise ValidationError(missing[0], None, f"track {t.id} is missing a model feature")
        rows.append([float(getattr(t, name)) for name in FEATURES])
    return FeatureMatrix(np.array(rows), [1.0 if t.hit else 0.0 for t in tracks],
                         tuple(t.id for t in tracks), FEATURES)


def write_matrix_csv(matrix, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("id", *matrix.feature_names, "hit"))
        for tid, row, label in zip(matrix.track_ids, matrix.values, matrix.labels):
            writer.writerow([tid, *(repr(float(v)) for v in row), int(label)])


def load_matrix_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[0] != "id" or header[-1] != "hit":
            raise SchemaError(f"{path}: expected header id,<features...>,hit")
        ids, rows, labels = [], [], []
        for row_no, row in enumerate(reader, start=1):
            try:
                rows.append([float(v) for v in row[1:-1]])
                labels.append(float(row[-1]))
            except ValueError as exc:
                raise RowError(f"row {row_no}: {exc}", row_no) from None
            ids.append(row[0])
    names = tuple(header[1:-1])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return FeatureMatrix(values, labels, tuple(ids), names)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    mode: str = "paper"

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ParameterError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.mode not in ("paper", "strict"):
            raise ParameterError(f"split mode must be 'paper' or 'strict', got {self.mode!r}")


def stratified_train_counts(class_sizes: Sequence[int], fraction: float) -> list[int]:
    """Per-class train counts summing to round(fraction * N).

    Each class gets floor(fraction * n_c); the leftover rows go to the classes
    with the largest fractional remainders (lower class index first on ties).
    """
    total = sum(class_sizes)
    n_train = min(max(math.floor(fraction * total + 0.5), 1), total - 1)
    ideal = [fraction * n for n in class_sizes]
    counts = [math.floor(v) for v in ideal]
    order = sorted(range(len(class_sizes)), key=lambda c: (-(ideal[c] - counts[c]), c))
    deficit = n_train - sum(counts)
    while deficit > 0:
        for c in order:
            if deficit and counts[c] < class_sizes[c]:
                counts[c] += 1
                deficit -= 1
    while deficit < 0:
        for c in reversed(order):
            if deficit and counts[c] > 0:
                counts[c] -= 1
                deficit += 1
    return counts


def split(matrix, spec=SplitSpec()):
    """Stratified, seed-deterministic train/validation partition.

    Rows keep their relative input order inside each partition.
    """
    n = len(matrix)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows to split, got {n}")
    rng = substream(spec.seed, "split")
    classes = [np.flatnonzero(matrix.labels == c) for c in (0.0, 1.0)]
    counts = stratified_train_counts([len(c) for c in classes], spec.train_fraction)
    train_rows = []
    for rows, k in zip(classes, counts):
        train_rows.extend(rng.permutation(rows)[:k].tolist())
    mask = np.zeros(n, dtype=bool)
    mask[train_rows] = True
    return matrix.take(np.flatnonzero(mask)), matrix.take(np.flatnonzero(~mask))


def replace_track(track, **changes):
    return dataclasses.replace(track, **changes)
