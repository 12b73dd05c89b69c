from pathlib import Path

import numpy as np
import pytest

from hitpredict.data import FEATURES, FeatureMatrix, TrackRecord

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def make_track(tid, hit=False, **overrides):
    fields = dict(
        id=tid, artist="Artist", popularity=50, explicit=False, album_type="single",
        danceability=0.5, energy=0.5, key=5, loudness=-6.0, mode=1, speechiness=0.05,
        acousticness=0.2, instrumentalness=0.0, liveness=0.1, valence=0.5, tempo=120.0,
        duration_ms=200_000, time_signature=4, hit=hit,
    )
    fields.update(overrides)
    return TrackRecord(**fields)


def random_tracks(n, seed=0, hit_rate=0.5):
    rng = np.random.default_rng(seed)
    return [
        make_track(f"t{i:05d}", hit=bool(rng.random() < hit_rate),
                   popularity=int(rng.integers(0, 101)), explicit=bool(rng.random() < 0.3),
                   danceability=float(rng.random()), energy=float(rng.random()),
                   key=int(rng.integers(0, 12)), loudness=float(rng.normal(-8, 3)),
                   tempo=float(rng.uniform(60, 200)), duration_ms=int(rng.integers(90_000, 400_000)))
        for i in range(n)
    ]


def matrix_from(values, labels, ids=None, names=FEATURES):
    values = np.asarray(values, dtype=np.float64)
    ids = ids or [f"r{i}" for i in range(len(values))]
    return FeatureMatrix(values, np.asarray(labels, dtype=np.float64), tuple(ids), tuple(names))


def gaussian_clouds(n_per_class, d=5, gap=4.0, seed=0):
    """Two unit-variance clouds whose means are ``gap`` apart along the diagonal."""
    rng = np.random.default_rng(seed)
    shift = np.full(d, gap / np.sqrt(d))
    X = np.vstack([rng.normal(size=(n_per_class, d)), rng.normal(size=(n_per_class, d)) + shift])
    y = np.repeat([0, 1], n_per_class)
    return X, y


@pytest.fixture
def fixtures_dir():
    if not FIXTURES.is_dir():
        pytest.skip(f"bundled fixtures missing at {FIXTURES}")
    return FIXTURES


_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _ACCEPTANCE[number] = (title, report.outcome.upper(), report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome, seconds = _ACCEPTANCE[number]
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({seconds:.2f}s)")
