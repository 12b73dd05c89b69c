import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from hitpredict.cli import main
from hitpredict.data import load_tracks_csv
from hitpredict.evaluation import confusion, metrics, read_report_csv

SMALL = """\
ingest.years = 2011-2012
ingest.requests = 20
models.forest.n_estimators = 20
models.logreg.max_epochs = 500
grid.svm.C = 1,10
grid.svm.gamma = auto,1
grid.knn.k = 5,15
"""


def digest_tree(root, pattern="**/*"):
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.glob(pattern)) if p.is_file()}


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    cfg = base / "run.cfg"
    cfg.write_text(SMALL + f"paths.fixtures = {base / 'fx'}\npaths.out = {base / 'out'}\n")
    for cmd in (["make-fixtures"], ["ingest"], ["pca"], ["train"], ["evaluate"], ["report"]):
        assert main([*cmd, "--config", str(cfg)]) == 0, cmd
    return base, cfg


def test_ingest_summary_matches_csv(run):
    base, _ = run
    summary = json.loads((base / "out" / "ingest_summary.json").read_text())
    tracks = load_tracks_csv(base / "out" / "tracks.csv")
    assert summary["hits_emitted"] == sum(t.hit for t in tracks)
    assert summary["rows"] == len(tracks)


def test_ingest_replay_is_byte_identical(run, tmp_path):
    base, cfg = run
    assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "tracks.csv").read_bytes() == (base / "out" / "tracks.csv").read_bytes()


def test_missing_fixture_dir_exits_2(run, tmp_path, capsys):
    _, cfg = run
    missing = tmp_path / "no-fixtures-here"
    code = main(["ingest", "--config", str(cfg), "--fixtures", str(missing), "--out", str(tmp_path)])
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_fixture_miss_exits_2(run, tmp_path, capsys):
    _, cfg = run
    code = main(["ingest", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path)])
    assert code == 2
    assert "no recorded fixture" in capsys.readouterr().err


def test_train_reports_six_rows(run):
    base, _ = run
    reports = read_report_csv(base / "out" / "reports" / "validation.csv")
    assert [r.model for r in reports] == ["svm", "logreg", "forest", "knn", "svm-opt", "knn-opt"]
    final = read_report_csv(base / "out" / "reports" / "report.csv")
    assert {r.split for r in final} == {"validation", "test"} and len(final) == 12
    for name in ("validation_metrics.svg", "test_metrics.svg", "confusion_test_forest.svg"):
        assert (base / "out" / "reports" / name).read_text().startswith("<?xml")
    assert (base / "out" / "pca" / "variance.svg").exists()


def test_report_matches_saved_predictions(run):
    base, _ = run
    for r in read_report_csv(base / "out" / "reports" / "validation.csv"):
        with (base / "out" / "predictions" / f"validation_{r.model}.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        cm = confusion([int(x["class"]) for x in rows], [int(x["hit"]) for x in rows])
        m = metrics(cm)
        assert r.confusion == cm
        assert (r.accuracy, r.precision, r.recall) == (m.accuracy, m.precision, m.recall)


def test_train_is_deterministic(run, tmp_path):
    base, cfg = run
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path), "--threads", "4",
                 "--set", f"paths.dataset={base / 'out' / 'tracks.csv'}"]) == 0
    ours = digest_tree(tmp_path / "models")
    assert ours == digest_tree(base / "out" / "models")
    assert len(ours) == 6


def test_predict_on_training_rows(run, tmp_path):
    base, _ = run
    out = tmp_path / "pred.csv"
    train_csv = base / "out" / "prepared" / "train.csv"
    model = base / "out" / "models" / "forest.json"
    assert main(["predict", "--model", str(model), "--input", str(train_csv), "--output", str(out)]) == 0
    with out.open() as fh:
        rows = list(csv.DictReader(fh))
    with train_csv.open() as fh:
        truth = list(csv.DictReader(fh))
    assert [r["id"] for r in rows] == [t["id"] for t in truth]
    probs = np.array([float(r["probability"]) for r in rows])
    assert np.all((probs >= 0) & (probs <= 1))
    labels = np.array([int(r["class"]) for r in rows])
    assert np.array_equal(labels, (probs > 0.5).astype(int))
    assert np.mean(labels == np.array([int(t["hit"]) for t in truth])) > 0.95


def test_predict_header_only(run, tmp_path):
    base, _ = run
    src = tmp_path / "empty.csv"
    src.write_text((base / "out" / "tracks.csv").read_text().splitlines()[0] + "\n")
    out = tmp_path / "p.csv"
    model = base / "out" / "models" / "svm.json"
    assert main(["predict", "--model", str(model), "--input", str(src), "--output", str(out)]) == 0
    assert out.read_text() == "id,class,probability\n"


def test_predict_names_missing_columns(run, tmp_path, capsys):
    base, _ = run
    src = tmp_path / "bad.csv"
    src.write_text("id,tempo,energy\nx,120,0.5\n")
    model = base / "out" / "models" / "knn.json"
    assert main(["predict", "--model", str(model), "--input", str(src), "--output",
                 str(tmp_path / "o.csv")]) == 1
    err = capsys.readouterr().err
    assert "explicit" in err and "popularity" in err


def test_predict_rejects_other_version(run, tmp_path, capsys):
    base, _ = run
    env = json.loads((base / "out" / "models" / "knn.json").read_text())
    env["version"] = 2
    (tmp_path / "m.json").write_text(json.dumps(env))
    code = main(["predict", "--model", str(tmp_path / "m.json"), "--input",
                 str(base / "out" / "tracks.csv"), "--output", str(tmp_path / "o.csv")])
    assert code == 1
    assert "version" in capsys.readouterr().err


def test_predict_missing_model_exits_2(tmp_path, capsys):
    code = main(["predict", "--model", str(tmp_path / "nope.json"), "--input", str(tmp_path / "x.csv")])
    assert code == 2
    assert "nope.json" in capsys.readouterr().err


def test_bad_config_values_exit_1(tmp_path, capsys):
    assert main(["prepare", "--set", "split.mode=loose", "--out", str(tmp_path)]) == 1
    assert "loose" in capsys.readouterr().err
    assert main(["prepare", "--set", "no.such.key=1"]) == 1
    assert "no.such.key" in capsys.readouterr().err


def test_flags_win_over_config_file(tmp_path):
    from hitpredict.cli import build_parser, resolve_config

    cfg = tmp_path / "c.cfg"
    cfg.write_text("seed = 3\nthreads = 2\npaths.out = a\n")
    args = build_parser().parse_args(["train", "--config", str(cfg), "--seed", "9",
                                      "--set", "models.knn.k=7"])
    c = resolve_config(args)
    assert (c["seed"], c["threads"], c["paths.out"], c["models.knn.k"]) == (9, 2, "a", 7)
    args = build_parser().parse_args(["--seed", "4", "--config", str(cfg), "train", "--threads", "6"])
    c = resolve_config(args)
    assert (c["seed"], c["threads"], c["paths.out"]) == (4, 6, "a")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hitpredict", "prepare", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "tracks.csv" in proc.stderr
