import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitpredict.config import SCHEMA, RunConfig, parse_value
from hitpredict.errors import ParameterError


def test_defaults_match_documented_values():
    c = RunConfig()
    assert c["seed"] == 0 and c["split.train_fraction"] == 0.7 and c["pca.threshold"] == 0.98
    assert c["models"] == ["svm", "logreg", "forest", "knn"] and c["opt"] == ["svm", "knn"]
    assert c["models.knn.k"] == 25 and c["models.svm.C"] == 10.0
    assert c["ingest.years"] == list(range(2011, 2022))
    assert c.grid("svm") == {"clf__C": [1.0, 10.0, 100.0], "clf__gamma": [0.01, "auto", 0.1, 1]}
    assert c.dataset.as_posix() == "out/tracks.csv"


def test_dumps_loads_round_trip():
    c = RunConfig()
    assert RunConfig.loads(c.dumps()) == c
    changed = c.override({"seed": "7", "models.forest.max_depth": "4", "ingest.years": "2015,2017",
                          "grid.knn.k": "3,9", "paths.dataset": "data/x.csv", "pca.base": "true"})
    assert RunConfig.loads(changed.dumps()) == changed
    assert changed["ingest.years"] == [2015, 2017] and changed["models.forest.max_depth"] == 4


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 0.95), st.integers(1, 64),
       st.lists(st.integers(1, 99), min_size=1, max_size=5))
def test_round_trip_property(seed, fraction, threads, ks):
    c = RunConfig().override({"seed": str(seed), "split.train_fraction": repr(fraction),
                              "threads": str(threads), "grid.knn.k": ",".join(map(str, ks))})
    assert RunConfig.loads(c.dumps()) == c


def test_comments_and_errors():
    c = RunConfig.loads("# run\nseed = 3  # inline\n\nmodels.svm.C=1.5\n")
    assert c["seed"] == 3 and c["models.svm.C"] == 1.5
    with pytest.raises(ParameterError, match="unknown"):
        RunConfig.loads("models.svm.c = 1\n")
    with pytest.raises(ParameterError, match="line 1"):
        RunConfig.loads("seed 3\n")
    with pytest.raises(ParameterError, match="seed"):
        parse_value("seed", "three")


def test_every_default_survives_its_own_parser():
    for key, (_, default) in SCHEMA.items():
        c = RunConfig()
        assert RunConfig.loads(f"{key} = {c.dumps().split(key + ' = ', 1)[1].splitlines()[0]}\n")[key] == default
