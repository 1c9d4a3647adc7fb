import json
import math
import pathlib

import numpy as np
import pytest

import ascf

DATA = pathlib.Path(__file__).resolve().parents[2] / "data"


def test_utilities():
    assert ascf.asymmetry_b(49) == 0.5 + 1 / 98
    assert ascf.s_ascf_utility(0.5, 0.5) == pytest.approx(1.0)
    assert ascf.s_ascf_utility(0.3, 1.0) == pytest.approx(0.3)
    with pytest.raises(ascf.AscfError):
        ascf.s_ascf_utility(1.5, 0.7)


def test_linear_and_ensemble():
    z = np.array([[0.0], [1.0]])
    x = np.array([[1.0], [3.0]])
    model = ascf.fit_linear(z, x)
    assert model.weights[0, 0] == pytest.approx(2.0)
    assert model.intercepts[0] == pytest.approx(1.0)
    assert model.predict(np.array([[2.0]]))[0, 0] == pytest.approx(5.0)

    rng = np.random.default_rng(1)
    z = rng.normal(size=(20, 2))
    x = z @ np.array([[1.0, 0.5], [-2.0, 0.0]]) + rng.normal(scale=0.1, size=(20, 2))
    ens = ascf.fit_bootstrap_ensemble(z, x, B=10, seed=3)
    assert len(ens) == 10
    u = ascf.u_ascf_utility(ens, z[0])
    preds = np.array([m.predict(z[:1])[0] for m in ens.members])
    assert u == pytest.approx(preds.var(axis=0).mean(), abs=1e-12)


def test_logistic():
    x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    clf = ascf.fit_logistic(x, [0, 0, 1, 1])
    assert clf.converged
    assert list(clf.predict(x)) == [0, 0, 1, 1]
    p = clf.posterior(np.array([[0.0]]))
    assert p[0] == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ascf.AscfError):
        ascf.fit_logistic(x, [1, 1, 1, 1])


def test_stats():
    assert ascf.f1_score([1, 1, 0, 0], [1, 0, 1, 0]) == 0.5
    assert ascf.wilcoxon_signed_rank([1, 2, 3, 4, 5], "greater") == 1 / 32
    assert ascf.wilcoxon_signed_rank([0, 0, 0], "less") == 1.0
    assert ascf.percentile([1, 2, 3, 4], 0.1) == pytest.approx(1.3)


def test_splits_are_stratified():
    y = [1] * 5 + [0] * 5
    folds = ascf.make_splits(y, 2, 5, 7)
    assert len(folds) == 10
    for train, test in folds:
        assert sorted([y[i] for i in test]) == [0, 1]
        assert not set(train) & set(test)


def test_benchmark_on_wine():
    ds = ascf.load_dataset(DATA / "wine.csv", DATA / "manifests" / "wine.json")
    assert len(ds) == 178
    runs = ascf.run_benchmark(ds, ["s-ascf"], repeats=1, k=5, seed=5, max_steps=12)
    assert list(runs) == ["random", "s-ascf"]
    for a, b in zip(runs["random"], runs["s-ascf"]):
        assert len(a.f1) == len(b.f1) == 12
        assert a.acquired_ids[:2] == b.acquired_ids[:2]
    rows = ascf.aggregate_and_compare(runs)
    assert {r["strategy"] for r in rows} == {"random", "s-ascf"}
    assert all(0.0 <= r["p10"] <= r["p90"] <= 1.0 for r in rows)


def test_session_roundtrip(tmp_path):
    csv = tmp_path / "c.csv"
    csv.write_text("id,a,lab\nc1,0.1,0\nc2,0.9,1\nc3,0.5,0\n")
    manifest = {"id": "id", "selection": ["a"], "classification": ["x1"], "label": "lab"}
    s = ascf.Session.init(csv, manifest, "s-ascf", 1)
    s.record("c1", [0.2])
    s.record("c2", [1.1])
    sug = s.suggest()
    assert sug["mode"] == "utility" and sug["ids"] == ["c3"]
    path = tmp_path / "state.json"
    s.save(path)
    again = ascf.Session.load(path)
    assert again.acquired == ["c1", "c2"]
    assert json.loads(path.read_text())["schema_version"] == 1
    with pytest.raises(ascf.AscfError):
        again.record("nope", [0.0])
