import numpy as np
import pytest

from mbbminer import ForestParams, dump_model, fit, load_model, predict_quantile
from mbbminer.errors import InsufficientData, NoUsableFeatures, UnfittedModel
from mbbminer.merge import Instance
from mbbminer.qrf import QrfModel, predict_quantiles


def make_instances(xs, ys, name="x"):
    return [Instance(i, "n", "i", {name: float(x), "y": float(y)})
            for i, (x, y) in enumerate(zip(xs, ys))]


def test_single_leaf_recovers_empirical_quantiles():
    """One unsplit, un-bootstrapped tree is the plain empirical quantile."""
    rng = np.random.default_rng(0)
    y = rng.normal(0, 1, 40)
    instances = make_instances(np.zeros(40), y)
    params = ForestParams(n_trees=1, max_depth=0, bootstrap=False, seed=1)
    model = fit(instances, "y", ["x"], params)
    ys = np.sort(y)
    for q in (0.1, 0.25, 0.5, 0.9):
        want = ys[min(int(np.ceil(q * 40)) - 1, 39)]
        assert predict_quantile(model, {"x": 0.0}, q) == want


def test_forest_learns_conditional_split():
    """Two clearly separated regimes give two different medians."""
    xs = np.concatenate([np.zeros(50), np.ones(50)])
    ys = np.concatenate([np.full(50, 10.0), np.full(50, 100.0)])
    model = fit(make_instances(xs, ys), "y", ["x"],
                ForestParams(n_trees=20, seed=2))
    assert predict_quantile(model, {"x": 0.0}, 0.5) == 10.0
    assert predict_quantile(model, {"x": 1.0}, 0.5) == 100.0


def test_categorical_split():
    modes = ["a"] * 50 + ["b"] * 50
    ys = [10.0] * 50 + [100.0] * 50
    instances = [Instance(i, "n", "i", {"m": m, "y": y})
                 for i, (m, y) in enumerate(zip(modes, ys))]
    model = fit(instances, "y", ["m"], ForestParams(n_trees=20, seed=3))
    assert predict_quantile(model, {"m": "a"}, 0.5) == 10.0
    assert predict_quantile(model, {"m": "b"}, 0.5) == 100.0


def test_null_context_follows_majority():
    xs = np.concatenate([np.zeros(90), np.ones(10)])
    ys = np.concatenate([np.full(90, 10.0), np.full(10, 100.0)])
    instances = make_instances(xs, ys)
    model = fit(instances, "y", ["x"], ForestParams(n_trees=10, seed=4))
    # a null query routes with the majority (x=0) side at every split
    assert predict_quantile(model, {"x": None}, 0.5) == 10.0


def test_null_targets_dropped():
    instances = make_instances(np.arange(20.0), np.arange(20.0))
    instances += [Instance(99, "n", "i", {"x": 1.0, "y": None})] * 5
    model = fit(instances, "y", ["x"], ForestParams(n_trees=5, seed=5))
    assert len(model.targets) == 20


def test_weights_sum_to_one():
    rng = np.random.default_rng(6)
    model = fit(make_instances(rng.normal(size=60), rng.normal(size=60)),
                "y", ["x"], ForestParams(n_trees=15, seed=6))
    for _ in range(20):
        w = model.weights({"x": float(rng.normal())})
        assert w.sum() == pytest.approx(1.0)
        assert (w >= 0).all()


def test_monotone_in_q():
    rng = np.random.default_rng(7)
    xs = rng.uniform(0, 10, 300)
    ys = xs * 3 + rng.normal(0, 1, 300)
    model = fit(make_instances(xs, ys), "y", ["x"], ForestParams(n_trees=25, seed=7))
    qs = np.linspace(0.05, 0.95, 10)
    for x in rng.uniform(0, 10, 50):
        preds = [predict_quantile(model, {"x": float(x)}, q) for q in qs]
        assert all(a <= b for a, b in zip(preds, preds[1:]))


def test_determinism_under_seed():
    rng = np.random.default_rng(8)
    xs, ys = rng.uniform(0, 5, 80), rng.normal(0, 1, 80)
    a = fit(make_instances(xs, ys), "y", ["x"], ForestParams(n_trees=10, seed=42))
    b = fit(make_instances(xs, ys), "y", ["x"], ForestParams(n_trees=10, seed=42))
    grid = [{"x": float(v)} for v in np.linspace(0, 5, 30)]
    assert predict_quantiles(a, grid, 0.9).tolist() == \
        predict_quantiles(b, grid, 0.9).tolist()


def test_model_roundtrip():
    rng = np.random.default_rng(9)
    xs, ys = rng.uniform(0, 5, 80), rng.normal(0, 1, 80)
    modes = ["a" if v < 2.5 else "b" for v in xs]
    instances = [Instance(i, "n", "i", {"x": float(x), "m": m, "y": float(y)})
                 for i, (x, m, y) in enumerate(zip(xs, modes, ys))]
    model = fit(instances, "y", ["x", "m"], ForestParams(n_trees=8, seed=10))
    back = load_model(dump_model(model))
    grid = [{"x": float(v), "m": "a" if v < 2.5 else "b"}
            for v in np.linspace(0, 5, 40)]
    for q in (0.1, 0.5, 0.9):
        assert predict_quantiles(back, grid, q).tolist() == \
            predict_quantiles(model, grid, q).tolist()


def test_error_paths():
    with pytest.raises(InsufficientData):
        fit(make_instances([1.0], [1.0]), "y", ["x"], ForestParams())
    instances = make_instances(np.arange(20.0), np.arange(20.0))
    with pytest.raises(NoUsableFeatures):
        fit(instances, "y", [], ForestParams())
    nulls = [Instance(i, "n", "i", {"x": None, "y": float(i)}) for i in range(20)]
    with pytest.raises(NoUsableFeatures):
        fit(nulls, "y", ["x"], ForestParams())
    empty = QrfModel(params=ForestParams(), context=("x",), kinds={"x": "numeric"},
                     targets=np.array([1.0]))
    with pytest.raises(UnfittedModel):
        empty.weights({"x": 1.0})
    model = fit(instances and make_instances(np.arange(20.0), np.arange(20.0)),
                "y", ["x"], ForestParams(n_trees=2))
    with pytest.raises(ValueError):
        predict_quantile(model, {"x": 0.0}, 1.5)


def test_min_leaf_respected():
    rng = np.random.default_rng(11)
    model = fit(make_instances(rng.uniform(size=100), rng.normal(size=100)),
                "y", ["x"], ForestParams(n_trees=10, min_leaf=7, seed=12,
                                         bootstrap=False))
    for tree in model.trees:
        for leaf in tree.leaf_indices:
            if leaf is not None:
                assert len(leaf) >= 7
