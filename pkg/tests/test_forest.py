import json
import math

import numpy as np
import pytest

from mrlab.engine import ClusterConfig
from mrlab.errors import ParameterError
from mrlab.forest import (
    CLASSIFICATION,
    REGRESSION,
    ForestModel,
    ForestParams,
    TreeModel,
    fit_forest,
    poisson_counts,
    poisson_resample_map,
    predict_forest,
    train_tree_reduce,
)
from mrlab.rng import substream


def blobs(seed=0, n_per=1000, spread=0.6):
    rng = np.random.default_rng(seed)
    a = rng.normal((0.0, 0.0), spread, size=(n_per, 2))
    b = rng.normal((3.0, 3.0), spread, size=(n_per, 2))
    x = np.vstack([a, b])
    y = ["low"] * n_per + ["high"] * n_per
    return x, y


# -------------------------------------------------------------- parameters


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(trees=0, sample_size=1, mtry=1),
        dict(trees=1, sample_size=0, mtry=1),
        dict(trees=1, sample_size=1, mtry=0),
        dict(trees=1, sample_size=1, mtry=1, min_leaf=0),
        dict(trees=1, sample_size=1, mtry=1, max_depth=-1),
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ParameterError):
        ForestParams(**kwargs)


def test_mtry_larger_than_feature_count_rejected():
    x = np.zeros((5, 2))
    with pytest.raises(ParameterError):
        fit_forest(x, [0] * 5, ForestParams(trees=1, sample_size=5, mtry=3))


# ---------------------------------------------------------------- resample


def test_poisson_counts_deterministic():
    a = poisson_counts(7, 13, 5, 0.5)
    b = poisson_counts(7, 13, 5, 0.5)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0


def test_resample_map_emits_each_pair_count_times():
    params = ForestParams(trees=8, sample_size=40, mtry=1, seed=3)
    counts = poisson_counts(3, 5, 8, 40 / 20)
    pairs = poisson_resample_map(5, "rec", params, 20)
    emitted = {}
    for j, rec in pairs:
        assert rec == "rec"
        emitted[j] = emitted.get(j, 0) + 1
    assert emitted == {int(j): int(c) for j, c in enumerate(counts) if c > 0}


def test_per_tree_sample_size_concentrates_near_k():
    # sum of n Poisson(k/n) draws is Poisson(k)
    n, k = 2000, 100
    params = ForestParams(trees=1, sample_size=k, mtry=1, seed=11)
    total = sum(len(poisson_resample_map(i, None, params, n)) for i in range(n))
    assert abs(total - k) <= 3 * math.sqrt(k)


def test_never_sampled_fraction_tracks_poisson_zero_mass():
    n, m = 20_000, 1
    params = ForestParams(trees=m, sample_size=n, mtry=1, seed=5)  # rate 1
    never = sum(1 for i in range(n) if not poisson_resample_map(i, None, params, n))
    assert never / n == pytest.approx(math.exp(-1.0), abs=0.02)


# ------------------------------------------------------------ tree training


def test_pure_sample_gives_single_leaf():
    x = np.array([[0.0], [1.0], [2.0]])
    y = np.array([1.0, 1.0, 1.0])
    params = ForestParams(trees=1, sample_size=3, mtry=1)
    tree = train_tree_reduce(x, y, params, substream(0, 0), CLASSIFICATION, n_classes=2)
    assert tree.nodes == [{"class": 1}]


def test_two_point_split_lands_at_midpoint():
    x = np.array([[0.0], [1.0]])
    y = np.array([0.0, 1.0])
    params = ForestParams(trees=1, sample_size=2, mtry=1)
    tree = train_tree_reduce(x, y, params, substream(0, 0), CLASSIFICATION, n_classes=2)
    root = tree.nodes[0]
    assert root["feature"] == 0
    assert root["threshold"] == 0.5
    assert tree.predict([0.2]) == 0
    assert tree.predict([0.8]) == 1


def oracle_best_split(x, y, min_leaf, task, n_classes):
    """Exhaustive search over all features and midpoints, direct counting."""
    n = len(y)
    best = None
    for f in range(x.shape[1]):
        values = np.unique(x[:, f])
        for lo, hi in zip(values[:-1], values[1:]):
            t = (lo + hi) / 2.0
            left = y[x[:, f] <= t]
            right = y[x[:, f] > t]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            if task == CLASSIFICATION:
                def gini(sub):
                    fracs = np.bincount(sub.astype(np.int64), minlength=n_classes) / len(sub)
                    return 1.0 - np.sum(fracs**2)
                score = len(left) / n * gini(left) + len(right) / n * gini(right)
            else:
                def var(sub):
                    return np.sum(sub * sub) / len(sub) - (np.sum(sub) / len(sub)) ** 2
                score = len(left) / n * var(left) + len(right) / n * var(right)
            if best is None or score < best[0]:
                best = (float(score), f, float(t))
    return best


@pytest.mark.parametrize("seed", range(6))
def test_root_split_matches_exhaustive_oracle_classification(seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 6, size=(40, 3)).astype(float)  # discrete grid: plenty of ties
    y = rng.integers(0, 3, size=40).astype(float)
    params = ForestParams(trees=1, sample_size=40, mtry=3, max_depth=1, seed=seed)
    tree = train_tree_reduce(x, y, params, substream(seed, 0), CLASSIFICATION, n_classes=3)
    expected = oracle_best_split(x, y, 1, CLASSIFICATION, 3)
    root = tree.nodes[0]
    assert (root["feature"], root["threshold"]) == (expected[1], expected[2])


@pytest.mark.parametrize("seed", range(6))
def test_root_split_matches_exhaustive_oracle_regression(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.integers(0, 5, size=(30, 2)).astype(float)
    y = rng.integers(-10, 10, size=30).astype(float)  # integer labels: exact sums
    if np.all(y == y[0]):
        y[0] += 1.0
    params = ForestParams(trees=1, sample_size=30, mtry=2, max_depth=1, seed=seed)
    tree = train_tree_reduce(x, y, params, substream(seed, 1), REGRESSION)
    expected = oracle_best_split(x, y, 1, REGRESSION, 0)
    root = tree.nodes[0]
    if expected is None:
        assert "value" in root
    else:
        assert (root["feature"], root["threshold"]) == (expected[1], expected[2])


def test_max_depth_bounds_tree():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(200, 3))
    y = (x[:, 0] + x[:, 1] > 0).astype(float)
    params = ForestParams(trees=1, sample_size=200, mtry=3, max_depth=2)
    tree = train_tree_reduce(x, y, params, substream(1, 0), CLASSIFICATION, n_classes=2)
    assert tree.depth() <= 2


def test_min_leaf_respected_by_every_split():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(80, 2))
    y = (x[:, 0] > 0).astype(float)
    params = ForestParams(trees=1, sample_size=80, mtry=2, min_leaf=7)
    tree = train_tree_reduce(x, y, params, substream(2, 0), CLASSIFICATION, n_classes=2)

    def leaf_sizes(node_id, rows):
        node = tree.nodes[node_id]
        if "feature" not in node:
            return [len(rows)]
        mask = x[rows, node["feature"]] <= node["threshold"]
        return leaf_sizes(node["left"], rows[mask]) + leaf_sizes(node["right"], rows[~mask])

    assert min(leaf_sizes(0, np.arange(80))) >= 7


def test_empty_sample_rejected():
    params = ForestParams(trees=1, sample_size=1, mtry=1)
    with pytest.raises(ParameterError):
        train_tree_reduce(np.zeros((0, 1)), np.zeros(0), params, substream(0, 0), REGRESSION)


# ------------------------------------------------------------------- forest


def test_forest_separates_blobs():
    x, y = blobs(seed=3)
    params = ForestParams(trees=10, sample_size=500, mtry=2, seed=7)
    model, stats = fit_forest(x, y, params)
    predictions = [predict_forest(model, row) for row in x]
    accuracy = np.mean([p == t for p, t in zip(predictions, y)])
    assert accuracy >= 0.95
    assert len(model.trees) == 10
    assert stats.iterations == 1  # a single MR round


def test_forest_deterministic_serialization():
    x, y = blobs(seed=4, n_per=150)
    params = ForestParams(trees=5, sample_size=100, mtry=1, seed=21)
    m1, _ = fit_forest(x, y, params)
    m2, _ = fit_forest(x, y, params)
    assert m1.to_json() == m2.to_json()


def test_forest_split_layout_invariant():
    x, y = blobs(seed=5, n_per=100)
    params = ForestParams(trees=4, sample_size=80, mtry=2, seed=2)
    base, _ = fit_forest(x, y, params, config=ClusterConfig(num_splits=1))
    for splits in (2, 8):
        model, _ = fit_forest(x, y, params, config=ClusterConfig(num_splits=splits))
        assert model.to_json() == base.to_json()


@pytest.mark.parametrize("k", [20, 200, 800])
def test_three_resampling_regimes_all_train(k):
    # k*m below, near and above n all go through the same code path
    x, y = blobs(seed=6, n_per=100)
    params = ForestParams(trees=3, sample_size=k, mtry=1, seed=1)
    model, _ = fit_forest(x, y, params)
    assert len(model.trees) == 3


def test_degenerate_trees_flagged_and_vote_majority():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(40, 1))
    y = [0] * 25 + [1] * 15  # majority class 0
    params = ForestParams(trees=30, sample_size=1, mtry=1, seed=13)  # rate 1/40
    model, _ = fit_forest(x, y, params)
    degenerate = [t for t in model.trees if t.degenerate]
    assert degenerate  # with rate 0.025 most trees see no records
    assert all(t.nodes == [{"class": 0}] for t in degenerate)


def test_regression_forest_predicts_mean_of_trees():
    leaf = lambda v: TreeModel(nodes=[{"value": v}])
    model = ForestModel([leaf(1.0), leaf(2.0), leaf(4.0)], REGRESSION)
    assert predict_forest(model, [0.0]) == pytest.approx(7.0 / 3.0)


def test_majority_vote_and_tie_rule():
    leaf = lambda c: TreeModel(nodes=[{"class": c}])
    model = ForestModel([leaf(0), leaf(1), leaf(1)], CLASSIFICATION, classes=["a", "b"])
    assert predict_forest(model, [0.0]) == "b"
    tied = ForestModel([leaf(0), leaf(1)], CLASSIFICATION, classes=["a", "b"])
    assert predict_forest(tied, [0.0]) == "a"  # tie -> smallest class index


def test_all_identical_trees_match_single_tree():
    x, y = blobs(seed=9, n_per=60)
    params = ForestParams(trees=1, sample_size=60, mtry=2, seed=5)
    single, _ = fit_forest(x, y, params)
    cloned = ForestModel(single.trees * 5, CLASSIFICATION, classes=single.classes)
    for row in x[:20]:
        assert predict_forest(cloned, row) == predict_forest(single, row)


def test_model_json_roundtrip():
    x, y = blobs(seed=10, n_per=80)
    params = ForestParams(trees=3, sample_size=60, mtry=1, seed=17)
    model, _ = fit_forest(x, y, params)
    restored = ForestModel.from_json(model.to_json())
    assert restored.task == model.task
    assert restored.classes == model.classes
    assert json.loads(restored.to_json()) == json.loads(model.to_json())
    for row in x[:10]:
        assert predict_forest(restored, row) == predict_forest(model, row)
