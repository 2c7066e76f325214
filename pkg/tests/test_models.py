import numpy as np
import pytest

from rome_bandits.errors import ConfigError, InvalidInput
from rome_bandits.models import (
    LabeledDataset,
    ModelConfig,
    fit_linear,
    fit_pair,
    fit_tree_ensemble,
    overfit_linear_config,
    overfit_tree_config,
    split_disjoint,
    tuned_linear_config,
    tuned_tree_config,
)


def _data(X, y):
    return LabeledDataset(np.asarray(X, dtype=float), np.asarray(y, dtype=float))


# -- fit_linear ---------------------------------------------------------------


def test_linear_constant_target():
    data = _data([[1.0]] * 10, [1.0] * 10)
    model = fit_linear(data, ModelConfig(family="linear_ridge", ridge_lambda=0.0))
    assert model.predict(np.array([1.0])) == pytest.approx(1.0)


def test_linear_exact_line_through_clusters():
    X = [[0.0]] * 50 + [[1.0]] * 50
    y = [0.0] * 50 + [1.0] * 50
    model = fit_linear(_data(X, y), ModelConfig(family="linear_ridge", ridge_lambda=0.0))
    assert model.predict(np.array([0.5])) == pytest.approx(0.5)


def test_linear_no_intercept_hand_normal_equations():
    # w = sum(x y) / (sum(x^2) + lambda) = 4 / (4 + 4) = 0.5
    data = _data([[1.0]] * 4, [1.0] * 4)
    cfg = ModelConfig(family="linear_ridge", ridge_lambda=4.0, fit_intercept=False)
    model = fit_linear(data, cfg)
    assert model.weights[0] == pytest.approx(0.5)
    assert model.predict(np.array([1.0])) == pytest.approx(0.5)
    # raw 0.5 * 2 = 1.0 sits exactly at the clip boundary
    assert model.predict(np.array([2.0])) == pytest.approx(1.0)


def test_linear_clips_to_unit_interval():
    data = _data([[0.0], [1.0]], [0.0, 1.0])
    model = fit_linear(data, ModelConfig(family="linear_ridge", ridge_lambda=0.0))
    assert model.predict(np.array([5.0])) == 1.0
    assert model.predict(np.array([-5.0])) == 0.0


def test_linear_rejects_bad_input():
    with pytest.raises(InvalidInput):
        fit_linear(_data(np.empty((0, 1)), []), ModelConfig(family="linear_ridge"))
    with pytest.raises(InvalidInput):
        fit_linear(_data([[np.nan]], [1.0]), ModelConfig(family="linear_ridge"))


def test_linear_ridge_consistency_recovers_weights():
    rng = np.random.default_rng(5)
    w = np.array([0.3, -0.2, 0.5])
    X = rng.uniform(-1, 1, size=(60, 3))
    y = 0.1 + X @ w
    cfg = ModelConfig(family="linear_ridge", ridge_lambda=0.0, clip_range=None)
    model = fit_linear(_data(X, y), cfg)
    assert np.allclose(model.weights, w, atol=1e-8)
    assert model.intercept == pytest.approx(0.1, abs=1e-8)


# -- fit_tree_ensemble --------------------------------------------------------


def test_tree_pure_node_predicts_constant():
    data = _data([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0])
    model = fit_tree_ensemble(data, overfit_tree_config())
    assert model.predict(np.array([7.0])) == 1.0


def test_tree_fits_xor_exactly():
    grid = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
    labels = [0.0, 1.0, 1.0, 0.0]
    X = np.array(grid * 25)
    y = np.array(labels * 25)
    cfg = ModelConfig(family="tree_ensemble", n_trees=1, bagging=False, max_depth=2)
    model = fit_tree_ensemble(_data(X, y), cfg)
    # brute-force oracle: the 4-point truth table itself
    preds = model.predict_many(np.array(grid))
    assert np.array_equal((preds > 0.5).astype(float), np.array(labels))


def test_tree_single_leaf_predicts_mean():
    data = _data([[0.0], [1.0], [2.0], [3.0]], [0.0, 0.0, 1.0, 1.0])
    cfg = ModelConfig(family="tree_ensemble", n_trees=1, bagging=False, max_depth=0)
    model = fit_tree_ensemble(data, cfg)
    assert model.predict(np.array([1.5])) == pytest.approx(0.5)


def test_tree_overfit_interpolates_training_rows():
    rng = np.random.default_rng(11)
    X = rng.uniform(-1, 1, size=(40, 3))
    y = rng.integers(0, 2, size=40).astype(float)
    model = fit_tree_ensemble(_data(X, y), overfit_tree_config())
    assert np.array_equal(model.predict_many(X), y)


def test_tree_empty_dataset_rejected():
    with pytest.raises(InvalidInput):
        fit_tree_ensemble(_data(np.empty((0, 2)), []), tuned_tree_config())


# -- predict ------------------------------------------------------------------


def test_predict_dimension_mismatch():
    data = _data([[0.0, 1.0]], [1.0])
    model = fit_linear(data, ModelConfig(family="linear_ridge"))
    with pytest.raises(InvalidInput):
        model.predict(np.array([1.0]))


def test_predict_deterministic_bit_identical():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(80, 4))
    y = (rng.uniform(size=80) > 0.5).astype(float)
    data = _data(X, y)
    for cfg in (tuned_tree_config(seed=9), tuned_linear_config(seed=9)):
        fit = fit_tree_ensemble if cfg.family == "tree_ensemble" else fit_linear
        a = fit(data, cfg).predict_many(X)
        b = fit(data, cfg).predict_many(X)
        assert np.array_equal(a, b)


# -- split_disjoint -----------------------------------------------------------


def test_split_twenty_rows_into_equal_halves():
    data = _data(np.arange(20)[:, None], np.zeros(20))
    a, b = split_disjoint(data, seed=1)
    assert a.n == 10 and b.n == 10
    merged = sorted(np.concatenate([a.X[:, 0], b.X[:, 0]]).tolist())
    assert merged == list(range(20))
    assert not set(a.X[:, 0]) & set(b.X[:, 0])


def test_split_two_rows():
    data = _data([[0.0], [1.0]], [0.0, 1.0])
    a, b = split_disjoint(data, seed=0)
    assert a.n == 1 and b.n == 1
    assert a.X[0, 0] != b.X[0, 0]


def test_split_determinism_and_seed_sensitivity():
    data = _data(np.arange(30)[:, None], np.zeros(30))
    a1, _ = split_disjoint(data, seed=4)
    a2, _ = split_disjoint(data, seed=4)
    a3, _ = split_disjoint(data, seed=5)
    assert np.array_equal(a1.X, a2.X)
    assert not np.array_equal(a1.X, a3.X)


def test_split_rejects_tiny_dataset():
    with pytest.raises(InvalidInput):
        split_disjoint(_data([[1.0]], [0.0]), seed=0)


# -- fit_pair -----------------------------------------------------------------


def test_pair_linear_configs_valid():
    data = _data(np.arange(10)[:, None] / 10.0, np.linspace(0, 1, 10))
    pair = fit_pair(data, tuned_linear_config(1.0), overfit_linear_config(1e-8))
    assert pair.f.train_count + pair.g.train_count == data.n
    assert pair.split_mode == "disjoint_split"


def test_pair_tree_configs_valid():
    rng = np.random.default_rng(0)
    data = _data(rng.uniform(size=(12, 2)), rng.integers(0, 2, 12).astype(float))
    tuned = ModelConfig(family="tree_ensemble", n_trees=10, max_depth=8, bagging=True)
    overfit = overfit_tree_config()
    pair = fit_pair(data, tuned, overfit, seed=3)
    assert pair.f.config.n_trees == 10
    assert pair.g.config.n_trees == 1


def test_pair_equal_regularization_rejected():
    data = _data([[0.0], [1.0]], [0.0, 1.0])
    with pytest.raises(ConfigError):
        fit_pair(data, tuned_linear_config(0.1), overfit_linear_config(0.1))
    with pytest.raises(ConfigError):
        fit_pair(data, tuned_tree_config(), tuned_tree_config())


def test_pair_shared_data_mode():
    data = _data(np.arange(6)[:, None], np.zeros(6))
    pair = fit_pair(data, tuned_linear_config(1.0), overfit_linear_config(),
                    split_mode="shared_data")
    assert pair.f.train_count == pair.g.train_count == 6


def test_unbiasedness_of_unregularized_linear_fit():
    # Over many redraws of a well-specified linear-Gaussian dataset, the mean
    # of g's prediction at fixed probes matches the truth within 3 standard
    # errors (supports the decomposition's unbiasedness precondition).
    rng = np.random.default_rng(21)
    w = np.array([0.15, -0.1])
    intercept = 0.5
    design = rng.uniform(-1, 1, size=(60, 2))
    h_design = intercept + design @ w
    probes = np.array([[0.5, 0.5], [-0.8, 0.2], [0.0, 0.0]])
    h_probes = intercept + probes @ w
    cfg = overfit_linear_config()
    n_draws = 5000
    preds = np.empty((n_draws, len(probes)))
    for i in range(n_draws):
        y = h_design + rng.normal(0, 0.1, size=60)
        preds[i] = fit_linear(LabeledDataset(design, y), cfg).predict_many(probes)
    se = preds.std(axis=0, ddof=1) / np.sqrt(n_draws)
    assert np.all(np.abs(preds.mean(axis=0) - h_probes) < 3 * se)
