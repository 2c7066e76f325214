"""Reward models with explicit tuned/overfit configurations.

Two families are provided: ridge-regularized linear regression (closed-form
normal equations) and bagged CART regression trees grown on variance
reduction. A ``ModelPair`` couples a tuned estimator ``f`` with a
deliberately under-regularized estimator ``g``; their pointwise disagreement
is the uncertainty signal consumed by the scoring module.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, InvalidInput
from .seeding import mix_seed

CLIP_DEFAULT = (0.0, 1.0)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``X`` of shape (n, d) and targets ``y`` of shape (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise InvalidInput("X must be 2-D (rows, features)")
        if y.shape != (X.shape[0],):
            raise InvalidInput("y must be 1-D with one target per row")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.X[idx], self.y[idx])


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to fit one reward model deterministically.

    ``clip_range`` bounds predictions (reward models are probabilities, so
    the default is [0, 1]); pass ``None`` for unbounded regression output.
    ``max_depth=None`` means unlimited, ``0`` collapses the tree to a single
    leaf. Bagging resamples are seeded per tree as ``seed + tree_index``.
    """

    family: str = "linear_ridge"  # or "tree_ensemble"
    ridge_lambda: float = 1.0
    fit_intercept: bool = True
    n_trees: int = 10
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    bagging: bool = True
    feature_subsample: float = 1.0
    seed: int = 0
    clip_range: Optional[tuple] = CLIP_DEFAULT

    def __post_init__(self):
        if self.family not in ("linear_ridge", "tree_ensemble"):
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.ridge_lambda < 0:
            raise ConfigError("ridge_lambda must be >= 0")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be None or >= 0")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ConfigError("feature_subsample must be in (0, 1]")


def tuned_linear_config(ridge_lambda: float = 1.0, **kw) -> ModelConfig:
    return ModelConfig(family="linear_ridge", ridge_lambda=ridge_lambda, **kw)


def overfit_linear_config(ridge_lambda: float = 1e-8, **kw) -> ModelConfig:
    return ModelConfig(family="linear_ridge", ridge_lambda=ridge_lambda, **kw)


def tuned_tree_config(n_trees: int = 10, **kw) -> ModelConfig:
    """Bagged ensemble mirroring a stock 10-tree random forest."""
    return ModelConfig(family="tree_ensemble", n_trees=n_trees, bagging=True, **kw)


def overfit_tree_config(**kw) -> ModelConfig:
    """Single unbagged, unlimited-depth tree: the low-bias overfit recipe."""
    return ModelConfig(family="tree_ensemble", n_trees=1, bagging=False,
                       max_depth=None, min_samples_leaf=1, **kw)


class FittedModel:
    """Immutable prediction function learned from a LabeledDataset."""

    def __init__(self, config: Optional[ModelConfig], dim: int, train_count: int):
        self.config = config
        self.dim = dim
        self.train_count = train_count

    def predict(self, x) -> float:
        x = _check_vector(x, self.dim)
        return float(self.predict_many(x[None, :])[0])

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise InvalidInput(f"expected (n, {self.dim}) features, got {X.shape}")
        out = self._raw_predict(X)
        if self.config is not None and self.config.clip_range is not None:
            lo, hi = self.config.clip_range
            out = np.clip(out, lo, hi)
        return out

    def _raw_predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class LinearModel(FittedModel):
    def __init__(self, config, dim, train_count, weights, intercept):
        super().__init__(config, dim, train_count)
        self.weights = np.asarray(weights, dtype=float)
        self.intercept = float(intercept)

    def _raw_predict(self, X):
        return X @ self.weights + self.intercept


class TreeEnsembleModel(FittedModel):
    def __init__(self, config, dim, train_count, trees):
        super().__init__(config, dim, train_count)
        self.trees = trees

    def _raw_predict(self, X):
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += _predict_tree(tree, X)
        return acc / len(self.trees)


@dataclass(frozen=True)
class ModelPair:
    """Tuned estimator ``f`` and overfit estimator ``g`` over the same features."""

    f: FittedModel
    g: FittedModel
    split_mode: str  # "disjoint_split" or "shared_data"


def _check_vector(x, dim) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise InvalidInput(f"expected a feature vector of dim {dim}, got shape {x.shape}")
    return x


def _validated_xy(data: LabeledDataset):
    if data.n == 0:
        raise InvalidInput("cannot fit a model on an empty dataset")
    if not np.all(np.isfinite(data.X)):
        raise InvalidInput("features contain non-finite values")
    if not np.all(np.isfinite(data.y)):
        raise InvalidInput("targets contain non-finite values")
    return data.X, data.y


def fit_model(data: LabeledDataset, config: ModelConfig) -> FittedModel:
    """Dispatch to the fit routine for ``config.family``."""
    if config.family == "linear_ridge":
        return fit_linear(data, config)
    return fit_tree_ensemble(data, config)


def fit_linear(data: LabeledDataset, config: ModelConfig) -> LinearModel:
    """Closed-form ridge: solve (A'A + diag(penalty)) w = A'y.

    The intercept column is never penalized. Singular systems (e.g. a
    constant design with ``ridge_lambda=0``) fall back to the minimum-norm
    solution via least squares.
    """
    if config.family != "linear_ridge":
        raise ConfigError("fit_linear requires family='linear_ridge'")
    X, y = _validated_xy(data)
    n, d = X.shape
    if config.fit_intercept:
        A = np.hstack([np.ones((n, 1)), X])
        penalty = np.full(d + 1, config.ridge_lambda)
        penalty[0] = 0.0
    else:
        A = X
        penalty = np.full(d, config.ridge_lambda)
    M = A.T @ A + np.diag(penalty)
    rhs = A.T @ y
    w, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if config.fit_intercept:
        return LinearModel(config, d, n, w[1:], w[0])
    return LinearModel(config, d, n, w, 0.0)


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature = None
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = 0.0


def _best_split(X, y, min_leaf, features):
    """Best (variance-reduction, feature, midpoint threshold) or None.

    Ties break toward the lowest feature index, then the lowest threshold:
    features are scanned in ascending order and only a strictly larger
    reduction displaces the incumbent.
    """
    n = y.shape[0]
    total = y.sum()
    sse_parent = float(np.dot(y, y) - total * total / n)
    best = None
    for j in features:
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        cs = np.cumsum(ys)
        css = np.cumsum(ys * ys)
        left_n = np.arange(1, n)
        valid = (xs[1:] != xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        nl = left_n[valid]
        nr = n - nl
        sl = cs[nl - 1]
        sr = total - sl
        ssl = css[nl - 1]
        ssr = css[-1] - ssl
        sse = (ssl - sl * sl / nl) + (ssr - sr * sr / nr)
        reduction = sse_parent - sse
        k = int(np.argmax(reduction))  # first max -> lowest threshold
        if best is None or reduction[k] > best[0]:
            pos = nl[k]
            threshold = 0.5 * (xs[pos - 1] + xs[pos])
            best = (float(reduction[k]), int(j), float(threshold))
    return best


def _build_tree(X, y, config: ModelConfig, rng) -> _Node:
    d = X.shape[1]
    if config.feature_subsample >= 1.0:
        n_feats = d
    else:
        n_feats = max(1, int(np.ceil(config.feature_subsample * d)))
    min_leaf = config.min_samples_leaf
    root = _Node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        pure = ys.max() == ys.min()
        depth_hit = config.max_depth is not None and depth >= config.max_depth
        if pure or depth_hit or idx.shape[0] < 2 * min_leaf:
            node.value = float(ys.mean())
            continue
        if n_feats == d:
            feats = range(d)
        else:
            feats = np.sort(rng.choice(d, size=n_feats, replace=False))
        split = _best_split(X[idx], ys, min_leaf, feats)
        if split is None:
            node.value = float(ys.mean())
            continue
        _, node.feature, node.threshold = split
        mask = X[idx, node.feature] <= node.threshold
        node.left = _Node()
        node.right = _Node()
        stack.append((node.left, idx[mask], depth + 1))
        stack.append((node.right, idx[~mask], depth + 1))
    return root


def _predict_tree(root: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.shape[0] == 0:
            continue
        if node.feature is None:
            out[idx] = node.value
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def fit_tree_ensemble(data: LabeledDataset, config: ModelConfig) -> TreeEnsembleModel:
    """Grow ``n_trees`` CART regression trees on variance reduction.

    With bagging each tree sees a bootstrap resample seeded as
    ``seed + tree_index``; prediction is the mean of the tree outputs.
    """
    if config.family != "tree_ensemble":
        raise ConfigError("fit_tree_ensemble requires family='tree_ensemble'")
    X, y = _validated_xy(data)
    n = X.shape[0]
    trees = []
    for t in range(config.n_trees):
        rng = np.random.default_rng((int(config.seed) + t) % (1 << 64))
        if config.bagging:
            idx = rng.integers(0, n, size=n)
            trees.append(_build_tree(X[idx], y[idx], config, rng))
        else:
            trees.append(_build_tree(X, y, config, rng))
    return TreeEnsembleModel(config, X.shape[1], n, trees)


def split_disjoint(data: LabeledDataset, seed: int):
    """Seeded random split into two disjoint halves (sizes differ by <= 1)."""
    if data.n < 2:
        raise InvalidInput("need at least 2 rows to split")
    perm = np.random.default_rng(seed).permutation(data.n)
    k = (data.n + 1) // 2
    return data.subset(np.sort(perm[:k])), data.subset(np.sort(perm[k:]))


def _is_deeper(overfit: ModelConfig, tuned: ModelConfig) -> bool:
    if tuned.max_depth is None:
        return False
    return overfit.max_depth is None or overfit.max_depth > tuned.max_depth


def _require_less_regularized(tuned: ModelConfig, overfit: ModelConfig):
    if tuned.family != overfit.family:
        return  # deliberate cross-family pair; no comparison defined
    if tuned.family == "linear_ridge":
        if not overfit.ridge_lambda < tuned.ridge_lambda:
            raise ConfigError(
                "overfit config must be strictly less regularized: "
                f"ridge_lambda {overfit.ridge_lambda} >= {tuned.ridge_lambda}")
        return
    looser = ((tuned.bagging and not overfit.bagging)
              or _is_deeper(overfit, tuned)
              or overfit.min_samples_leaf < tuned.min_samples_leaf)
    if not looser:
        raise ConfigError(
            "overfit tree config must be strictly less regularized than the "
            "tuned config (deeper, unbagged, or smaller leaves)")


def fit_pair(data: LabeledDataset, tuned: ModelConfig, overfit: ModelConfig,
             split_mode: str = "disjoint_split", seed: int = 0) -> ModelPair:
    """Fit the tuned/overfit pair, on disjoint halves or on shared rows.

    The overfit config must be strictly less regularized than the tuned one;
    equal regularization is rejected because the disagreement signal would
    be meaningless.
    """
    _require_less_regularized(tuned, overfit)
    if split_mode == "disjoint_split":
        part_f, part_g = split_disjoint(data, mix_seed(seed, "pair-split"))
    elif split_mode == "shared_data":
        part_f = part_g = data
    else:
        raise ConfigError(f"unknown split_mode {split_mode!r}")
    f = fit_model(part_f, replace(tuned, seed=mix_seed(seed, "pair-f")))
    g = fit_model(part_g, replace(overfit, seed=mix_seed(seed, "pair-g")))
    return ModelPair(f=f, g=g, split_mode=split_mode)
