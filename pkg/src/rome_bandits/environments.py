"""Bandit environments and data ingestion.

Classification datasets become bandits by paying reward 1 exactly when the
chosen action equals the true class. A depleting recommendation environment
pays each positive (user, item) pair at most once. Loaders cover the
Covertype, Bach-chorales and MovieLens file formats; synthetic generators
provide download-free environments and the 1-D toy regression designs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput, ParseError, ProtocolError
from .models import LabeledDataset
from .seeding import mix_seed


class ClassificationEnv:
    """Instances in a seeded random order; one reward query per step.

    ``next_step`` returns ``(context, mask)`` with ``mask=None`` meaning all
    actions are eligible, or ``None`` once the stream is exhausted. Each
    step must be resolved by exactly one ``reward`` call.
    """

    def __init__(self, features, labels, n_actions: int, seed: int = 0,
                 row_cap: Optional[int] = None):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=int)
        if features.ndim != 2 or features.shape[0] != labels.shape[0]:
            raise InvalidInput("features must be (n, d) with one label per row")
        if features.shape[0] == 0:
            raise InvalidInput("environment needs at least one instance")
        if labels.min() < 0 or labels.max() >= n_actions:
            raise InvalidInput("labels must lie in [0, n_actions)")
        self._features = features
        self._labels = labels
        self.n_actions = int(n_actions)
        order = np.random.default_rng(mix_seed(seed, "order")).permutation(
            features.shape[0])
        if row_cap is not None:
            order = order[:row_cap]
        self._order = order
        self._cursor = 0
        self._pending: Optional[int] = None

    @property
    def dim(self) -> int:
        return self._features.shape[1]

    @property
    def n_instances(self) -> int:
        return self._features.shape[0]

    @property
    def n_steps(self) -> int:
        return self._order.shape[0]

    def next_step(self):
        if self._pending is not None:
            raise ProtocolError("previous step has not been rewarded")
        if self._cursor >= self._order.shape[0]:
            return None
        self._pending = int(self._order[self._cursor])
        self._cursor += 1
        return self._features[self._pending], None

    def reward(self, action: int) -> int:
        if self._pending is None:
            raise ProtocolError("reward called with no pending step")
        if not 0 <= action < self.n_actions:
            raise InvalidInput(f"action {action} out of range")
        label = self._labels[self._pending]
        self._pending = None
        return int(action == label)


class DepletingEnv:
    """Cold-start recommendation with depleting rewards.

    Actions are the cold-start items. A positive (user, item) pair pays 1 the
    first time it is played and 0 afterwards; non-positive pairs always pay
    0. Every reward event is appended to ``reward_log`` so runs can be
    audited exhaustively.
    """

    def __init__(self, contexts, positives, n_cold_items: int,
                 passes: int = 10, seed: int = 0):
        contexts = np.asarray(contexts, dtype=float)
        if contexts.ndim != 2 or contexts.shape[0] == 0:
            raise InvalidInput("contexts must be a non-empty (users, dim) matrix")
        if n_cold_items < 2:
            raise InvalidInput("need at least 2 cold-start items")
        self._contexts = contexts
        self.n_actions = int(n_cold_items)
        self.positives = frozenset(positives)
        n_users = contexts.shape[0]
        schedule = []
        for p in range(passes):
            rng = np.random.default_rng(mix_seed(seed, "pass", p))
            schedule.append(rng.permutation(n_users))
        self._schedule = np.concatenate(schedule) if schedule else np.empty(0, int)
        self._cursor = 0
        self._pending: Optional[int] = None
        self._depleted = set()
        self.reward_log = []  # (user, action, reward) triples

    @property
    def dim(self) -> int:
        return self._contexts.shape[1]

    @property
    def n_steps(self) -> int:
        return self._schedule.shape[0]

    def next_step(self):
        if self._pending is not None:
            raise ProtocolError("previous step has not been rewarded")
        if self._cursor >= self._schedule.shape[0]:
            return None
        self._pending = int(self._schedule[self._cursor])
        self._cursor += 1
        return self._contexts[self._pending], None

    def reward(self, action: int) -> int:
        if self._pending is None:
            raise ProtocolError("reward called with no pending step")
        if not 0 <= action < self.n_actions:
            raise InvalidInput(f"action {action} out of range")
        user = self._pending
        self._pending = None
        pair = (user, action)
        r = 0
        if pair in self.positives and pair not in self._depleted:
            r = 1
            self._depleted.add(pair)
        self.reward_log.append((user, action, r))
        return r


# -- file loaders -----------------------------------------------------------


def _read_csv_rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            yield lineno, row


def load_covertype(path, row_cap: Optional[int] = None, seed: int = 0) -> ClassificationEnv:
    """Headerless CSV with 54 numeric attributes and a class column in 1..7."""
    features, labels = [], []
    for lineno, row in _read_csv_rows(path):
        if len(row) != 55:
            raise ParseError(f"expected 55 columns, got {len(row)}", lineno)
        try:
            features.append([float(v) for v in row[:54]])
            cls = int(row[54])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not 1 <= cls <= 7:
            raise ParseError(f"class {cls} outside 1..7", lineno)
        labels.append(cls - 1)
    if not features:
        raise ParseError("file contains no data rows", None)
    return ClassificationEnv(np.array(features), np.array(labels), n_actions=7,
                             seed=seed, row_cap=row_cap)


class CategoricalEncoder:
    """One-hot encoding with a fixed vocabulary per column.

    Categories unseen at build time map to an all-zeros slot for their
    column instead of failing.
    """

    def __init__(self, columns):
        self.columns = [sorted(set(col)) for col in columns]
        self.offsets = np.cumsum([0] + [len(c) for c in self.columns])
        self.width = int(self.offsets[-1])
        self._index = [
            {v: i for i, v in enumerate(col)} for col in self.columns
        ]

    def encode(self, row) -> np.ndarray:
        out = np.zeros(self.width)
        for j, value in enumerate(row):
            slot = self._index[j].get(value)
            if slot is not None:
                out[self.offsets[j] + slot] = 1.0
        return out


def load_chorales(path, row_cap: Optional[int] = None, seed: int = 0) -> ClassificationEnv:
    """CSV of categorical feature columns with the event class in the final
    column. Features are one-hot encoded; the action set is fixed up front
    from every label in the file."""
    rows, labels_raw = [], []
    width = None
    for lineno, row in _read_csv_rows(path):
        if width is None:
            width = len(row)
            if width < 2:
                raise ParseError("need at least one feature column and a label", lineno)
        elif len(row) != width:
            raise ParseError(f"expected {width} columns, got {len(row)}", lineno)
        rows.append([v.strip() for v in row[:-1]])
        labels_raw.append(row[-1].strip())
    if not rows:
        raise ParseError("file contains no data rows", None)
    encoder = CategoricalEncoder(list(zip(*rows)))
    classes = sorted(set(labels_raw))
    class_index = {c: i for i, c in enumerate(classes)}
    features = np.array([encoder.encode(r) for r in rows])
    labels = np.array([class_index[c] for c in labels_raw])
    env = ClassificationEnv(features, labels, n_actions=len(classes),
                            seed=seed, row_cap=row_cap)
    env.encoder = encoder
    env.classes = classes
    return env


def _sparse_projection(n_in: int, n_out: int, seed: int) -> np.ndarray:
    """Achlioptas-style sparse random projection matrix (n_in, n_out)."""
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, 6, size=(n_in, n_out))
    signs = np.where(draws == 0, 1.0, np.where(draws == 1, -1.0, 0.0))
    return signs * np.sqrt(3.0 / n_out)


def depleting_from_interactions(interactions, seed: int = 0, context_dim: int = 64,
                                passes: int = 10, positive_threshold: float = 4.0) -> DepletingEnv:
    """Build a DepletingEnv from (user, item, rating) triples.

    Items split 50/50 into existing and cold-start groups. A user's context
    is the indicator of their positive interactions over existing items,
    reduced by a seeded sparse random projection.
    """
    if not interactions:
        raise InvalidInput("no interactions provided")
    users = sorted({u for u, _, _ in interactions})
    items = sorted({i for _, i, _ in interactions})
    if len(items) < 4:
        raise InvalidInput("need at least 4 distinct items to split")
    user_index = {u: i for i, u in enumerate(users)}
    perm = np.random.default_rng(mix_seed(seed, "items")).permutation(len(items))
    n_cold = (len(items) + 1) // 2
    cold = [items[i] for i in sorted(perm[:n_cold])]
    existing = [items[i] for i in sorted(perm[n_cold:])]
    cold_index = {it: i for i, it in enumerate(cold)}
    existing_index = {it: i for i, it in enumerate(existing)}

    indicator = np.zeros((len(users), len(existing)))
    positives = set()
    for u, it, rating in interactions:
        if rating < positive_threshold:
            continue
        ui = user_index[u]
        if it in existing_index:
            indicator[ui, existing_index[it]] = 1.0
        else:
            positives.add((ui, cold_index[it]))
    projection = _sparse_projection(len(existing), context_dim, mix_seed(seed, "proj"))
    contexts = indicator @ projection
    env = DepletingEnv(contexts, positives, n_cold_items=len(cold),
                       passes=passes, seed=seed)
    env.existing_items = existing
    env.cold_items = cold
    return env


def load_movielens_depleting(path, seed: int = 0, context_dim: int = 64,
                             passes: int = 10, positive_threshold: float = 4.0,
                             row_cap: Optional[int] = None) -> DepletingEnv:
    """Ratings CSV with header ``userId,movieId,rating,timestamp``."""
    interactions = []
    header_seen = False
    for lineno, row in _read_csv_rows(path):
        if not header_seen:
            header_seen = True
            if [c.strip() for c in row[:3]] != ["userId", "movieId", "rating"]:
                raise ParseError("expected header userId,movieId,rating,timestamp", lineno)
            continue
        if len(row) < 3:
            raise ParseError(f"expected at least 3 columns, got {len(row)}", lineno)
        try:
            interactions.append((int(row[0]), int(row[1]), float(row[2])))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    if not interactions:
        raise ParseError("file contains no ratings", None)
    if row_cap is not None and row_cap < len(interactions):
        order = np.random.default_rng(mix_seed(seed, "rows")).permutation(len(interactions))
        interactions = [interactions[i] for i in sorted(order[:row_cap])]
    return depleting_from_interactions(interactions, seed=seed, context_dim=context_dim,
                                       passes=passes, positive_threshold=positive_threshold)


def gen_depleting_synthetic(n_users: int = 40, n_items: int = 60,
                            positive_density: float = 0.15, seed: int = 0,
                            context_dim: int = 16, passes: int = 10) -> DepletingEnv:
    """Random interaction matrix shaped like a small MovieLens extract."""
    rng = np.random.default_rng(mix_seed(seed, "interactions"))
    interactions = []
    for u in range(1, n_users + 1):
        for it in range(1, n_items + 1):
            draw = rng.random()
            if draw < positive_density:
                interactions.append((u, it, 5.0))
            elif draw < 1.5 * positive_density:
                interactions.append((u, it, 2.0))  # observed but not positive
    return depleting_from_interactions(interactions, seed=seed,
                                       context_dim=context_dim, passes=passes)


# -- synthetic regression designs -------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """A 1-D (or linear multi-D) ground-truth function plus a design.

    ``kind="sine"`` uses h(x) = sin(3x); ``kind="linear"`` uses
    h(x) = intercept + coef . x. The design is either explicit ``sites``
    (each repeated ``n_per_site`` times) or ``n_samples`` uniform draws on
    [low, high]^dim. ``noise_sd`` may be a scalar or one value per site.
    """

    kind: str = "sine"
    sites: Optional[tuple] = None
    n_per_site: int = 100
    n_samples: int = 0
    low: float = -1.0
    high: float = 1.0
    noise_sd: object = 0.25
    dim: int = 1
    coef: Optional[tuple] = None
    intercept: float = 0.0

    def h(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "sine":
            return np.sin(3.0 * X[:, 0])
        if self.kind == "linear":
            coef = np.asarray(self.coef, dtype=float)
            return self.intercept + X @ coef
        raise InvalidInput(f"unknown synthetic kind {self.kind!r}")


FIG_SCATTER_SPEC = SyntheticSpec(kind="sine", n_samples=20)
FIG_CLUSTERED_SPEC = SyntheticSpec(kind="sine", sites=(-1.0, -0.5, 0.0, 0.5, 1.0),
                                   n_per_site=100)


def linear_gaussian_spec(dim: int = 3, n: int = 200, noise_sd: float = 0.1,
                         coef_scale: float = 0.2) -> SyntheticSpec:
    """Well-specified linear truth with predictions comfortably inside (0, 1)."""
    coef = tuple(coef_scale / np.sqrt(dim) for _ in range(dim))
    return SyntheticSpec(kind="linear", n_samples=n, dim=dim, coef=coef,
                         intercept=0.5, noise_sd=noise_sd)


def gen_toy(spec: SyntheticSpec, seed: int = 0) -> LabeledDataset:
    """Draw y = h(x) + noise over the spec's design, deterministically."""
    rng = np.random.default_rng(mix_seed(seed, "toy"))
    if spec.sites is not None:
        sites = np.asarray(spec.sites, dtype=float)
        X = np.repeat(sites, spec.n_per_site)[:, None]
        sd = np.asarray(spec.noise_sd, dtype=float)
        if sd.ndim == 0:
            noise_sd = np.full(X.shape[0], float(sd))
        else:
            if sd.shape[0] != sites.shape[0]:
                raise InvalidInput("per-site noise_sd must match the number of sites")
            noise_sd = np.repeat(sd, spec.n_per_site)
    else:
        if spec.n_samples < 1:
            raise InvalidInput("sampler design needs n_samples >= 1")
        X = rng.uniform(spec.low, spec.high, size=(spec.n_samples, spec.dim))
        noise_sd = np.full(X.shape[0], float(spec.noise_sd))
    y = spec.h(X) + rng.normal(0.0, 1.0, size=X.shape[0]) * noise_sd
    return LabeledDataset(X, y)


def gen_synthetic_bandit(n_actions: int, dim: int = 8, n_instances: int = 10000,
                         seed: int = 0, separation: float = 2.0) -> ClassificationEnv:
    """Gaussian-cluster classification bandit; separation controls difficulty.

    Labels are cluster indices; separation 0 makes features independent of
    the label (best accuracy 1/K), large separation approaches accuracy 1.
    """
    if n_actions < 2:
        raise InvalidInput("need at least 2 actions")
    rng = np.random.default_rng(mix_seed(seed, "clusters"))
    centers = separation * rng.normal(size=(n_actions, dim))
    labels = rng.integers(0, n_actions, size=n_instances)
    features = centers[labels] + rng.normal(size=(n_instances, dim))
    return ClassificationEnv(features, labels, n_actions=n_actions, seed=seed)
