"""The six bandit policies behind a single select/observe/retrain interface.

Kinds: ``rome_ts``, ``rome_ucb``, ``lin_ucb``, ``eps_greedy``,
``bootstrap_ts`` and ``uniform``. Model-based kinds share a replay buffer,
a retrain cadence (every ``retrain_every`` observations) and a small
"organic" rate of uniform actions; LinUCB instead updates its per-arm ridge
state in closed form on every observation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConfigError, InvalidInput, InvalidState
from .models import (
    LabeledDataset,
    ModelConfig,
    ModelPair,
    fit_model,
    fit_pair,
    overfit_tree_config,
    tuned_tree_config,
)
from .scoring import ScoreConfig, beta_moment_match, beta_ucb, ts_score
from .seeding import mix_seed

POLICY_KINDS = ("rome_ts", "rome_ucb", "lin_ucb", "eps_greedy", "bootstrap_ts", "uniform")

# Cold-start priors for actions without a fitted model: f at 0.5 and g a
# half unit away, so the residual overfit is maximal and unseen actions
# attract first pulls. Only (f - g)^2 enters the scores, so the sign of the
# perturbation is irrelevant.
COLD_F_PRIOR = 0.5
COLD_G_PRIOR = 1.0


@dataclass(frozen=True)
class Round:
    """One interaction: context seen, action taken, binary reward received."""

    step: int
    context: np.ndarray
    action: int
    reward: int


class ReplayBuffer:
    """Append-only log of rounds with strictly increasing step indices."""

    def __init__(self):
        self.rounds: List[Round] = []

    def append(self, rnd: Round):
        if self.rounds and rnd.step <= self.rounds[-1].step:
            raise InvalidInput(
                f"step {rnd.step} does not increase past {self.rounds[-1].step}")
        self.rounds.append(rnd)

    def __len__(self):
        return len(self.rounds)

    def __iter__(self):
        return iter(self.rounds)

    def as_arrays(self):
        X = np.array([r.context for r in self.rounds], dtype=float)
        a = np.array([r.action for r in self.rounds], dtype=int)
        y = np.array([r.reward for r in self.rounds], dtype=float)
        return X, a, y


@dataclass(frozen=True)
class PolicyConfig:
    """Hyperparameters for one policy instance.

    Defaults follow the common evaluation settings: alpha=1 for UCB
    bonuses, epsilon=0.1, an organic uniform rate of 0.01, retraining every
    100 observations, and M=20 bootstrap replicates.
    """

    kind: str
    alpha: float = 1.0
    epsilon: float = 0.1
    organic_rate: float = 0.01
    retrain_every: int = 100
    m_replicates: int = 20
    model_scope: str = "per_action"  # or "shared_onehot"
    split_mode: str = "disjoint_split"
    tuned: ModelConfig = field(default_factory=tuned_tree_config)
    overfit: ModelConfig = field(default_factory=overfit_tree_config)
    score: ScoreConfig = field(default_factory=ScoreConfig)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.organic_rate <= 1.0:
            raise ConfigError("organic_rate must lie in [0, 1]")
        if self.retrain_every < 1:
            raise ConfigError("retrain_every must be >= 1")
        if self.m_replicates < 1:
            raise ConfigError("m_replicates must be >= 1")
        if self.model_scope not in ("per_action", "shared_onehot"):
            raise ConfigError(f"unknown model_scope {self.model_scope!r}")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")


class Policy:
    """Base class: organic overlay, argmax selection with uniform tie-break,
    buffer bookkeeping and the retrain cadence."""

    kind = ""
    uses_models = True  # organic exploration applies to model-based kinds

    def __init__(self, config: PolicyConfig, n_actions: int, context_dim: int):
        if n_actions < 2:
            raise ConfigError("need at least 2 actions")
        if context_dim < 1:
            raise ConfigError("context_dim must be >= 1")
        self.config = config
        self.n_actions = n_actions
        self.context_dim = context_dim
        self.buffer = ReplayBuffer()
        self.rng = np.random.default_rng(mix_seed(config.seed, "policy", config.kind))
        self.retrain_count = 0
        self._all_actions = np.arange(n_actions)

    # -- selection ---------------------------------------------------------

    def select_action(self, context, mask=None) -> int:
        context = self._check_context(context)
        eligible = self._eligible(mask)
        if (self.uses_models and self.config.organic_rate > 0.0
                and self.rng.random() < self.config.organic_rate):
            return int(eligible[self.rng.integers(eligible.shape[0])])
        return self._select(context, eligible)

    def _select(self, context, eligible) -> int:
        scores = self.score_all(context)
        sub = scores[eligible]
        ties = eligible[sub == sub.max()]
        if ties.shape[0] == 1:
            return int(ties[0])
        return int(ties[self.rng.integers(ties.shape[0])])

    def score_all(self, context) -> np.ndarray:
        raise NotImplementedError

    def _eligible(self, mask) -> np.ndarray:
        if mask is None:
            return self._all_actions
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n_actions,):
            raise InvalidInput("mask must have one entry per action")
        eligible = np.flatnonzero(mask)
        if eligible.shape[0] == 0:
            raise InvalidInput("no eligible actions")
        return eligible

    def _check_context(self, context) -> np.ndarray:
        context = np.asarray(context, dtype=float)
        if context.ndim != 1 or context.shape[0] != self.context_dim:
            raise InvalidInput(
                f"context must have dim {self.context_dim}, got shape {context.shape}")
        return context

    # -- learning ----------------------------------------------------------

    def observe(self, rnd: Round):
        if not 0 <= rnd.action < self.n_actions:
            raise InvalidInput(f"action {rnd.action} out of range")
        if rnd.reward not in (0, 1):
            raise InvalidInput("reward must be 0 or 1")
        self._check_context(rnd.context)
        self.buffer.append(rnd)
        self._after_observe(rnd)

    def _after_observe(self, rnd: Round):
        if len(self.buffer) % self.config.retrain_every == 0:
            self.retrain()

    def retrain(self):
        if len(self.buffer) == 0:
            raise InvalidInput("cannot retrain on an empty replay buffer")
        self.retrain_count += 1
        self._retrain_impl()

    def _retrain_impl(self):
        pass

    # -- shared helpers ----------------------------------------------------

    def _per_action_datasets(self):
        X, a, y = self.buffer.as_arrays()
        out = []
        for act in range(self.n_actions):
            m = a == act
            out.append(LabeledDataset(X[m], y[m]) if m.any() else None)
        return out

    def _onehot_dataset(self):
        X, a, y = self.buffer.as_arrays()
        hot = np.zeros((X.shape[0], self.n_actions))
        hot[np.arange(X.shape[0]), a] = 1.0
        return LabeledDataset(np.hstack([X, hot]), y)

    def _onehot_queries(self, context):
        return np.hstack([np.tile(context, (self.n_actions, 1)), np.eye(self.n_actions)])


class UniformPolicy(Policy):
    kind = "uniform"
    uses_models = False

    def score_all(self, context):
        self._check_context(context)
        return np.zeros(self.n_actions)

    def _after_observe(self, rnd):
        pass


class _RewardModelPolicy(Policy):
    """Shared machinery for kinds that fit reward models from the buffer."""

    def _fit_seed(self, *extra):
        return mix_seed(self.config.seed, "retrain", self.retrain_count, *extra)

    def _min_rows(self):
        return 2 if self.config.split_mode == "disjoint_split" else 1


class RomePolicy(_RewardModelPolicy):
    """Residual-overfit scoring: per-action (or one-hot-shared) model pairs."""

    def __init__(self, config, n_actions, context_dim):
        super().__init__(config, n_actions, context_dim)
        self.pairs: List[Optional[ModelPair]] = [None] * n_actions
        self.shared_pair: Optional[ModelPair] = None

    def _retrain_impl(self):
        if self.config.model_scope == "shared_onehot":
            data = self._onehot_dataset()
            if data.n >= self._min_rows():
                self.shared_pair = fit_pair(
                    data, self.config.tuned, self.config.overfit,
                    self.config.split_mode, self._fit_seed("shared"))
            return
        for act, data in enumerate(self._per_action_datasets()):
            if data is None or data.n < self._min_rows():
                self.pairs[act] = None  # keep the cold-start prior
                continue
            self.pairs[act] = fit_pair(
                data, self.config.tuned, self.config.overfit,
                self.config.split_mode, self._fit_seed(act))

    def predictions(self, context):
        """(f, g) prediction vectors over actions, with cold-start priors."""
        if self.config.model_scope == "shared_onehot":
            if self.shared_pair is None:
                return (np.full(self.n_actions, COLD_F_PRIOR),
                        np.full(self.n_actions, COLD_G_PRIOR))
            queries = self._onehot_queries(context)
            return (self.shared_pair.f.predict_many(queries),
                    self.shared_pair.g.predict_many(queries))
        f = np.full(self.n_actions, COLD_F_PRIOR)
        g = np.full(self.n_actions, COLD_G_PRIOR)
        for act, pair in enumerate(self.pairs):
            if pair is not None:
                f[act] = pair.f.predict(context)
                g[act] = pair.g.predict(context)
        return f, g


class RomeUCBPolicy(RomePolicy):
    kind = "rome_ucb"

    def score_all(self, context):
        context = self._check_context(context)
        f, g = self.predictions(context)
        cfg = self.config.score
        return np.array([
            beta_ucb(beta_moment_match(f[a], g[a], cfg), self.config.alpha)
            for a in range(self.n_actions)
        ])


class RomeTSPolicy(RomePolicy):
    kind = "rome_ts"

    def score_all(self, context):
        context = self._check_context(context)
        f, g = self.predictions(context)
        cfg = self.config.score
        return np.array([
            ts_score(f[a], g[a], cfg, self.rng) for a in range(self.n_actions)
        ])


class EpsGreedyPolicy(_RewardModelPolicy):
    kind = "eps_greedy"

    def __init__(self, config, n_actions, context_dim):
        super().__init__(config, n_actions, context_dim)
        self.models: List[Optional[object]] = [None] * n_actions
        self.shared_model = None

    def _select(self, context, eligible):
        if self.rng.random() < self.config.epsilon:
            return int(eligible[self.rng.integers(eligible.shape[0])])
        return super()._select(context, eligible)

    def _retrain_impl(self):
        if self.config.model_scope == "shared_onehot":
            self.shared_model = fit_model(
                self._onehot_dataset(),
                _reseed(self.config.tuned, self._fit_seed("shared")))
            return
        for act, data in enumerate(self._per_action_datasets()):
            if data is None:
                self.models[act] = None
                continue
            self.models[act] = fit_model(
                data, _reseed(self.config.tuned, self._fit_seed(act)))

    def score_all(self, context):
        context = self._check_context(context)
        if self.config.model_scope == "shared_onehot":
            if self.shared_model is None:
                return np.full(self.n_actions, COLD_F_PRIOR)
            return self.shared_model.predict_many(self._onehot_queries(context))
        out = np.full(self.n_actions, COLD_F_PRIOR)
        for act, model in enumerate(self.models):
            if model is not None:
                out[act] = model.predict(context)
        return out


class BootstrapTSPolicy(_RewardModelPolicy):
    """M model sets fit on bootstrap resamples of the buffer; each step one
    set is drawn uniformly and used greedily."""

    kind = "bootstrap_ts"

    def __init__(self, config, n_actions, context_dim):
        super().__init__(config, n_actions, context_dim)
        self.model_sets: List[List[Optional[object]]] = []
        self.shared_sets: List[object] = []
        self._pinned: Optional[int] = None

    def pick_model(self, rng=None) -> int:
        n = len(self.shared_sets) if self.config.model_scope == "shared_onehot" \
            else len(self.model_sets)
        if n == 0:
            raise InvalidState("no fitted bootstrap models")
        gen = self.rng if rng is None else rng
        return int(gen.integers(n))

    def _retrain_impl(self):
        X, a, y = self.buffer.as_arrays()
        n = X.shape[0]
        shared = self.config.model_scope == "shared_onehot"
        new_sets, new_shared = [], []
        for m in range(self.config.m_replicates):
            rng = np.random.default_rng(self._fit_seed("boot", m))
            idx = rng.integers(0, n, size=n)
            Xb, ab, yb = X[idx], a[idx], y[idx]
            if shared:
                hot = np.zeros((n, self.n_actions))
                hot[np.arange(n), ab] = 1.0
                data = LabeledDataset(np.hstack([Xb, hot]), yb)
                new_shared.append(fit_model(
                    data, _reseed(self.config.tuned, self._fit_seed("fit", m))))
                continue
            models = []
            for act in range(self.n_actions):
                sel = ab == act
                if not sel.any():
                    models.append(None)
                    continue
                data = LabeledDataset(Xb[sel], yb[sel])
                models.append(fit_model(
                    data, _reseed(self.config.tuned, self._fit_seed("fit", m, act))))
            new_sets.append(models)
        self.model_sets = new_sets
        self.shared_sets = new_shared

    def _select(self, context, eligible):
        has_models = self.shared_sets if self.config.model_scope == "shared_onehot" \
            else self.model_sets
        self._pinned = self.pick_model() if has_models else None
        try:
            return super()._select(context, eligible)
        finally:
            self._pinned = None

    def score_all(self, context):
        context = self._check_context(context)
        shared = self.config.model_scope == "shared_onehot"
        available = self.shared_sets if shared else self.model_sets
        if not available:
            return np.full(self.n_actions, COLD_F_PRIOR)
        idx = self._pinned if self._pinned is not None else self.pick_model()
        if shared:
            return self.shared_sets[idx].predict_many(self._onehot_queries(context))
        out = np.full(self.n_actions, COLD_F_PRIOR)
        for act, model in enumerate(self.model_sets[idx]):
            if model is not None:
                out[act] = model.predict(context)
        return out


class LinUCBPolicy(Policy):
    """Disjoint-arm linear UCB with a unit ridge prior.

    Per-arm state A_a (started at the identity) and b_a are updated in
    closed form on every observation; the inverse is maintained with
    Sherman-Morrison rank-one updates, so there is no retrain cadence.
    """

    kind = "lin_ucb"

    def __init__(self, config, n_actions, context_dim):
        super().__init__(config, n_actions, context_dim)
        eye = np.eye(context_dim)
        self.A_inv = np.repeat(eye[None, :, :], n_actions, axis=0)
        self.b = np.zeros((n_actions, context_dim))
        self.theta = np.zeros((n_actions, context_dim))

    def score_all(self, context):
        context = self._check_context(context)
        proj = self.A_inv @ context  # (K, d)
        quad = np.maximum(proj @ context, 0.0)
        return self.theta @ context + self.config.alpha * np.sqrt(quad)

    def _after_observe(self, rnd: Round):
        a = rnd.action
        x = np.asarray(rnd.context, dtype=float)
        Ax = self.A_inv[a] @ x
        self.A_inv[a] -= np.outer(Ax, Ax) / (1.0 + x @ Ax)
        self.b[a] += rnd.reward * x
        self.theta[a] = self.A_inv[a] @ self.b[a]

    def exploration_bonus(self, action: int, context) -> float:
        context = self._check_context(context)
        proj = self.A_inv[action] @ context
        return float(self.config.alpha * np.sqrt(max(proj @ context, 0.0)))


_KIND_TO_CLASS = {
    "rome_ts": RomeTSPolicy,
    "rome_ucb": RomeUCBPolicy,
    "lin_ucb": LinUCBPolicy,
    "eps_greedy": EpsGreedyPolicy,
    "bootstrap_ts": BootstrapTSPolicy,
    "uniform": UniformPolicy,
}


def _reseed(config: ModelConfig, seed: int) -> ModelConfig:
    from dataclasses import replace

    return replace(config, seed=seed)


def make_policy(config: PolicyConfig, n_actions: int, context_dim: int) -> Policy:
    """Instantiate the policy class for ``config.kind``."""
    return _KIND_TO_CLASS[config.kind](config, n_actions, context_dim)
