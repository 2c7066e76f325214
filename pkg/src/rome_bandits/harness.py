"""Experiment orchestration.

Runs seeded replications of (environment, policy) pairs with forced uniform
initialization, aggregates average regret with 95% t-intervals, verifies the
squared-disagreement decomposition by direct Monte-Carlo simulation, and
persists results as CSV files. All randomness derives from the base seed via
``seeding.mix_seed`` so outputs are byte-reproducible.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy import stats

from .environments import (
    SyntheticSpec,
    gen_depleting_synthetic,
    gen_synthetic_bandit,
    gen_toy,
    load_chorales,
    load_covertype,
    load_movielens_depleting,
)
from .errors import ConfigError, InvalidInput
from .models import (
    LabeledDataset,
    ModelConfig,
    fit_linear,
    fit_model,
    fit_pair,
    overfit_linear_config,
    overfit_tree_config,
    split_disjoint,
    tuned_linear_config,
    tuned_tree_config,
)
from .policies import PolicyConfig, Round, make_policy
from .seeding import mix_seed

SUMMARY_COLUMNS = "policy,dataset,n_replications,mean_regret,ci95_halfwidth"
SERIES_COLUMNS = "step,reward,cumulative_reward"


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class EnvConfig:
    """Which environment to build and how."""

    kind: str = "synthetic_bandit"
    name: Optional[str] = None
    path: Optional[str] = None
    row_cap: Optional[int] = None
    n_actions: int = 7
    dim: int = 8
    n_instances: int = 10000
    separation: float = 2.0
    # depleting settings
    n_users: int = 40
    n_items: int = 60
    positive_density: float = 0.15
    context_dim: int = 16
    passes: int = 10
    positive_threshold: float = 4.0

    KINDS = ("synthetic_bandit", "depleting_synthetic", "covertype",
             "chorales", "movielens_depleting")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        if self.kind in ("covertype", "chorales", "movielens_depleting") and not self.path:
            raise ConfigError(f"environment {self.kind!r} requires a data path")

    @property
    def dataset_name(self) -> str:
        return self.name or self.kind


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an environment, a list of policy kinds, a horizon."""

    env: EnvConfig = field(default_factory=EnvConfig)
    policies: tuple = ("uniform",)
    horizon: int = 1000
    n_replications: int = 10
    base_seed: int = 0
    alpha: float = 1.0
    epsilon: float = 0.1
    organic_rate: float = 0.01
    retrain_every: int = 100
    m_replicates: int = 20
    model_family: str = "tree_ensemble"
    model_scope: str = "per_action"
    split_mode: str = "disjoint_split"
    tuned_ridge_lambda: float = 1.0
    overfit_ridge_lambda: float = 1e-8

    def __post_init__(self):
        if self.n_replications < 1:
            raise ConfigError("n_replications must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not self.policies:
            raise ConfigError("at least one policy kind is required")
        if self.model_family not in ("linear_ridge", "tree_ensemble"):
            raise ConfigError(f"unknown model_family {self.model_family!r}")


def make_env(env_cfg: EnvConfig, seed: int):
    if env_cfg.kind == "synthetic_bandit":
        return gen_synthetic_bandit(env_cfg.n_actions, env_cfg.dim,
                                    env_cfg.n_instances, seed=seed,
                                    separation=env_cfg.separation)
    if env_cfg.kind == "depleting_synthetic":
        return gen_depleting_synthetic(env_cfg.n_users, env_cfg.n_items,
                                       env_cfg.positive_density, seed=seed,
                                       context_dim=env_cfg.context_dim,
                                       passes=env_cfg.passes)
    if env_cfg.kind == "covertype":
        return load_covertype(env_cfg.path, row_cap=env_cfg.row_cap, seed=seed)
    if env_cfg.kind == "chorales":
        return load_chorales(env_cfg.path, row_cap=env_cfg.row_cap, seed=seed)
    return load_movielens_depleting(env_cfg.path, seed=seed,
                                    context_dim=env_cfg.context_dim,
                                    passes=env_cfg.passes,
                                    positive_threshold=env_cfg.positive_threshold,
                                    row_cap=env_cfg.row_cap)


def policy_config_for(config: ExperimentConfig, kind: str, seed: int) -> PolicyConfig:
    if config.model_family == "linear_ridge":
        tuned = tuned_linear_config(config.tuned_ridge_lambda)
        overfit = overfit_linear_config(config.overfit_ridge_lambda)
    else:
        tuned = tuned_tree_config()
        overfit = overfit_tree_config()
    return PolicyConfig(kind=kind, alpha=config.alpha, epsilon=config.epsilon,
                        organic_rate=config.organic_rate,
                        retrain_every=config.retrain_every,
                        m_replicates=config.m_replicates,
                        model_scope=config.model_scope,
                        split_mode=config.split_mode,
                        tuned=tuned, overfit=overfit, seed=seed)


# -- running -----------------------------------------------------------------


@dataclass(frozen=True)
class RegretSummary:
    """Cross-replication regret summary for one (policy, dataset) cell."""

    policy: str
    dataset: str
    per_replication: tuple
    mean_regret: float
    ci95_halfwidth: float

    @property
    def n_replications(self) -> int:
        return len(self.per_replication)


def average_regret(rewards) -> float:
    """1 - mean reward: the optimal action pays 1 in these environments."""
    rewards = np.asarray(rewards)
    if rewards.size == 0:
        raise InvalidInput("cannot average an empty reward sequence")
    return float(1.0 - rewards.mean())


def summarize(per_replication, policy: str = "", dataset: str = "") -> RegretSummary:
    """Mean regret with a 95% Student-t interval over replications."""
    values = [float(v) for v in per_replication]
    if not values:
        raise InvalidInput("need at least one replication")
    mean = float(np.mean(values))
    n = len(values)
    if n == 1:
        warnings.warn("single replication: confidence half-width reported as 0")
        half = 0.0
    else:
        half = float(stats.t.ppf(0.975, n - 1) * np.std(values, ddof=1) / math.sqrt(n))
    return RegretSummary(policy=policy, dataset=dataset,
                         per_replication=tuple(values),
                         mean_regret=mean, ci95_halfwidth=half)


def run_replication(env, policy, horizon: int, init_rng) -> np.ndarray:
    """One interaction loop: uniform until every action has been taken once,
    then the policy's own selections, up to ``horizon`` or exhaustion."""
    n_actions = env.n_actions
    seen = np.zeros(n_actions, dtype=bool)
    rewards = np.empty(horizon, dtype=np.int64)
    step = 0
    while step < horizon:
        try:
            nxt = env.next_step()
            if nxt is None:
                break
            context, mask = nxt
            if not seen.all():
                if mask is None:
                    eligible = np.arange(n_actions)
                else:
                    eligible = np.flatnonzero(np.asarray(mask, dtype=bool))
                action = int(eligible[init_rng.integers(eligible.shape[0])])
            else:
                action = policy.select_action(context, mask)
            r = env.reward(action)
            policy.observe(Round(step=step, context=context, action=action, reward=r))
        except Exception as exc:
            exc.args = (f"interaction step {step}: {exc}",) + exc.args[1:]
            raise
        seen[action] = True
        rewards[step] = r
        step += 1
    return rewards[:step]


def replication_seed(base_seed: int, kind: str, rep: int) -> int:
    return mix_seed(base_seed, "rep", kind, rep)


def run_single(config: ExperimentConfig, kind: str, rep: int) -> np.ndarray:
    """Run one (policy kind, replication) cell from scratch.

    The environment stream depends only on the replication index, so all
    policies within a replication face the same instance order.
    """
    rep_seed = replication_seed(config.base_seed, kind, rep)
    env = make_env(config.env, mix_seed(config.base_seed, "env", rep))
    if config.horizon < env.n_actions:
        raise ConfigError(
            f"horizon {config.horizon} is below the action count {env.n_actions}")
    policy = make_policy(policy_config_for(config, kind, rep_seed),
                         env.n_actions, env.dim)
    init_rng = np.random.default_rng(mix_seed(rep_seed, "forced-init"))
    return run_replication(env, policy, config.horizon, init_rng)


@dataclass
class ExperimentResult:
    summaries: List[RegretSummary]
    series: dict  # (kind, rep) -> reward array


def _run_task(args):
    config, kind, rep = args
    return kind, rep, run_single(config, kind, rep)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """All configured (policy, replication) cells, optionally in parallel.

    Results are a pure function of the config regardless of ``jobs``.
    """
    tasks = [(config, kind, rep)
             for kind in config.policies
             for rep in range(config.n_replications)]
    series = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for kind, rep, rewards in pool.map(_run_task, tasks):
                series[(kind, rep)] = rewards
    else:
        for task in tasks:
            kind, rep, rewards = _run_task(task)
            series[(kind, rep)] = rewards
    summaries = []
    for kind in config.policies:
        regrets = [average_regret(series[(kind, rep)])
                   for rep in range(config.n_replications)]
        summaries.append(summarize(regrets, policy=kind,
                                   dataset=config.env.dataset_name))
    return ExperimentResult(summaries=summaries, series=series)


# -- persistence -------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def persist_results(result: ExperimentResult, config: ExperimentConfig, out_dir):
    """Write summary.csv, one series CSV per (policy, replication), and a
    config snapshot. Filenames embed the policy kind and replication seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [SUMMARY_COLUMNS]
    for s in result.summaries:
        lines.append(f"{s.policy},{s.dataset},{s.n_replications},"
                     f"{s.mean_regret!r},{s.ci95_halfwidth!r}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    for kind in config.policies:
        for rep in range(config.n_replications):
            rewards = result.series[(kind, rep)]
            seed = replication_seed(config.base_seed, kind, rep)
            cum = np.cumsum(rewards)
            rows = [SERIES_COLUMNS]
            rows.extend(f"{i},{int(r)},{int(c)}"
                        for i, (r, c) in enumerate(zip(rewards, cum)))
            name = f"series_{kind}_rep{rep:02d}_seed{seed}.csv"
            (out / name).write_text("\n".join(rows) + "\n")
    snapshot = []
    for section, obj in (("env", config.env), (None, config)):
        for key, value in sorted(vars(obj).items()):
            if section is None and key == "env":
                continue
            prefix = f"{section}." if section else ""
            snapshot.append(f"{prefix}{key} = {_format_value(value)}")
    (out / "config.txt").write_text("\n".join(snapshot) + "\n")
    return out


# -- the disagreement decomposition oracle ------------------------------------


@dataclass(frozen=True)
class PropositionReport:
    probes: np.ndarray
    lhs: np.ndarray  # mean squared disagreement per probe
    rhs: np.ndarray  # MSE of f plus variance of g per probe
    max_relative_error: float


def verify_proposition(spec: SyntheticSpec, tuned: ModelConfig,
                       overfit: ModelConfig, n_draws: int, probes,
                       seed: int = 0, frozen_f: Optional[float] = None) -> PropositionReport:
    """Monte-Carlo check that E[(f - g)^2] = MSE[f] + Var[g] pointwise.

    The design is drawn once and held fixed; each draw resamples the noise,
    splits the rows disjointly, and refits both models. ``frozen_f`` replaces
    f with a constant, the degenerate case where MSE[f] is exact.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    rng = np.random.default_rng(mix_seed(seed, "proposition"))
    design = rng.uniform(spec.low, spec.high, size=(spec.n_samples, spec.dim))
    h_design = spec.h(design)
    h_probes = spec.h(probes)
    n = design.shape[0]
    k = (n + 1) // 2
    f_vals = np.empty((n_draws, probes.shape[0]))
    g_vals = np.empty((n_draws, probes.shape[0]))
    for d in range(n_draws):
        y = h_design + rng.normal(0.0, spec.noise_sd, size=n)
        perm = rng.permutation(n)
        part_f, part_g = perm[:k], perm[k:]
        if frozen_f is None:
            f_model = fit_model(LabeledDataset(design[part_f], y[part_f]), tuned)
            f_vals[d] = f_model.predict_many(probes)
        else:
            f_vals[d] = frozen_f
        g_model = fit_model(LabeledDataset(design[part_g], y[part_g]), overfit)
        g_vals[d] = g_model.predict_many(probes)
    lhs = ((f_vals - g_vals) ** 2).mean(axis=0)
    mse_f = ((f_vals - h_probes) ** 2).mean(axis=0)
    var_g = g_vals.var(axis=0)
    rhs = mse_f + var_g
    rel = np.abs(lhs - rhs) / rhs
    return PropositionReport(probes=probes, lhs=lhs, rhs=rhs,
                             max_relative_error=float(rel.max()))


# -- toy uncertainty profiles -------------------------------------------------


def poly_features(x, degree: int) -> np.ndarray:
    """Powers x, x^2, ..., x^degree of a scalar input (intercept excluded)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.vander(x, degree + 1, increasing=True)[:, 1:]


def _toy_model_configs(tuned_lambda: float = 1.0, overfit_lambda: float = 1e-8):
    # Unclipped: the sine toy has targets outside [0, 1].
    tuned = tuned_linear_config(tuned_lambda, clip_range=None)
    overfit = overfit_linear_config(overfit_lambda, clip_range=None)
    return tuned, overfit


@dataclass(frozen=True)
class ToyProfiles:
    """Fitted curves and uncertainty profiles on a dense 1-D grid."""

    grid: np.ndarray
    f: np.ndarray
    g: np.ndarray
    residual_overfit: np.ndarray
    rmse_model: Optional[np.ndarray]
    samples_x: np.ndarray
    samples_y: np.ndarray
    sites: Optional[np.ndarray]


def toy_band_profiles(spec: SyntheticSpec, seed: int = 0, degree: int = 5,
                      grid_lo: float = -1.25, grid_hi: float = 1.25,
                      grid_n: int = 126) -> ToyProfiles:
    """Fit a tuned/overfit pair to one toy draw; evaluate both on a grid."""
    data = gen_toy(spec, seed)
    tuned, overfit = _toy_model_configs()
    pair = fit_pair(LabeledDataset(poly_features(data.X[:, 0], degree), data.y),
                    tuned, overfit, "disjoint_split", mix_seed(seed, "toy-pair"))
    grid = np.linspace(grid_lo, grid_hi, grid_n)
    grid_feats = poly_features(grid, degree)
    f = pair.f.predict_many(grid_feats)
    g = pair.g.predict_many(grid_feats)
    return ToyProfiles(grid=grid, f=f, g=g, residual_overfit=np.abs(f - g),
                       rmse_model=None, samples_x=data.X[:, 0], samples_y=data.y,
                       sites=None if spec.sites is None else np.asarray(spec.sites))


def compare_uncertainty_maps(spec: SyntheticSpec, seed: int = 0, degree: int = 7,
                             grid_lo: float = -1.6, grid_hi: float = 1.6,
                             grid_n: int = 161) -> ToyProfiles:
    """Residual-overfit profile vs a model trained on f's squared errors.

    The squared-error predictor cannot fall below the noise floor even at
    heavily observed sites, while the disagreement profile collapses there
    and grows where the design has no support.
    """
    data = gen_toy(spec, seed)
    feats = poly_features(data.X[:, 0], degree)
    tuned, overfit = _toy_model_configs()
    pair = fit_pair(LabeledDataset(feats, data.y), tuned, overfit,
                    "disjoint_split", mix_seed(seed, "map-pair"))
    grid = np.linspace(grid_lo, grid_hi, grid_n)
    grid_feats = poly_features(grid, degree)
    f = pair.f.predict_many(grid_feats)
    g = pair.g.predict_many(grid_feats)
    sq_err = (pair.f.predict_many(feats) - data.y) ** 2
    err_model = fit_linear(LabeledDataset(feats, sq_err), tuned)
    rmse_profile = np.sqrt(np.maximum(err_model.predict_many(grid_feats), 0.0))
    return ToyProfiles(grid=grid, f=f, g=g, residual_overfit=np.abs(f - g),
                       rmse_model=rmse_profile, samples_x=data.X[:, 0],
                       samples_y=data.y,
                       sites=None if spec.sites is None else np.asarray(spec.sites))
