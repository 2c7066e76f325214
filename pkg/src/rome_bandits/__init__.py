"""Residual-overfit exploration for contextual bandits.

The toolkit scores actions by the disagreement between a tuned reward model
and a deliberately overfit one, and wraps that signal in UCB and Thompson
sampling policies alongside LinUCB, epsilon-greedy, Bootstrap-TS and
uniform baselines. Environments convert classification datasets into
bandits with partial feedback; the harness runs seeded replications and
reports average regret with confidence intervals.
"""

from .environments import (
    ClassificationEnv,
    DepletingEnv,
    SyntheticSpec,
    gen_depleting_synthetic,
    gen_synthetic_bandit,
    gen_toy,
    linear_gaussian_spec,
    load_chorales,
    load_covertype,
    load_movielens_depleting,
)
from .errors import (
    ConfigError,
    InvalidInput,
    InvalidState,
    ParseError,
    ProtocolError,
    RomeBanditsError,
)
from .harness import (
    EnvConfig,
    ExperimentConfig,
    RegretSummary,
    average_regret,
    compare_uncertainty_maps,
    persist_results,
    run_experiment,
    run_replication,
    summarize,
    toy_band_profiles,
    verify_proposition,
)
from .models import (
    FittedModel,
    LabeledDataset,
    ModelConfig,
    ModelPair,
    fit_linear,
    fit_model,
    fit_pair,
    fit_tree_ensemble,
    overfit_linear_config,
    overfit_tree_config,
    split_disjoint,
    tuned_linear_config,
    tuned_tree_config,
)
from .policies import POLICY_KINDS, PolicyConfig, ReplayBuffer, Round, make_policy
from .scoring import (
    BetaParams,
    ScoreConfig,
    beta_moment_match,
    beta_ucb,
    info_gain_bernoulli,
    info_gain_gaussian,
    info_gain_poisson,
    residual_overfit,
    ts_score,
    ucb_score,
)
from .seeding import mix_seed

__version__ = "0.1.0"
