"""Residual-overfit action scores.

The central quantity is the absolute disagreement |f(x) - g(x)| between a
tuned and an overfit reward model. It feeds three score families:

* an additive UCB bonus,
* Thompson sampling from a Beta distribution whose moments are matched to
  (f, (f - g)^2),
* closed-form approximate information gains for Gaussian, Bernoulli and
  Poisson observation models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidInput


class BetaParams(NamedTuple):
    """Beta pseudo-counts: ``a`` successes, ``b`` failures, both > 0."""

    a: float
    b: float


@dataclass(frozen=True)
class ScoreConfig:
    """Exploration weight plus the numerical clamps around Beta matching.

    ``eps_prob`` keeps the matched mean inside (0, 1); ``eps_var`` floors
    the matched variance so f == g never divides by zero;
    ``max_var_fraction`` caps the variance strictly below m(1-m), which
    keeps both pseudo-counts positive without flipping their sign.
    """

    alpha: float = 1.0
    pure_exploration: bool = False
    eps_prob: float = 1e-3
    eps_var: float = 1e-6
    max_var_fraction: float = 0.99

    def __post_init__(self):
        if not 0.0 < self.eps_prob < 0.5:
            raise InvalidInput("eps_prob must lie in (0, 0.5)")
        if self.eps_var <= 0:
            raise InvalidInput("eps_var must be positive")
        if not 0.0 < self.max_var_fraction < 1.0:
            raise InvalidInput("max_var_fraction must lie in (0, 1)")
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise InvalidInput("alpha must be finite and >= 0")


DEFAULT_SCORE_CONFIG = ScoreConfig()


def _require_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidInput(f"non-finite prediction {v!r}")


def residual_overfit(f_pred: float, g_pred: float) -> float:
    """Absolute disagreement between the tuned and overfit predictions."""
    _require_finite(f_pred, g_pred)
    return abs(f_pred - g_pred)


def ucb_score(f_pred: float, g_pred: float,
              cfg: ScoreConfig = DEFAULT_SCORE_CONFIG) -> float:
    """f + alpha * |f - g|; the base f drops to 0 under pure exploration."""
    _require_finite(f_pred, g_pred)
    base = 0.0 if cfg.pure_exploration else f_pred
    return base + cfg.alpha * abs(f_pred - g_pred)


def beta_moment_match(f_pred: float, g_pred: float,
                      cfg: ScoreConfig = DEFAULT_SCORE_CONFIG) -> BetaParams:
    """Beta pseudo-counts whose mean is f and variance is (f - g)^2.

    After clamping, mean m = clip(f) and variance v satisfy
    0 < v <= max_var_fraction * m(1-m), so a and b are strictly positive and
    the resulting Beta reproduces (m, v) exactly.
    """
    _require_finite(f_pred, g_pred)
    m = min(max(f_pred, cfg.eps_prob), 1.0 - cfg.eps_prob)
    spread = m * (1.0 - m)
    v = min(max((f_pred - g_pred) ** 2, cfg.eps_var), cfg.max_var_fraction * spread)
    t = spread / v - 1.0
    return BetaParams(a=m * t, b=(1.0 - m) * t)


def ts_score(f_pred: float, g_pred: float, cfg: ScoreConfig, rng) -> float:
    """One Thompson draw from the moment-matched Beta."""
    a, b = beta_moment_match(f_pred, g_pred, cfg)
    return float(rng.beta(a, b))


def beta_ucb(params: BetaParams, alpha: float) -> float:
    """Mean plus alpha standard deviations of Beta(a, b).

    For moment-matched parameters this coincides with ``ucb_score`` up to
    the clamps, since the matched moments are (clip(f), clip((f-g)^2)).
    """
    a, b = params
    if a <= 0 or b <= 0:
        raise InvalidInput("Beta pseudo-counts must be positive")
    s = a + b
    mean = a / s
    var = a * b / (s * s * (s + 1.0))
    return mean + alpha * math.sqrt(var)


def info_gain_gaussian(f_pred: float, g_pred: float, sigma2: float = 0.5) -> float:
    """(f - g)^2 / (2 sigma^2); at sigma^2 = 1/2 this is the squared
    residual overfit, recovering the deterministic exploration score."""
    _require_finite(f_pred, g_pred)
    if sigma2 <= 0:
        raise InvalidInput("sigma2 must be positive")
    diff = f_pred - g_pred
    return diff * diff / (2.0 * sigma2)


def info_gain_bernoulli(f_pred: float, g_pred: float,
                        cfg: ScoreConfig = DEFAULT_SCORE_CONFIG) -> float:
    """KL divergence from g's Bernoulli to f's, after probability clamping."""
    _require_finite(f_pred, g_pred)
    lo, hi = cfg.eps_prob, 1.0 - cfg.eps_prob
    f = min(max(f_pred, lo), hi)
    g = min(max(g_pred, lo), hi)
    return g * math.log(g / f) + (1.0 - g) * math.log((1.0 - g) / (1.0 - f))


def info_gain_poisson(f_rate: float, g_rate: float) -> float:
    """KL divergence between Poisson rates: g log(g/f) + f - g."""
    _require_finite(f_rate, g_rate)
    if f_rate <= 0 or g_rate <= 0:
        raise InvalidInput("Poisson rates must be positive")
    return g_rate * math.log(g_rate / f_rate) + f_rate - g_rate
