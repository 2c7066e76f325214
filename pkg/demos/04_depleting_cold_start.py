"""Cold-start recommendation with depleting rewards.

Items are split into existing items (which define user contexts) and
cold-start items (the action space). A positive (user, item) pair pays 1
only the first time it is played, so a policy has to keep discovering new
matches rather than hammering one good item.
"""

import numpy as np

from rome_bandits import gen_depleting_synthetic, run_replication
from rome_bandits.models import overfit_linear_config, tuned_linear_config
from rome_bandits.policies import PolicyConfig, make_policy


def play(kind, seed=3):
    env = gen_depleting_synthetic(n_users=30, n_items=16, positive_density=0.85,
                                  seed=11, passes=10, context_dim=8)
    cfg = PolicyConfig(kind=kind, seed=seed, retrain_every=100,
                       tuned=tuned_linear_config(1.0),
                       overfit=overfit_linear_config())
    policy = make_policy(cfg, env.n_actions, env.dim)
    rewards = run_replication(env, policy, horizon=env.n_steps,
                              init_rng=np.random.default_rng(seed))
    return env, rewards


for kind in ("rome_ts", "uniform"):
    env, rewards = play(kind)
    per_pass = rewards.reshape(10, -1).sum(axis=1)
    print(f"{kind}: total reward {rewards.sum()} over {rewards.shape[0]} steps")
    print(f"  reward per pass: {per_pass.tolist()}")
    totals = {}
    for user, action, r in env.reward_log:
        totals[(user, action)] = totals.get((user, action), 0) + r
    print(f"  audit: max reward from any (user, item) pair = {max(totals.values())}")
    print()
print("per-pass rewards decay as good pairs deplete (uniform depletes slower,")
print("since it spreads plays); the audit confirms no pair ever pays twice.")
