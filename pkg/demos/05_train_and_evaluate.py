"""Train a small PN-CDQN and evaluate it greedily.

This is a miniature version of the full desk-profile run (use the CLI
for that: `pncrl train` / `pncrl eval`). Training here is deliberately
short so the demo finishes in well under a minute; expect a policy that
is better than random but far from converged.

Run with:  python3 demos/05_train_and_evaluate.py
"""

from dataclasses import replace

from pncrl.agents import AgentConfig, AgentMode, evaluate, greedy_policy, train_loop
from pncrl.junction import JunctionConfig
from pncrl.rewards import RewardWeights, summarize
from pncrl.wrapper import ConstraintWrapper, WrapperMode

weights = RewardWeights(w2=1.0, w3=1.5)

cfg = replace(
    AgentConfig(mode=AgentMode.PN_CDQN).desk(),
    random_steps=1_000,
    learning_starts=1_000,
    epsilon_decay_steps=5_000,
    max_steps=20_000,
)

wrapper = ConstraintWrapper(JunctionConfig(seed=0), mode=WrapperMode.MASK, weights=weights)
print(f"training pn_cdqn for {cfg.max_steps} steps (gamma={cfg.gamma}, lr={cfg.lr}) ...")
result = train_loop(wrapper, cfg, seed=1)

print(f"finished: {len(result.log)} episodes")
for row in result.log[:3] + result.log[-3:]:
    print(
        f"  episode {row.episode:3d}: length {row.episode_length:4d} "
        f"return {row.total_return:10.1f} violations {row.violations_requested}"
    )

# Greedy evaluation behind the shield. Masked training means the agent
# never even requests an invalid action, so violations stay at zero.
eval_wrapper = ConstraintWrapper(
    JunctionConfig(seed=0), mode=WrapperMode.SHIELD, weights=weights
)
records = evaluate(eval_wrapper, greedy_policy(result.model, cfg.mode), episodes=20, seed=99)
s = summarize(records, model="pn_cdqn")

print(
    f"\ngreedy evaluation over {s.episodes} episodes:"
    f"\n  episode length avg {s.timesteps_avg:.1f}"
    f"\n  average junction waiting time {s.ajwt_avg:.2f}"
    f"\n  requested violations {s.violated_avg_pct:.3f}%"
)

# Models serialize to a small self-describing binary format.
payload = result.model.save_bytes()
print(f"\nserialized model: {len(payload)} bytes, magic {payload[:6]!r}")
