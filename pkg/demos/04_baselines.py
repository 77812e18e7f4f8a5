"""Fixed round-robin baselines B_v1 and B_v2.

B_v1 cycles greens through all four groups back to back; B_v2 inserts a
neutral step after each of the two heavy straight-through groups, giving
them an extra service tick per cycle. Under the default asymmetric
arrival rates (straight lanes busier than turn lanes) the slower cycle
survives much longer before a queue overflows.

Run with:  python3 demos/04_baselines.py
"""

from pncrl.agents import BASELINE_V1, BASELINE_V2, evaluate_baseline
from pncrl.junction import ACTION_NAMES, JunctionConfig
from pncrl.rewards import summarize
from pncrl.wrapper import ConstraintWrapper, WrapperMode

print("B_v1 cycle:", [ACTION_NAMES[a] for a in BASELINE_V1])
print("B_v2 cycle:", [ACTION_NAMES[a] for a in BASELINE_V2])

for version in ("v1", "v2"):
    wrapper = ConstraintWrapper(JunctionConfig(), mode=WrapperMode.SHIELD)
    records = evaluate_baseline(wrapper, version, episodes=50, seed=0)
    s = summarize(records, model=f"baseline_{version}")
    print(
        f"\nbaseline {version} over {s.episodes} episodes:"
        f"\n  episode length avg {s.timesteps_avg:.1f}"
        f" (min {s.timesteps_min}, max {s.timesteps_max})"
        f"\n  average junction waiting time {s.ajwt_avg:.2f}"
        f"\n  requested violations {s.violated_avg_pct:.3f}%"
    )

# Both cycles respect the signal automaton by construction, so the
# violation rate is exactly zero; the interesting comparison is survival
# time and waiting time, which a learned policy should beat (demo 05).
