"""The constraint wrapper: a Petri net as a safety automaton.

The wrapper pairs the junction with the traffic-light net. An action is
valid when its mapped transition is enabled in the current marking (the
neutral action maps to no transition and is always valid). Three
enforcement modes are available:

  shield  - invalid requests are replaced with the neutral action
  penalty - invalid requests pass through raw; the reward can punish them
  mask    - the agent is expected to pick from the valid set itself

Run with:  python3 demos/03_constraint_wrapper.py
"""

import numpy as np

from pncrl.junction import ACTION_NAMES, JunctionConfig
from pncrl.wrapper import ConstraintWrapper, WrapperMode

w = ConstraintWrapper(JunctionConfig(seed=11), mode=WrapperMode.SHIELD)

print("Marking:", dict(w.marking.tokens))
print("Valid actions at all-red:", [ACTION_NAMES[a] for a in w.valid_actions()])

# Go green on the we group; the valid set shrinks to {DoNothing, GtoR_we}.
w.step(1)
print("\nAfter RtoG_we the marking is", dict(w.marking.tokens))
print("Valid actions now:", [ACTION_NAMES[a] for a in w.valid_actions()])

# Request a conflicting green. The shield swaps it for DoNothing and the
# result records that the constraint was not fulfilled.
res = w.step(2)
print("\nRequested RtoG_sn while we is green:")
print("  applied:", ACTION_NAMES[res.applied_action])
print("  constraint fulfilled:", res.constraint_fulfilled)
print("  phase unchanged:", w.env.phase)

# The marking stays synchronized with the environment after every step;
# the boolean mask view is what a masked learner consumes.
print("\nValid-action mask:", w.valid_mask().astype(int))

# The encoded combined state is a 25-vector: 9 place token counts followed
# by the 16 observation values normalized to [0, 1].
v = w.encoded_state()
print("Encoded state tokens:", v[:9].astype(int))
print("Encoded observation slice:", np.round(v[9:], 3))

# A random policy over all 9 actions violates often; restricted to the
# mask it never does.
rng = np.random.default_rng(0)
violations = 0
w.reset(seed=11)
for _ in range(500):
    if w.terminated:
        w.reset(seed=int(rng.integers(2**32)))
    res = w.step(int(rng.integers(9)))
    violations += not res.constraint_fulfilled
print(f"\nRandom over all actions: {violations}/500 violations")

violations = 0
w.reset(seed=11)
for _ in range(500):
    if w.terminated:
        w.reset(seed=int(rng.integers(2**32)))
    valid = w.valid_actions()
    res = w.step(int(rng.choice(valid)))
    violations += not res.constraint_fulfilled
print(f"Random over valid set:   {violations}/500 violations")
