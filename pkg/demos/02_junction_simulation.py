"""Drive the raw junction simulator by hand.

Eight FIFO lanes feed a four-way junction; lanes are paired into four
signal groups. Actions 0-3 switch a group green, 4 does nothing, 5-8
switch a group back to red. Cars arrive by a seeded Poisson process and
one car per green lane is served each step.

Run with:  python3 demos/02_junction_simulation.py
"""

from pncrl.junction import ACTION_NAMES, Junction, JunctionConfig

cfg = JunctionConfig(seed=7)
env = Junction(cfg)
obs = env.reset()

print("Lane groups:", cfg.lane_group_map)
print("Arrival rates per lane:", cfg.lane_lambdas())
print("Initial observation (count, max-wait per lane):")
print(obs.reshape(8, 2))

# Hold the swne group green for a while, then rotate to sn.
script = [0] + [4] * 14 + [5, 2] + [4] * 14 + [7]
total_driven = 0
for action in script:
    obs, info = env.step(action)
    total_driven += len(info.driven)
    if info.driven:
        served = ", ".join(f"lane {c.car.lane} (waited {c.wait})" for c in info.driven)
        print(f"step {info.step:3d} {ACTION_NAMES[action]:>9}: drove {served}")
    if info.terminated:
        print("terminated:", info.reason)
        break

print(f"\nDrove {total_driven} cars in {env.step_count} steps")
print("Queue lengths now:", [len(q) for q in env.lanes])

# The raw environment never rejects an action; conflicting requests are
# only flagged. Constraint enforcement lives in the wrapper (demo 03).
env.phase = "sn"
_, info = env.step(0)  # ask for a second green while sn is green
print("\nRaw conflicting request flagged:", info.raw_phase_conflict)
