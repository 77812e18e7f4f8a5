"""Discrete-time 4-way junction simulator.

Eight FIFO lanes grouped into four signal groups; one group may be green
at a time. Each step applies the signal action, services green lanes,
draws Poisson arrivals per lane, advances the clock, and checks
termination (queue overflow or the episode cap). Everything is driven by
a single seeded generator, so a (config, action sequence) pair fully
determines the trajectory.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .petri import SIGNAL_GROUPS

NUM_LANES = 8
NUM_ACTIONS = 9

# Fixed action indices: 0-3 switch a group to green, 4 is a no-op,
# 5-8 switch a group back to red.
ACTION_NAMES = (
    "RtoG_swne",
    "RtoG_we",
    "RtoG_sn",
    "RtoG_wnes",
    "DoNothing",
    "GtoR_swne",
    "GtoR_we",
    "GtoR_sn",
    "GtoR_wnes",
)
DO_NOTHING = 4

DEFAULT_LANE_GROUPS = {
    "swne": (0, 1),
    "we": (2, 3),
    "sn": (4, 5),
    "wnes": (6, 7),
}

# Turn lanes (swne/wnes groups) carry less traffic than the straight
# lanes; totals 1.32 cars/step across the junction.
DEFAULT_LANE_LAMBDAS = (0.09, 0.09, 0.24, 0.24, 0.24, 0.24, 0.09, 0.09)


class ConfigError(ValueError):
    """Invalid junction configuration."""


class LifecycleError(RuntimeError):
    """Operation on a terminated episode."""


@dataclass(frozen=True)
class Car:
    id: int
    lane: int
    arrival_step: int


@dataclass(frozen=True)
class JunctionConfig:
    # scalar (same rate on every lane) or one rate per lane
    lambda_per_lane: float | tuple[float, ...] = DEFAULT_LANE_LAMBDAS
    service_rate: int = 1
    queue_capacity: int = 30
    episode_cap: int = 1000
    lane_group_map: dict[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_LANE_GROUPS)
    )
    seed: int = 0

    def lane_lambdas(self) -> tuple[float, ...]:
        if isinstance(self.lambda_per_lane, (int, float)):
            return (float(self.lambda_per_lane),) * NUM_LANES
        return tuple(float(v) for v in self.lambda_per_lane)

    def validate(self):
        lams = self.lane_lambdas()
        if len(lams) != NUM_LANES:
            raise ConfigError(
                f"lambda_per_lane must be a scalar or {NUM_LANES} values, got {len(lams)}"
            )
        if any(v < 0 or not math.isfinite(v) for v in lams):
            raise ConfigError(f"lambda_per_lane entries must be finite and >= 0, got {lams}")
        if self.service_rate < 1:
            raise ConfigError("service_rate must be >= 1")
        if self.queue_capacity < 1:
            raise ConfigError("queue_capacity must be >= 1")
        if self.episode_cap < 1:
            raise ConfigError("episode_cap must be >= 1")
        if set(self.lane_group_map) != set(SIGNAL_GROUPS):
            raise ConfigError(f"lane_group_map must cover groups {SIGNAL_GROUPS}")
        covered = [l for pair in self.lane_group_map.values() for l in pair]
        if sorted(covered) != list(range(NUM_LANES)):
            raise ConfigError(
                f"lane_group_map must cover lanes 0..{NUM_LANES - 1} exactly once, got {sorted(covered)}"
            )


@dataclass
class DrivenCar:
    car: Car
    wait: int


@dataclass
class StepInfo:
    step: int
    action: int
    driven: list[DrivenCar]
    spawned: int
    terminated: bool
    reason: str | None
    raw_phase_conflict: bool

    @property
    def driven_count(self) -> int:
        return len(self.driven)


def sample_poisson(rng: np.random.Generator, mean: float) -> int:
    """Poisson draw by inversion of the cumulative sum; one uniform per call."""
    if mean < 0 or not math.isfinite(mean):
        raise ValueError(f"mean must be finite and >= 0, got {mean}")
    if mean == 0:
        rng.random()  # keep stream usage uniform across means
        return 0
    u = rng.random()
    k = 0
    p = math.exp(-mean)
    cdf = p
    while u > cdf:
        k += 1
        p *= mean / k
        cdf += p
    return k


class Junction:
    """Mutable episode state plus the step/observe dynamics.

    The raw environment never rejects an action: an out-of-phase signal
    change is applied anyway and flagged via `raw_phase_conflict`.
    Constraint enforcement lives in the wrapper, keeping this class
    usable for unconstrained ablations.
    """

    def __init__(self, config: JunctionConfig):
        config.validate()
        self.config = config
        self._lane_lambdas = config.lane_lambdas()
        self.reset()

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.step_count = 0
        self.lanes: list[deque[Car]] = [deque() for _ in range(NUM_LANES)]
        self.phase: str = "none"  # green group, or "none"
        self.rng = np.random.default_rng(self.config.seed if seed is None else seed)
        self.terminated = False
        self.termination_reason: str | None = None
        self._next_car_id = 0
        return self.observe()

    def observe(self) -> np.ndarray:
        """16 values: per lane, queue length then max waiting time."""
        obs = np.zeros(2 * NUM_LANES)
        for l, q in enumerate(self.lanes):
            if q:
                obs[2 * l] = len(q)
                obs[2 * l + 1] = self.step_count - q[0].arrival_step
        return obs

    def step(self, action: int) -> tuple[np.ndarray, StepInfo]:
        if self.terminated:
            raise LifecycleError("episode already terminated")
        if not 0 <= action < NUM_ACTIONS:
            raise ValueError(f"action index out of range: {action}")

        # 1. signal change
        conflict = False
        if action < 4:
            group = SIGNAL_GROUPS[action]
            if self.phase != "none":
                conflict = True
            self.phase = group
        elif action > 4:
            group = SIGNAL_GROUPS[action - 5]
            if self.phase == group:
                self.phase = "none"
            else:
                conflict = True

        # 2. service green lanes
        driven: list[DrivenCar] = []
        if self.phase != "none":
            for lane in self.config.lane_group_map[self.phase]:
                q = self.lanes[lane]
                for _ in range(min(self.config.service_rate, len(q))):
                    car = q.popleft()
                    driven.append(DrivenCar(car, self.step_count - car.arrival_step))

        # 3. arrivals
        spawned = 0
        for lane in range(NUM_LANES):
            k = sample_poisson(self.rng, self._lane_lambdas[lane])
            for _ in range(k):
                self.lanes[lane].append(Car(self._next_car_id, lane, self.step_count))
                self._next_car_id += 1
            spawned += k

        # 4. clock
        self.step_count += 1

        # 5. termination
        reason = None
        if any(len(q) > self.config.queue_capacity for q in self.lanes):
            reason = "overflow"
        elif self.step_count >= self.config.episode_cap:
            reason = "cap"
        if reason is not None:
            self.terminated = True
            self.termination_reason = reason

        info = StepInfo(
            step=self.step_count,
            action=action,
            driven=driven,
            spawned=spawned,
            terminated=self.terminated,
            reason=reason,
            raw_phase_conflict=conflict,
        )
        return self.observe(), info

    def total_cars(self) -> int:
        return sum(len(q) for q in self.lanes)


def step_info_csv_header() -> list[str]:
    return ["step", "action", "driven_count", "driven_wait_times", "spawned", "terminated", "reason"]


def step_info_csv_row(info: StepInfo) -> list[str]:
    return [
        str(info.step),
        str(info.action),
        str(info.driven_count),
        ";".join(str(d.wait) for d in info.driven),
        str(info.spawned),
        str(info.terminated).lower(),
        info.reason or "",
    ]
