"""Parametric 5-term reward and the two episode metrics.

Reward terms, weighted by non-negative w0..w4:
  + 200 * w0 when the requested action satisfied the constraints
  + w1 * max(cars driven this step - cars spawned this step, 0)
  - w2 * sum over lanes of the max waiting time among this step's driven
    cars in that lane
  - w3 * max over lanes of the max current waiting time in the pre-step
    observation
  + w4 * current step index
Empty maxima contribute 0.

Metrics: episode length (timesteps reached) and the mean waiting time
over all driven cars (average junction waiting time, AJWT).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .junction import NUM_LANES, StepInfo


@dataclass(frozen=True)
class RewardWeights:
    w0: float = 0.0
    w1: float = 0.0
    w2: float = 0.0
    w3: float = 0.0
    w4: float = 0.0

    def __post_init__(self):
        for name in ("w0", "w1", "w2", "w3", "w4"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w0, self.w1, self.w2, self.w3, self.w4)


def compute_reward(
    prev_obs: np.ndarray,
    info: StepInfo,
    constraint_fulfilled: bool,
    step: int,
    w: RewardWeights,
) -> float:
    r = 0.0
    if constraint_fulfilled:
        r += 200.0 * w.w0

    r += w.w1 * max(info.driven_count - info.spawned, 0)

    if w.w2:
        per_lane_max: dict[int, int] = {}
        for d in info.driven:
            lane = d.car.lane
            per_lane_max[lane] = max(per_lane_max.get(lane, 0), d.wait)
        r -= w.w2 * sum(per_lane_max.values())

    if w.w3:
        waits = prev_obs[1 : 2 * NUM_LANES : 2]
        r -= w.w3 * float(waits.max()) if len(waits) else 0.0

    r += w.w4 * step
    return r


@dataclass
class EpisodeRecord:
    """Per-episode trace used for metric aggregation."""

    driven: list[tuple[int, int, int]] = field(default_factory=list)  # (car id, lane, wait)
    violations_requested: int = 0
    total_requests: int = 0
    end_step: int = 0
    rewards: list[float] = field(default_factory=list)

    def record_step(self, info: StepInfo, constraint_fulfilled: bool, reward: float):
        for d in info.driven:
            self.driven.append((d.car.id, d.car.lane, d.wait))
        self.total_requests += 1
        if not constraint_fulfilled:
            self.violations_requested += 1
        self.end_step = info.step
        self.rewards.append(reward)

    @property
    def total_return(self) -> float:
        return sum(self.rewards)

    @property
    def violation_rate(self) -> float:
        if self.total_requests == 0:
            return 0.0
        return self.violations_requested / self.total_requests


def ajwt(rec: EpisodeRecord) -> float:
    """Mean waiting time over driven cars; 0 when no car was driven."""
    if not rec.driven:
        return 0.0
    return sum(w for _, _, w in rec.driven) / len(rec.driven)


def timesteps_reached(rec: EpisodeRecord) -> int:
    return rec.end_step


@dataclass
class EvalSummary:
    """Aggregate over evaluation episodes, leaderboard-row shaped."""

    model: str
    params: str
    episodes: int
    timesteps_min: int
    timesteps_avg: float
    timesteps_max: int
    violated_min_pct: float
    violated_avg_pct: float
    violated_max_pct: float
    ajwt_avg: float
    ajwt_max: float

    CSV_HEADER = [
        "model",
        "params",
        "episodes",
        "timesteps_min",
        "timesteps_avg",
        "timesteps_max",
        "violated_min_pct",
        "violated_avg_pct",
        "violated_max_pct",
        "ajwt_avg",
        "ajwt_max",
    ]

    def csv_row(self) -> list[str]:
        return [
            self.model,
            self.params,
            str(self.episodes),
            str(self.timesteps_min),
            repr(self.timesteps_avg),
            str(self.timesteps_max),
            repr(self.violated_min_pct),
            repr(self.violated_avg_pct),
            repr(self.violated_max_pct),
            repr(self.ajwt_avg),
            repr(self.ajwt_max),
        ]


def summarize(records: list[EpisodeRecord], model: str = "", params: str = "") -> EvalSummary:
    if not records:
        raise ValueError("no episode records to summarize")
    lengths = [timesteps_reached(r) for r in records]
    rates = [100.0 * r.violation_rate for r in records]
    waits = [ajwt(r) for r in records]
    return EvalSummary(
        model=model,
        params=params,
        episodes=len(records),
        timesteps_min=min(lengths),
        timesteps_avg=sum(lengths) / len(lengths),
        timesteps_max=max(lengths),
        violated_min_pct=min(rates),
        violated_avg_pct=sum(rates) / len(rates),
        violated_max_pct=max(rates),
        ajwt_avg=sum(waits) / len(waits),
        ajwt_max=max(waits),
    )
