"""Constraint wrapper around the junction environment.

Keeps a Petri net marking synchronized with the environment, derives the
valid action set from the enabled transitions, and enforces it in one of
three modes:

  shield  - an invalid request is replaced by the neutral DoNothing
            action before execution;
  penalty - the request passes through, the marking refuses to fire, the
            phase is re-synchronized from the marking, and the reward's
            constraint flag goes false;
  mask    - like penalty on the environment side, but intended for agents
            that consume the valid-action mask directly.

The marking stays authoritative in every mode: after each step the
environment phase is whatever the marking implies, and `check_sync` is
asserted.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .junction import (
    ACTION_NAMES,
    DO_NOTHING,
    NUM_ACTIONS,
    Junction,
    JunctionConfig,
    StepInfo,
)
from .petri import SIGNAL_GROUPS, Marking, PetriNet, traffic_light_net
from .rewards import RewardWeights, compute_reward


class WrapperMode(str, Enum):
    SHIELD = "shield"
    PENALTY = "penalty"
    MASK = "mask"


class SyncError(AssertionError):
    """Marking and environment state disagree; indicates a wrapper bug."""


def default_action_mapping(net: PetriNet) -> dict[int, str | None]:
    """Action index -> transition id; DoNothing maps to no transition."""
    mapping: dict[int, str | None] = {}
    for idx, name in enumerate(ACTION_NAMES):
        mapping[idx] = name if name in net.transitions else None
    if set(ACTION_NAMES) - {"DoNothing"} != set(net.transitions):
        raise ValueError("net transitions do not match the junction action space")
    return mapping


def validate_action_mapping(net: PetriNet, mapping: dict[int, str | None]):
    mapped = [t for t in mapping.values() if t is not None]
    if len(set(mapped)) != len(mapped):
        raise ValueError("action mapping is not injective over mapped actions")
    unknown = set(mapped) - set(net.transitions)
    if unknown:
        raise ValueError(f"action mapping targets unknown transitions: {sorted(unknown)}")
    uncovered = set(net.transitions) - set(mapped)
    if uncovered:
        raise ValueError(f"transitions not reachable through any action: {sorted(uncovered)}")


@dataclass(frozen=True)
class PlaceMapping:
    """Place -> environment predicate, plus the mutually-exclusive places
    whose predicate must also *fail* when the place is unmarked."""

    predicates: dict[str, Callable[[Junction], bool]]
    exclusive: frozenset[str]


def default_place_mapping() -> PlaceMapping:
    predicates: dict[str, Callable[[Junction], bool]] = {}
    for g in SIGNAL_GROUPS:
        predicates[f"Green_{g}"] = lambda env, g=g: env.phase == g
        predicates[f"Red_{g}"] = lambda env, g=g: env.phase != g
    predicates["Safe"] = lambda env: env.phase == "none"
    return PlaceMapping(
        predicates=predicates,
        exclusive=frozenset(f"Green_{g}" for g in SIGNAL_GROUPS),
    )


@dataclass(frozen=True)
class CombinedState:
    """Agent-internal marking paired with the external observation."""

    marking: Marking
    observation: np.ndarray


@dataclass
class WrappedStepResult:
    next: CombinedState
    reward: float
    constraint_fulfilled: bool
    requested_action: int
    applied_action: int
    info: StepInfo


def valid_actions(
    net: PetriNet, m: Marking, action_mapping: dict[int, str | None]
) -> list[int]:
    """Action indices whose transition is enabled, plus unmapped actions.

    Ordered by action index; never empty (the unmapped neutral action is
    always present).
    """
    out = []
    for a in sorted(action_mapping):
        t = action_mapping[a]
        if t is None or net.is_enabled(m, t):
            out.append(a)
    return out


def valid_action_mask(
    net: PetriNet, m: Marking, action_mapping: dict[int, str | None]
) -> np.ndarray:
    mask = np.zeros(NUM_ACTIONS, dtype=bool)
    mask[valid_actions(net, m, action_mapping)] = True
    return mask


def check_sync(net: PetriNet, m: Marking, env: Junction, place_map: PlaceMapping) -> bool:
    for p in net.places:
        pred = place_map.predicates[p]
        if m[p] >= 1 and not pred(env):
            return False
        if m[p] == 0 and p in place_map.exclusive and pred(env):
            return False
    return True


@dataclass(frozen=True)
class NormalizationCaps:
    count_cap: float
    wait_cap: float

    def __post_init__(self):
        if self.count_cap <= 0 or self.wait_cap <= 0:
            raise ValueError("normalization caps must be positive")


def encode_state(cs: CombinedState, caps: NormalizationCaps) -> np.ndarray:
    """Fixed 25-value network input.

    Layout: the marking's token counts in place declaration order (9 for
    the traffic net), then the 16 observation values with queue lengths
    divided by `count_cap` and waiting times by `wait_cap`, each clipped
    to [0, 1].
    """
    tokens = np.asarray(cs.marking.counts, dtype=float)
    obs = cs.observation.astype(float).copy()
    obs[0::2] = np.clip(obs[0::2] / caps.count_cap, 0.0, 1.0)
    obs[1::2] = np.clip(obs[1::2] / caps.wait_cap, 0.0, 1.0)
    return np.concatenate([tokens, obs])


def phase_from_marking(m: Marking) -> str:
    for g in SIGNAL_GROUPS:
        if m[f"Green_{g}"] >= 1:
            return g
    return "none"


class ConstraintWrapper:
    """Owns one junction episode plus the synchronized Petri net marking."""

    def __init__(
        self,
        config: JunctionConfig,
        net: PetriNet | None = None,
        mode: WrapperMode = WrapperMode.SHIELD,
        action_mapping: dict[int, str | None] | None = None,
        place_mapping: PlaceMapping | None = None,
        weights: RewardWeights = RewardWeights(),
    ):
        self.net = net if net is not None else traffic_light_net()
        self.mode = WrapperMode(mode)
        self.action_mapping = (
            action_mapping if action_mapping is not None else default_action_mapping(self.net)
        )
        validate_action_mapping(self.net, self.action_mapping)
        self.place_mapping = place_mapping if place_mapping is not None else default_place_mapping()
        self.weights = weights
        self.env = Junction(config)
        self.caps = NormalizationCaps(
            count_cap=config.queue_capacity, wait_cap=config.episode_cap
        )
        self.marking = self.net.initial_marking
        self._obs = self.env.observe()

    @property
    def terminated(self) -> bool:
        return self.env.terminated

    def reset(self, seed: int | None = None) -> CombinedState:
        self._obs = self.env.reset(seed=seed)
        self.marking = self.net.initial_marking
        self._assert_sync()
        return self.state()

    def state(self) -> CombinedState:
        return CombinedState(self.marking, self._obs)

    def encoded_state(self) -> np.ndarray:
        return encode_state(self.state(), self.caps)

    def valid_actions(self) -> list[int]:
        return valid_actions(self.net, self.marking, self.action_mapping)

    def valid_mask(self) -> np.ndarray:
        return valid_action_mask(self.net, self.marking, self.action_mapping)

    def step(self, requested: int) -> WrappedStepResult:
        allowed = self.valid_actions()
        fulfilled = requested in allowed

        if self.mode is WrapperMode.SHIELD and not fulfilled:
            applied = DO_NOTHING
        else:
            applied = requested

        transition = self.action_mapping[applied]
        if transition is not None and self.net.is_enabled(self.marking, transition):
            self.marking = self.net.fire(self.marking, transition)

        prev_obs = self._obs
        self._obs, info = self.env.step(applied)
        # the marking is authoritative; undo any phase overwrite the raw
        # environment tolerated
        self.env.phase = phase_from_marking(self.marking)

        reward = compute_reward(prev_obs, info, fulfilled, info.step, self.weights)
        self._assert_sync()
        return WrappedStepResult(
            next=self.state(),
            reward=reward,
            constraint_fulfilled=fulfilled,
            requested_action=requested,
            applied_action=applied,
            info=info,
        )

    def _assert_sync(self):
        if not check_sync(self.net, self.marking, self.env, self.place_mapping):
            raise SyncError(
                f"marking {self.marking!r} out of sync with phase {self.env.phase!r}"
            )
