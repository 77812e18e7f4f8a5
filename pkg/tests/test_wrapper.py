import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pncrl.junction import DO_NOTHING, JunctionConfig
from pncrl.petri import traffic_light_net
from pncrl.rewards import RewardWeights
from pncrl.wrapper import (
    CombinedState,
    ConstraintWrapper,
    NormalizationCaps,
    WrapperMode,
    check_sync,
    default_action_mapping,
    default_place_mapping,
    encode_state,
    valid_actions,
)

NET = traffic_light_net()
MAPPING = default_action_mapping(NET)


def make_wrapper(mode=WrapperMode.SHIELD, **jcfg):
    cfg = dict(lambda_per_lane=0.2, seed=3)
    cfg.update(jcfg)
    return ConstraintWrapper(JunctionConfig(**cfg), mode=mode)


class TestValidActions:
    def test_all_red(self):
        assert valid_actions(NET, NET.initial_marking, MAPPING) == [0, 1, 2, 3, 4]

    def test_green_sn(self):
        m = NET.fire(NET.initial_marking, "RtoG_sn")
        assert valid_actions(NET, m, MAPPING) == [4, 7]

    def test_emptied_net_leaves_neutral_only(self):
        m = NET.marking({})
        assert valid_actions(NET, m, MAPPING) == [4]

    def test_never_empty(self):
        for m in (NET.initial_marking, NET.marking({}), NET.fire(NET.initial_marking, "RtoG_we")):
            assert DO_NOTHING in valid_actions(NET, m, MAPPING)


class TestWrappedStep:
    def test_valid_rtog_fires(self):
        w = make_wrapper(mode=WrapperMode.MASK)
        res = w.step(1)  # RtoG_we
        assert res.constraint_fulfilled
        assert res.applied_action == 1
        assert w.marking["Green_we"] == 1
        assert w.env.phase == "we"

    def test_shield_replaces_invalid(self):
        w = make_wrapper(mode=WrapperMode.SHIELD)
        w.step(1)  # green we
        res = w.step(2)  # RtoG_sn is now invalid
        assert not res.constraint_fulfilled
        assert res.applied_action == DO_NOTHING
        assert w.env.phase == "we"

    def test_penalty_keeps_marking_and_phase(self):
        w = ConstraintWrapper(
            JunctionConfig(lambda_per_lane=0.2, seed=3),
            mode=WrapperMode.PENALTY,
            weights=RewardWeights(w0=1.0),
        )
        w.step(1)  # green we
        marking_before = w.marking
        res = w.step(2)  # invalid request
        assert not res.constraint_fulfilled
        assert res.applied_action == 2  # passes through raw
        assert w.marking == marking_before
        assert w.env.phase == "we"
        # w0 bonus withheld: only the w0 term is active and the flag is false
        assert res.reward == 0.0

    def test_reward_bonus_on_valid(self):
        w = ConstraintWrapper(
            JunctionConfig(lambda_per_lane=0.0, seed=3),
            mode=WrapperMode.PENALTY,
            weights=RewardWeights(w0=1.0),
        )
        res = w.step(DO_NOTHING)
        assert res.reward == 200.0


class TestCheckSync:
    def test_initial_state(self):
        w = make_wrapper()
        pm = default_place_mapping()
        assert check_sync(NET, w.marking, w.env, pm)

    def test_mismatched_green(self):
        w = make_wrapper()
        pm = default_place_mapping()
        m = NET.fire(NET.initial_marking, "RtoG_sn")
        assert not check_sync(NET, m, w.env, pm)  # env phase is none
        w.env.phase = "sn"
        assert check_sync(NET, m, w.env, pm)
        w.env.phase = "we"
        assert not check_sync(NET, m, w.env, pm)


class TestEncodeState:
    def test_reset_layout(self):
        w = make_wrapper()
        v = w.encoded_state()
        assert v.shape == (25,)
        assert list(v[:9]) == [1, 0, 1, 0, 1, 0, 1, 0, 1]
        assert np.all(v[9:] == 0)

    def test_count_normalization_hits_one(self):
        obs = np.zeros(16)
        obs[0] = 15
        cs = CombinedState(NET.initial_marking, obs)
        v = encode_state(cs, NormalizationCaps(count_cap=15, wait_cap=1000))
        assert v[9] == 1.0

    def test_wait_clip(self):
        obs = np.zeros(16)
        obs[1] = 2000
        cs = CombinedState(NET.initial_marking, obs)
        v = encode_state(cs, NormalizationCaps(count_cap=15, wait_cap=1000))
        assert v[10] == 1.0

    def test_caps_positive(self):
        with pytest.raises(ValueError):
            NormalizationCaps(0, 10)


@settings(max_examples=20, deadline=None)
@given(
    st.sampled_from([WrapperMode.SHIELD, WrapperMode.PENALTY, WrapperMode.MASK]),
    st.integers(0, 2**32 - 1),
    st.lists(st.integers(0, 8), min_size=1, max_size=80),
)
def test_marking_stays_authoritative(mode, seed, requests):
    pm = default_place_mapping()
    w = make_wrapper(mode=mode, seed=seed)
    for req in requests:
        if w.terminated:
            break
        pre_valid = w.valid_actions()
        res = w.step(req)
        if mode is WrapperMode.SHIELD:
            assert res.applied_action in pre_valid
        # wrapper asserts sync internally; double-check from outside
        assert check_sync(w.net, w.marking, w.env, pm)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 8), min_size=1, max_size=40))
def test_mode_equivalence_on_valid_requests(seed, requests):
    wrappers = {
        mode: make_wrapper(mode=mode, seed=seed)
        for mode in (WrapperMode.SHIELD, WrapperMode.PENALTY, WrapperMode.MASK)
    }
    for req in requests:
        base = wrappers[WrapperMode.SHIELD]
        if base.terminated or req not in base.valid_actions():
            continue
        results = {mode: w.step(req) for mode, w in wrappers.items()}
        obs = {mode: r.next.observation for mode, r in results.items()}
        marks = {mode: r.next.marking for mode, r in results.items()}
        assert len({tuple(o) for o in obs.values()}) == 1
        assert len(set(marks.values())) == 1
        assert all(r.constraint_fulfilled for r in results.values())
