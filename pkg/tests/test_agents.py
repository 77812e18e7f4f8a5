import math
from dataclasses import replace

import numpy as np
import pytest

from pncrl.agents import (
    BASELINE_V1,
    BASELINE_V2,
    AgentConfig,
    AgentMode,
    BaselineCycle,
    ReplayBuffer,
    Transition,
    compute_targets,
    epsilon_at,
    evaluate_baseline,
    epsilon_at,
    select_action,
    train_loop,
)
from pncrl.junction import JunctionConfig
from pncrl.neural import MLP
from pncrl.rewards import RewardWeights
from pncrl.wrapper import ConstraintWrapper, WrapperMode

PAPER_CFG = AgentConfig()
DESK_CFG = AgentConfig().desk()


class FixedQNet:
    """Stub returning a constant Q row; only forward() is used."""

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float)

    def forward(self, x):
        if np.ndim(x) == 2:
            return np.tile(self.q, (len(x), 1))
        return self.q.copy()


class TestEpsilonSchedule:
    def test_start(self):
        assert epsilon_at(0, PAPER_CFG) == 1.0

    def test_final_after_decay(self):
        assert epsilon_at(400_000, PAPER_CFG) == 0.04
        assert epsilon_at(10_000_000, PAPER_CFG) == 0.04

    def test_midpoint(self):
        assert epsilon_at(200_000, PAPER_CFG) == pytest.approx(0.52)

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            epsilon_at(-1, PAPER_CFG)


class TestSelectAction:
    def test_greedy_unmasked(self):
        q = FixedQNet([9, 1, 1, 1, 1, 1, 1, 1, 1])
        mask = np.ones(9, dtype=bool)
        a = select_action(q, np.zeros(25), mask, 0.0, np.random.default_rng(0), AgentMode.DQN)
        assert a == 0

    def test_masked_argmax_lowest_index_tie(self):
        q = FixedQNet([9, 1, 1, 1, 1, 1, 1, 1, 1])
        mask = np.zeros(9, dtype=bool)
        mask[[4, 7]] = True
        a = select_action(q, np.zeros(25), mask, 0.0, np.random.default_rng(0), AgentMode.PN_CDQN)
        assert a == 4

    def test_masked_exploration_uniform_over_valid(self):
        q = FixedQNet(np.zeros(9))
        mask = np.zeros(9, dtype=bool)
        mask[[4, 7]] = True
        rng = np.random.default_rng(1)
        draws = [
            select_action(q, np.zeros(25), mask, 1.0, rng, AgentMode.PN_CDQN)
            for _ in range(10_000)
        ]
        counts = {a: draws.count(a) for a in set(draws)}
        assert set(counts) == {4, 7}
        # binomial 3-sigma band around 50/50
        sigma = math.sqrt(10_000 * 0.25)
        assert abs(counts[4] - 5000) < 3 * sigma

    def test_unmasked_exploration_covers_all(self):
        q = FixedQNet(np.zeros(9))
        mask = np.zeros(9, dtype=bool)
        mask[4] = True
        rng = np.random.default_rng(2)
        draws = {
            select_action(q, np.zeros(25), mask, 1.0, rng, AgentMode.DQN)
            for _ in range(2000)
        }
        assert draws == set(range(9))

    def test_empty_mask_rejected_in_masked_mode(self):
        q = FixedQNet(np.zeros(9))
        with pytest.raises(AssertionError):
            select_action(q, np.zeros(25), np.zeros(9, dtype=bool), 0.0,
                          np.random.default_rng(0), AgentMode.PN_CDQN)


def transition(reward=1.0, done=False, mask_true=(4, 7)):
    mask = np.zeros(9, dtype=bool)
    mask[list(mask_true)] = True
    return Transition(
        state=np.zeros(25),
        action=0,
        reward=reward,
        next_state=np.zeros(25),
        done=done,
        next_valid_mask=mask,
        violated=False,
    )


class TestComputeTargets:
    ASC = FixedQNet(np.arange(9.0))  # Q'(next) = [0..8]

    def test_terminal_ignores_bootstrap(self):
        y = compute_targets(self.ASC, [transition(reward=-3.0, done=True)], 0.9, AgentMode.PN_CDQN)
        assert y[0] == -3.0

    def test_masked_max(self):
        y = compute_targets(self.ASC, [transition(reward=1.0)], 0.9, AgentMode.PN_CDQN)
        assert y[0] == pytest.approx(1 + 0.9 * 7)

    def test_unmasked_max(self):
        y = compute_targets(self.ASC, [transition(reward=1.0)], 0.9, AgentMode.DQN)
        assert y[0] == pytest.approx(1 + 0.9 * 8)

    def test_empty_batch_rejected(self):
        with pytest.raises(ValueError):
            compute_targets(self.ASC, [], 0.9, AgentMode.DQN)

    def test_brute_force_oracle(self):
        # independent maximum: enumerate valid actions per item
        rng = np.random.default_rng(0)
        net = MLP((25, 12, 9), rng=rng)
        for _ in range(200):
            batch = []
            for _ in range(8):
                mask = rng.random(9) < 0.5
                mask[4] = True
                batch.append(
                    Transition(
                        state=rng.normal(size=25),
                        action=int(rng.integers(9)),
                        reward=float(rng.normal()),
                        next_state=rng.normal(size=25),
                        done=bool(rng.random() < 0.2),
                        next_valid_mask=mask,
                        violated=False,
                    )
                )
            got = compute_targets(net, batch, 0.9, AgentMode.PN_CDQN)
            # same Q matrix, independent enumeration of the masked maximum
            q_next = net.forward(np.stack([t.next_state for t in batch]))
            for i, t in enumerate(batch):
                if t.done:
                    expected = t.reward
                else:
                    expected = t.reward + 0.9 * max(
                        q_next[i][a] for a in range(9) if t.next_valid_mask[a]
                    )
                assert got[i] == expected


class TestReplayBuffer:
    def test_capacity_ring(self):
        buf = ReplayBuffer(3, np.random.default_rng(0))
        for i in range(5):
            buf.add(transition(reward=float(i)))
        assert len(buf) == 3
        assert buf.inserted == 5

    def test_uniform_sampling(self):
        buf = ReplayBuffer(10, np.random.default_rng(3))
        for i in range(10):
            buf.add(transition(reward=float(i)))
        n = 50_000
        counts = np.zeros(10)
        for t in buf.sample(n):
            counts[int(t.reward)] += 1
        p = 0.1
        sigma = math.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3 * sigma)

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            ReplayBuffer(3, np.random.default_rng(0)).sample(1)


class TestBaselines:
    def test_v1_prefix(self):
        c = BaselineCycle("v1")
        assert [c.next_action() for _ in range(3)] == [3, 8, 0]

    def test_v2_sixth_call_is_neutral(self):
        c = BaselineCycle("v2")
        actions = [c.next_action() for _ in range(6)]
        assert actions[5] == 4

    def test_v1_wraps(self):
        c = BaselineCycle("v1")
        actions = [c.next_action() for _ in range(9)]
        assert actions[8] == BASELINE_V1[0]

    def test_unknown_version(self):
        with pytest.raises(ValueError):
            BaselineCycle("v3")

    def test_sequences_lengths(self):
        assert len(BASELINE_V1) == 8
        assert len(BASELINE_V2) == 10

    @pytest.mark.parametrize("version", ["v1", "v2"])
    def test_baselines_never_violate(self, version):
        wrapper = ConstraintWrapper(JunctionConfig(seed=5), mode=WrapperMode.SHIELD)
        records = evaluate_baseline(wrapper, version, episodes=5, seed=1)
        assert all(r.violations_requested == 0 for r in records)


class TestTrainLoop:
    def small_wrapper(self, mode=WrapperMode.MASK, seed=0):
        return ConstraintWrapper(
            JunctionConfig(seed=seed),
            mode=mode,
            weights=RewardWeights(w2=1.0, w3=1.5),
        )

    def smoke_cfg(self, **kw):
        cfg = replace(
            DESK_CFG,
            random_steps=50,
            learning_starts=50,
            epsilon_decay_steps=200,
            max_steps=600,
            batch_size=16,
        )
        return replace(cfg, **kw)

    def test_zero_steps_untrained(self):
        res = train_loop(self.small_wrapper(), self.smoke_cfg(max_steps=0), seed=0)
        assert res.log == []
        assert res.global_steps == 0

    def test_deterministic_logs(self):
        a = train_loop(self.small_wrapper(seed=3), self.smoke_cfg(), seed=9)
        b = train_loop(self.small_wrapper(seed=3), self.smoke_cfg(), seed=9)
        assert [r.csv_row() for r in a.log] == [r.csv_row() for r in b.log]
        assert a.model.save_bytes() == b.model.save_bytes()

    def test_masked_training_never_violates(self):
        res = train_loop(self.small_wrapper(), self.smoke_cfg(), seed=1)
        assert all(r.violations_requested == 0 for r in res.log)

    def test_unmasked_training_violates(self):
        wrapper = ConstraintWrapper(
            JunctionConfig(seed=0),
            mode=WrapperMode.PENALTY,
            weights=RewardWeights(w0=1.0),
        )
        cfg = self.smoke_cfg(mode=AgentMode.DQN)
        res = train_loop(wrapper, cfg, seed=1)
        assert sum(r.violations_requested for r in res.log) > 0


def test_random_policy_violation_probabilities():
    # valid sets have size 5 (all red) and 2 (one green) out of 9
    wrapper = ConstraintWrapper(JunctionConfig(seed=2), mode=WrapperMode.SHIELD)
    rng = np.random.default_rng(0)
    stats = {"red": [0, 0], "green": [0, 0]}
    steps = 100_000
    wrapper.reset(seed=int(rng.integers(2**63)))
    for _ in range(steps):
        if wrapper.terminated:
            wrapper.reset(seed=int(rng.integers(2**63)))
        key = "green" if wrapper.marking["Safe"] == 0 else "red"
        res = wrapper.step(int(rng.integers(9)))
        stats[key][0] += 1
        if not res.constraint_fulfilled:
            stats[key][1] += 1
    for key, p in (("red", 4 / 9), ("green", 7 / 9)):
        n, k = stats[key]
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(k - n * p) < 3 * sigma, (key, k / n)
