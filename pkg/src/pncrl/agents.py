"""DQN and constraint-masked DQN agents, replay buffer, epsilon-greedy
policy, round-robin baselines, and the training / evaluation loops.

The masked variant (`pn_cdqn`) restricts exploration, the greedy policy,
and the bootstrap maximum to the valid-action set derived from the Petri
net marking, so it never requests an invalid action. The plain `dqn`
variant ignores the mask everywhere and relies on the wrapper's penalty
or shield to stay safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .junction import NUM_ACTIONS
from .neural import MLP, sync_target
from .rewards import EpisodeRecord
from .wrapper import ConstraintWrapper


class AgentMode(str, Enum):
    DQN = "dqn"
    PN_CDQN = "pn_cdqn"


@dataclass(frozen=True)
class AgentConfig:
    mode: AgentMode = AgentMode.PN_CDQN
    gamma: float = 0.95
    lr: float = 0.001
    epsilon_start: float = 1.0
    epsilon_final: float = 0.04
    epsilon_decay_steps: int = 400_000
    random_steps: int = 200_000
    learning_starts: int = 200_000
    batch_size: int = 64
    buffer_capacity: int = 100_000
    tau: float = 0.005
    train_every: int = 4
    max_steps: int = 15_000_000
    grad_clip: float | None = None
    reward_scale: float = 1.0
    hidden_sizes: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.epsilon_final <= 1.0:
            raise ValueError("epsilon_final must be in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        for name in ("epsilon_decay_steps", "random_steps", "learning_starts",
                     "batch_size", "buffer_capacity", "train_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive")
        if self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")

    def desk(self) -> "AgentConfig":
        """Scaled-down profile for desktop-scale runs.

        Shrinking the budget from 15M to 300k steps needs more than
        scaled step counts; the optimizer has to move faster and stay
        stable while doing so:
        - grad_clip bounds the global gradient norm; the first large
          bootstrap targets otherwise kill every rectifier unit in one
          violent update, leaving a state-blind bias-only network.
        - reward_scale brings the raw penalties (tens per step) down to
          the O(1) range that the glorot-initialized net and a plain SGD
          step size are matched to.
        - a higher lr, per-step training, and a long exploration tail
          (decay over a third of the budget) let the bootstrap values
          propagate across the few-hundred-step horizon that separates
          queue-serving policies from queue-overflow ones.
        """
        return replace(
            self,
            lr=0.01,
            epsilon_final=0.05,
            epsilon_decay_steps=100_000,
            random_steps=5_000,
            learning_starts=5_000,
            train_every=1,
            max_steps=300_000,
            grad_clip=10.0,
            reward_scale=0.01,
        )


def epsilon_at(step: int, cfg: AgentConfig) -> float:
    """Linear decay from epsilon_start to epsilon_final over the decay window."""
    if step < 0:
        raise ValueError("step must be >= 0")
    if step >= cfg.epsilon_decay_steps:
        return cfg.epsilon_final
    frac = step / cfg.epsilon_decay_steps
    return cfg.epsilon_start + frac * (cfg.epsilon_final - cfg.epsilon_start)


def select_action(
    qnet: MLP,
    state: np.ndarray,
    valid_mask: np.ndarray,
    eps: float,
    rng: np.random.Generator,
    mode: AgentMode,
) -> int:
    """Epsilon-greedy action; masked variants never leave the valid set.

    Greedy ties break toward the lowest action index.
    """
    mode = AgentMode(mode)
    if mode is AgentMode.PN_CDQN:
        candidates = np.flatnonzero(valid_mask)
        if len(candidates) == 0:
            raise AssertionError("valid-action mask is empty; the neutral action must always be valid")
    else:
        candidates = np.arange(NUM_ACTIONS)

    if rng.random() < eps:
        return int(rng.choice(candidates))
    q = qnet.forward(state)
    return int(candidates[int(np.argmax(q[candidates]))])


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool
    next_valid_mask: np.ndarray
    violated: bool


class ReplayBuffer:
    """Fixed-capacity ring with uniform sampling."""

    def __init__(self, capacity: int, rng: np.random.Generator):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.rng = rng
        self._items: list[Transition] = []
        self._cursor = 0
        self.inserted = 0

    def __len__(self) -> int:
        return len(self._items)

    def add(self, item: Transition):
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self.capacity
        self.inserted += 1

    def sample(self, batch_size: int) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]


def compute_targets(
    target_net: MLP,
    batch: list[Transition],
    gamma: float,
    mode: AgentMode,
) -> np.ndarray:
    """Bootstrap targets y = r + gamma * max Q'(next), with the maximum
    restricted to the stored valid-action mask in masked mode. Terminal
    transitions bootstrap nothing."""
    mode = AgentMode(mode)
    if not batch:
        raise ValueError("empty batch")
    next_states = np.stack([t.next_state for t in batch])
    q_next = target_net.forward(next_states)
    if mode is AgentMode.PN_CDQN:
        masks = np.stack([t.next_valid_mask for t in batch])
        q_next = np.where(masks, q_next, -np.inf)
    best = q_next.max(axis=1)
    rewards = np.array([t.reward for t in batch])
    done = np.array([t.done for t in batch])
    return np.where(done, rewards, rewards + gamma * best)


# --- round-robin baselines --------------------------------------------------

BASELINE_V1 = (3, 8, 0, 5, 2, 7, 1, 6)
BASELINE_V2 = (3, 8, 0, 5, 2, 4, 7, 1, 4, 6)


class BaselineCycle:
    """Fixed cyclic action sequence with a wrapping cursor."""

    def __init__(self, version: str):
        if version == "v1":
            self.sequence = BASELINE_V1
        elif version == "v2":
            self.sequence = BASELINE_V2
        else:
            raise ValueError(f"unknown baseline version {version!r}")
        self.version = version
        self.cursor = 0

    def next_action(self) -> int:
        action = self.sequence[self.cursor]
        self.cursor = (self.cursor + 1) % len(self.sequence)
        return action

    def reset(self):
        self.cursor = 0


# --- training / evaluation loops -------------------------------------------


@dataclass
class TrainLogRow:
    episode: int
    end_step: int
    episode_length: int
    total_return: float
    violations_requested: int
    violation_rate: float

    CSV_HEADER = [
        "episode",
        "end_step",
        "episode_length",
        "return",
        "violations_requested",
        "violations_rate",
    ]

    def csv_row(self) -> list[str]:
        return [
            str(self.episode),
            str(self.end_step),
            str(self.episode_length),
            repr(self.total_return),
            str(self.violations_requested),
            repr(self.violation_rate),
        ]


@dataclass
class TrainResult:
    model: MLP
    log: list[TrainLogRow] = field(default_factory=list)
    global_steps: int = 0


def train_loop(wrapper: ConstraintWrapper, cfg: AgentConfig, seed: int) -> TrainResult:
    """Run the full training loop against one wrapper instance.

    Actions are fully random (mask-respecting in masked mode) for the
    first `random_steps`, then epsilon-greedy. Transitions store the
    next state's valid-action mask so targets can be masked at replay
    time. Training starts after `learning_starts` steps, runs every
    `train_every` steps, and soft-syncs the target after every update.
    """
    rng = np.random.default_rng(seed)
    input_size = len(wrapper.encoded_state())
    qnet = MLP((input_size, *cfg.hidden_sizes, NUM_ACTIONS), rng=rng)
    target = qnet.copy()
    buffer = ReplayBuffer(cfg.buffer_capacity, rng=np.random.default_rng(rng.integers(2**63)))

    result = TrainResult(model=qnet)
    episode = 0
    step = 0
    while step < cfg.max_steps:
        cs = wrapper.reset(seed=int(rng.integers(2**63)))
        state = wrapper.encoded_state()
        mask = wrapper.valid_mask()
        record = EpisodeRecord()
        ep_start = step
        while not wrapper.terminated and step < cfg.max_steps:
            eps = 1.0 if step < cfg.random_steps else epsilon_at(step, cfg)
            action = select_action(qnet, state, mask, eps, rng, cfg.mode)
            res = wrapper.step(action)
            next_state = wrapper.encoded_state()
            next_mask = wrapper.valid_mask()
            buffer.add(
                Transition(
                    state=state,
                    action=action,
                    reward=res.reward * cfg.reward_scale,
                    next_state=next_state,
                    done=res.info.terminated,
                    next_valid_mask=next_mask,
                    violated=not res.constraint_fulfilled,
                )
            )
            record.record_step(res.info, res.constraint_fulfilled, res.reward)
            state, mask = next_state, next_mask
            step += 1

            if step > cfg.learning_starts and step % cfg.train_every == 0 and len(buffer) >= cfg.batch_size:
                batch = buffer.sample(cfg.batch_size)
                targets = compute_targets(target, batch, cfg.gamma, cfg.mode)
                inputs = np.stack([t.state for t in batch])
                actions = np.array([t.action for t in batch])
                qnet.train_batch(inputs, actions, targets, cfg.lr, grad_clip=cfg.grad_clip)
                sync_target(qnet, target, cfg.tau)

        if record.total_requests:
            result.log.append(
                TrainLogRow(
                    episode=episode,
                    end_step=step,
                    episode_length=step - ep_start,
                    total_return=record.total_return,
                    violations_requested=record.violations_requested,
                    violation_rate=record.violation_rate,
                )
            )
        episode += 1
    result.global_steps = step
    return result


def greedy_policy(qnet: MLP, mode: AgentMode):
    """Evaluation policy: epsilon=0 action selection."""
    rng = np.random.default_rng(0)  # unused at eps=0, kept for signature parity

    def policy(state: np.ndarray, mask: np.ndarray) -> int:
        return select_action(qnet, state, mask, 0.0, rng, mode)

    return policy


def run_episode(wrapper: ConstraintWrapper, policy, seed: int) -> EpisodeRecord:
    wrapper.reset(seed=seed)
    record = EpisodeRecord()
    while not wrapper.terminated:
        action = policy(wrapper.encoded_state(), wrapper.valid_mask())
        res = wrapper.step(action)
        record.record_step(res.info, res.constraint_fulfilled, res.reward)
    return record


def evaluate(
    wrapper: ConstraintWrapper, policy, episodes: int, seed: int
) -> list[EpisodeRecord]:
    """Run evaluation episodes with per-episode derived seeds."""
    rng = np.random.default_rng(seed)
    return [run_episode(wrapper, policy, seed=int(rng.integers(2**63))) for _ in range(episodes)]


def baseline_policy(cycle: BaselineCycle):
    def policy(state: np.ndarray, mask: np.ndarray) -> int:
        return cycle.next_action()

    return policy


def evaluate_baseline(
    wrapper: ConstraintWrapper, version: str, episodes: int, seed: int
) -> list[EpisodeRecord]:
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(episodes):
        cycle = BaselineCycle(version)
        records.append(run_episode(wrapper, baseline_policy(cycle), seed=int(rng.integers(2**63))))
    return records
