"""Petri-net-constrained reinforcement learning toolkit.

Subpackages:

- `petri`: net model, firing semantics, bounded reachability, JSON I/O
- `junction`: seeded discrete-time 4-way junction simulator
- `wrapper`: constraint wrapper deriving valid actions from the marking
- `neural`: numpy feed-forward Q-network with SGD and target sync
- `agents`: DQN / masked-DQN agents, replay buffer, baselines, loops
- `rewards`: parametric 5-term reward and episode metrics
- `harness`: run configs, train/eval/baseline/sweep orchestration
- `cli`: `pncrl` command-line tool
"""

from .agents import (
    AgentConfig,
    AgentMode,
    BaselineCycle,
    ReplayBuffer,
    Transition,
    compute_targets,
    epsilon_at,
    evaluate,
    evaluate_baseline,
    select_action,
    train_loop,
)
from .junction import Car, Junction, JunctionConfig, StepInfo, sample_poisson
from .neural import MLP, sync_target
from .petri import (
    Marking,
    PetriNet,
    ReachabilityGraph,
    parse_net,
    reachability,
    serialize_net,
    traffic_light_net,
)
from .rewards import EpisodeRecord, EvalSummary, RewardWeights, ajwt, compute_reward, summarize, timesteps_reached
from .wrapper import (
    CombinedState,
    ConstraintWrapper,
    NormalizationCaps,
    PlaceMapping,
    WrapperMode,
    check_sync,
    encode_state,
    valid_actions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
