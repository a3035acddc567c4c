"""Agent interface and the shared game loop for evaluation and logging.

An agent is reset once per game with its own random generator and then maps
observations to actions. Training code keeps its own rollout loop; this one
is for tournaments, evaluation, scripted replays, and record generation.
"""

from __future__ import annotations

import numpy as np

from .game import (
    ZERO_ACTION,
    AgentAction,
    GameConfig,
    GameState,
    observe,
    reset,
    step,
)
from .policy import GaussianPolicy
from .records import GameRecorder


class Agent:
    """Base agent: stateless, acts with zero action. Subclasses override."""

    def reset(self, rng: np.random.Generator) -> None:
        pass

    def act(self, obs: np.ndarray) -> AgentAction:
        return ZERO_ACTION


class StationaryAgent(Agent):
    pass


class RandomAgent(Agent):
    """Uniform random commands, useful for smoke tests and scoring oracles."""

    def __init__(self, pos_scale: float = 0.05, dir_scale: float = 0.1):
        self.pos_scale = pos_scale
        self.dir_scale = dir_scale
        self._rng: np.random.Generator | None = None

    def reset(self, rng: np.random.Generator) -> None:
        self._rng = rng

    def act(self, obs: np.ndarray) -> AgentAction:
        u = self._rng.uniform(-1.0, 1.0, 6)
        s, d = self.pos_scale, self.dir_scale
        return AgentAction((u[0] * s, u[1] * s, u[2] * s), (u[3] * d, u[4] * d, u[5] * d))


class ScriptedAgent(Agent):
    """Replays a fixed action sequence, repeating the last action when exhausted."""

    def __init__(self, actions: list[AgentAction]):
        if not actions:
            raise ValueError("scripted agent needs at least one action")
        self.actions = list(actions)
        self._i = 0

    def reset(self, rng: np.random.Generator) -> None:
        self._i = 0

    def act(self, obs: np.ndarray) -> AgentAction:
        a = self.actions[min(self._i, len(self.actions) - 1)]
        self._i += 1
        return a


class PolicyAgent(Agent):
    def __init__(self, policy: GaussianPolicy, deterministic: bool = False):
        self.policy = policy
        self.deterministic = deterministic
        self._rng: np.random.Generator | None = None

    def reset(self, rng: np.random.Generator) -> None:
        self._rng = rng

    def act(self, obs: np.ndarray) -> AgentAction:
        action, _ = self.policy.sample(obs, self._rng, deterministic=self.deterministic)
        return AgentAction.from_array(action)


def agent_rngs(seed: int | None) -> tuple[int | None, np.random.Generator, np.random.Generator]:
    """Derive (reset seed, antagonist rng, protagonist rng) from one game seed."""
    ss = np.random.SeedSequence(seed)
    reset_ss, a_ss, p_ss = ss.spawn(3)
    reset_seed = int(reset_ss.generate_state(1)[0])
    return reset_seed, np.random.default_rng(a_ss), np.random.default_rng(p_ss)


def play_game(
    config: GameConfig,
    agent_a: Agent,
    agent_p: Agent,
    seed: int | None = None,
    recorder: GameRecorder | None = None,
) -> GameState:
    """Run one full game; returns the terminal state."""
    reset_seed, rng_a, rng_p = agent_rngs(seed)
    state = reset(config, reset_seed)
    agent_a.reset(rng_a)
    agent_p.reset(rng_p)
    terminal = False
    while not terminal:
        act_a = agent_a.act(observe(state, "antagonist", config))
        act_p = agent_p.act(observe(state, "protagonist", config))
        state, delta, events, terminal = step(state, act_a, act_p, config)
        if recorder is not None:
            recorder.on_tick(state, delta, events)
    return state
