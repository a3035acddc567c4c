"""Hand-designed reactive blocking protagonist.

Places its bat between the target center and the point of the opponent's
blade closest to the target, oriented perpendicular to the opponent's blade
with random per-axis angular offsets, and with a 50% chance per tick of
holding the previous desired pose instead of computing a fresh one. Desired
poses are tracked through the same clamped offset-action interface that
learned policies use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .agents import Agent
from .game import AgentAction, BatPose, GameConfig
from .geometry import (
    Vec3,
    add,
    clamp_norm,
    dot,
    norm,
    perpendicular_unit,
    rotate_about_axis,
    rotvec_between,
    scale,
    sub,
)

BASELINE_POLICY_ID = "baseline"


@dataclass(slots=True)
class HeuristicConfig:
    angle_offset_deg: float = 25.0   # per-axis uniform(-x, +x) orientation offset
    standoff_low: float = 0.5
    standoff_high: float = 1.0
    hold_prob: float = 0.5
    l_sword: float = 0.5
    target_center: Vec3 = (0.0, 0.0, 0.0)
    delta_pos_max: float = 0.05
    delta_dir_max: float = 0.1
    # The closest-point parameter divides the projection by 2*l_sword. The
    # textbook projection would divide by the squared blade length instead;
    # keep the former as the default behavior and the latter as an option.
    verbatim_ht: bool = True

    def validate(self) -> None:
        if not 0.0 <= self.hold_prob <= 1.0:
            raise ValueError("hold_prob must be in [0, 1]")
        if self.angle_offset_deg < 0.0:
            raise ValueError("angle_offset_deg must be non-negative")
        if not 0.0 <= self.standoff_low <= self.standoff_high:
            raise ValueError("need 0 <= standoff_low <= standoff_high")
        if self.l_sword <= 0.0:
            raise ValueError("l_sword must be positive")

    @staticmethod
    def from_game(config: GameConfig, **overrides) -> "HeuristicConfig":
        base = HeuristicConfig(
            l_sword=config.bat_length,
            target_center=config.target_center,
            delta_pos_max=config.delta_pos_max,
            delta_dir_max=config.delta_dir_max,
        )
        return replace(base, **overrides) if overrides else base


@dataclass(slots=True)
class HeuristicState:
    last_desired: BatPose | None = None
    last_was_hold: bool = False


def closest_point_param(
    tar: Vec3, h_low: Vec3, h_up: Vec3, l_sword: float, verbatim: bool = True
) -> float:
    """Parameter in [0, 1] of the opponent-blade point treated as closest to tar.

    verbatim form: clamp01(dot(tar - h_low, h_up - h_low) / (2 * l_sword));
    projection form: same numerator over |h_up - h_low|^2.
    """
    seg = sub(h_up, h_low)
    seg_len2 = dot(seg, seg)
    if seg_len2 < 1e-24:
        raise ValueError("degenerate opponent blade: endpoints coincide")
    num = dot(sub(tar, h_low), seg)
    denom = 2.0 * l_sword if verbatim else seg_len2
    return max(0.0, min(1.0, num / denom))


def desired_position(tar: Vec3, h_close: Vec3, u: float) -> Vec3:
    """Point at fraction u from tar toward h_close, u in [0.5, 1]."""
    if not 0.5 <= u <= 1.0:
        raise ValueError(f"standoff fraction must be in [0.5, 1], got {u}")
    return add(tar, scale(sub(h_close, tar), u))


def _perpendicular_with_offsets(opp_dir: Vec3, offsets_rad: tuple[float, float, float]) -> Vec3:
    """Unit direction perpendicular to opp_dir, then rotated by the per-axis
    offsets composed x-then-y-then-z (applied to the vector as Rz, Ry, Rx)."""
    d = perpendicular_unit(opp_dir)
    ax, ay, az = offsets_rad
    if az != 0.0:
        d = rotate_about_axis(d, (0.0, 0.0, 1.0), az)
    if ay != 0.0:
        d = rotate_about_axis(d, (0.0, 1.0, 0.0), ay)
    if ax != 0.0:
        d = rotate_about_axis(d, (1.0, 0.0, 0.0), ax)
    return d


def desired_pose(
    own_center: Vec3,
    opp_center: Vec3,
    opp_dir: Vec3,
    config: HeuristicConfig,
    u: float,
    offsets_rad: tuple[float, float, float],
) -> BatPose:
    """Fresh desired pose from current geometry and pre-drawn random numbers."""
    half = 0.5 * config.l_sword
    h_low = sub(opp_center, scale(opp_dir, half))
    h_up = add(opp_center, scale(opp_dir, half))
    ht = closest_point_param(
        config.target_center, h_low, h_up, config.l_sword, config.verbatim_ht
    )
    h_close = add(h_low, scale(sub(h_up, h_low), ht))
    center = desired_position(config.target_center, h_close, u)
    direction = _perpendicular_with_offsets(opp_dir, offsets_rad)
    return BatPose(center, direction)


def baseline_act(
    obs: np.ndarray,
    state: HeuristicState,
    config: HeuristicConfig,
    rng: np.random.Generator,
) -> tuple[AgentAction, HeuristicState]:
    """One reactive decision; returns the clamped offset action and new state.

    Draw order is fixed for replayability: hold decision first, then (on a
    fresh pose) the standoff fraction and the three angular offsets.
    """
    own_center: Vec3 = (float(obs[0]), float(obs[1]), float(obs[2]))
    own_dir: Vec3 = (float(obs[3]), float(obs[4]), float(obs[5]))
    opp_center: Vec3 = (float(obs[12]), float(obs[13]), float(obs[14]))
    opp_dir: Vec3 = (float(obs[15]), float(obs[16]), float(obs[17]))

    hold = rng.uniform() < config.hold_prob and state.last_desired is not None
    if hold:
        desired = state.last_desired
    else:
        u = rng.uniform(config.standoff_low, config.standoff_high)
        lim = math.radians(config.angle_offset_deg)
        offs = rng.uniform(-lim, lim, 3)
        desired = desired_pose(
            own_center, opp_center, opp_dir, config, u,
            (float(offs[0]), float(offs[1]), float(offs[2])),
        )

    d_pos = clamp_norm(sub(desired.center, own_center), config.delta_pos_max)
    to_dir = desired.dir
    if norm(to_dir) > 0.0:
        d_dir = clamp_norm(rotvec_between(own_dir, to_dir), config.delta_dir_max)
    else:
        d_dir = (0.0, 0.0, 0.0)
    return AgentAction(d_pos, d_dir), HeuristicState(desired, hold)


class BaselineAgent(Agent):
    """Protagonist agent wrapper around the reactive heuristic."""

    def __init__(self, config: HeuristicConfig):
        config.validate()
        self.config = config
        self._state = HeuristicState()
        self._rng: np.random.Generator | None = None

    def reset(self, rng: np.random.Generator) -> None:
        self._state = HeuristicState()
        self._rng = rng

    def act(self, obs: np.ndarray) -> AgentAction:
        action, self._state = baseline_act(obs, self._state, self.config, self._rng)
        return action
