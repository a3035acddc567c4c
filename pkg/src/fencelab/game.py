"""Deterministic fixed-timestep two-agent fencing environment.

Two velocity-limited rigid capsule bats, one anchored per agent, fight over a
fixed target sphere. The antagonist scores +1 per tick its blade sits in the
target without bat contact, loses 10 on in-target contact, and gains 10
whenever the protagonist camps inside the target for a full consecutive streak.
All state transitions are pure functions of (state, actions, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Vec3,
    add,
    clamp_norm,
    dist,
    is_finite,
    normalize,
    point_segment_distance,
    rotate_by_rotvec,
    scale,
    segment_segment_distance,
    segment_sphere_intersects,
    sub,
)

ANTAGONIST = "antagonist"
PROTAGONIST = "protagonist"
ROLES = (ANTAGONIST, PROTAGONIST)

# score event kinds (wire names)
SCORE_TICK = "score_tick"
CONTACT_PENALTY = "contact_penalty"
CAMPING_REWARD = "camping_reward"

OBS_DIM = 25
ACTION_DIM = 6


@dataclass(slots=True)
class BatPose:
    center: Vec3
    dir: Vec3  # unit


@dataclass(slots=True)
class BatState:
    pose: BatPose
    lin_vel: Vec3 = (0.0, 0.0, 0.0)
    dir_vel: Vec3 = (0.0, 0.0, 0.0)  # rad/s angular rate vector


@dataclass(slots=True)
class AgentAction:
    """Commanded per-tick pose offset: translation (m) and rotation vector (rad)."""

    d_pos: Vec3
    d_dir: Vec3

    @staticmethod
    def from_array(a) -> "AgentAction":
        return AgentAction(
            (float(a[0]), float(a[1]), float(a[2])),
            (float(a[3]), float(a[4]), float(a[5])),
        )

    def to_array(self) -> np.ndarray:
        return np.array([*self.d_pos, *self.d_dir], dtype=np.float64)


ZERO_ACTION = AgentAction((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(slots=True)
class ScoreEvent:
    tick: int
    kind: str  # SCORE_TICK | CONTACT_PENALTY | CAMPING_REWARD
    value: int


@dataclass(slots=True)
class GameConfig:
    dt: float = 0.01
    horizon_ticks: int = 2000
    target_center: Vec3 = (0.0, 0.0, 0.0)
    target_radius: float = 0.15
    bat_length: float = 0.5
    bat_radius: float = 0.03
    v_max: float = 1.5
    omega_max: float = 4.0
    delta_pos_max: float = 0.05
    delta_dir_max: float = 0.1
    anchor_a: Vec3 = (-0.8, 0.0, 0.0)
    anchor_p: Vec3 = (0.8, 0.0, 0.0)
    reach_radius: float = 0.8
    camping_ticks: int = 200
    score_in_target: int = 1
    penalty_contact: int = -10
    reward_camping: int = 10
    start_center_a: Vec3 = (-0.8, 0.0, 0.0)
    start_dir_a: Vec3 = (0.0, 0.0, 1.0)
    start_center_p: Vec3 = (0.8, 0.0, 0.0)
    start_dir_p: Vec3 = (0.0, 0.0, 1.0)
    start_jitter: float = 0.0  # m; seeded uniform cube jitter on start centers

    def validate(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if abs(self.horizon_ticks * self.dt - 20.0) > 1e-9:
            raise ValueError(
                f"horizon_ticks*dt must equal the 20 s game length, got {self.horizon_ticks * self.dt}"
            )
        if self.target_radius <= 0.0 or self.bat_length <= 0.0 or self.bat_radius <= 0.0:
            raise ValueError("target_radius, bat_length, bat_radius must be positive")
        if self.camping_ticks <= 0:
            raise ValueError("camping_ticks must be positive")
        for anchor in (self.anchor_a, self.anchor_p):
            if dist(anchor, self.target_center) > self.reach_radius + self.target_radius:
                raise ValueError(
                    "reach sphere does not meet the target sphere; the game is degenerate"
                )
        for center, anchor in (
            (self.start_center_a, self.anchor_a),
            (self.start_center_p, self.anchor_p),
        ):
            if dist(center, anchor) > self.reach_radius + 1e-12:
                raise ValueError("start center outside its reach sphere")
        for d in (self.start_dir_a, self.start_dir_p):
            normalize(d)  # raises on near-zero

    def anchor_for(self, role: str) -> Vec3:
        return self.anchor_a if role == ANTAGONIST else self.anchor_p


@dataclass(slots=True)
class GameState:
    tick: int
    bat_a: BatState
    bat_p: BatState
    camping_counter: int
    score: int


def blade_endpoints(pose: BatPose, length: float) -> tuple[Vec3, Vec3]:
    h = 0.5 * length
    d = pose.dir
    c = pose.center
    off = (d[0] * h, d[1] * h, d[2] * h)
    return sub(c, off), add(c, off)


def blade_in_target(pose: BatPose, config: GameConfig) -> bool:
    lo, hi = blade_endpoints(pose, config.bat_length)
    return segment_sphere_intersects(lo, hi, config.target_center, config.target_radius)


def reset(config: GameConfig, seed: int | None = None) -> GameState:
    """Fresh game at tick 0, score 0, bats at configured start poses.

    With ``start_jitter > 0`` the start centers are perturbed by a seeded
    uniform offset and re-projected into the reach spheres.
    """
    config.validate()
    center_a, center_p = config.start_center_a, config.start_center_p
    if config.start_jitter > 0.0:
        rng = np.random.default_rng(seed)
        j = rng.uniform(-config.start_jitter, config.start_jitter, size=6)
        center_a = _project_reach(add(center_a, (j[0], j[1], j[2])), config.anchor_a, config.reach_radius)
        center_p = _project_reach(add(center_p, (j[3], j[4], j[5])), config.anchor_p, config.reach_radius)
    return GameState(
        tick=0,
        bat_a=BatState(BatPose(center_a, normalize(config.start_dir_a))),
        bat_p=BatState(BatPose(center_p, normalize(config.start_dir_p))),
        camping_counter=0,
        score=0,
    )


def _project_reach(center: Vec3, anchor: Vec3, reach_radius: float) -> Vec3:
    dx = center[0] - anchor[0]
    dy = center[1] - anchor[1]
    dz = center[2] - anchor[2]
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d <= reach_radius:
        return center
    k = reach_radius / d
    return (anchor[0] + dx * k, anchor[1] + dy * k, anchor[2] + dz * k)


def apply_action(bat: BatState, action: AgentAction, anchor: Vec3, config: GameConfig) -> BatState:
    """First-order tracking of a clamped pose offset command.

    The commanded offset is norm-clamped, converted to a velocity capped at
    v_max / omega_max, integrated for one tick, and the center is projected
    back into the anchor's reach sphere. The blade direction stays unit.
    """
    dt = config.dt
    inv_dt = 1.0 / dt
    dp = clamp_norm(action.d_pos, config.delta_pos_max)
    dd = clamp_norm(action.d_dir, config.delta_dir_max)
    lin_vel = clamp_norm((dp[0] * inv_dt, dp[1] * inv_dt, dp[2] * inv_dt), config.v_max)
    dir_vel = clamp_norm((dd[0] * inv_dt, dd[1] * inv_dt, dd[2] * inv_dt), config.omega_max)
    pose = bat.pose
    center = _project_reach(
        (
            pose.center[0] + lin_vel[0] * dt,
            pose.center[1] + lin_vel[1] * dt,
            pose.center[2] + lin_vel[2] * dt,
        ),
        anchor,
        config.reach_radius,
    )
    new_dir = pose.dir
    if dir_vel != (0.0, 0.0, 0.0):
        new_dir = normalize(rotate_by_rotvec(pose.dir, scale(dir_vel, dt)))
    return BatState(BatPose(center, new_dir), lin_vel, dir_vel)


def score_tick(state: GameState, config: GameConfig) -> tuple[int, list[ScoreEvent], int]:
    """One application of the scoring rules to the current geometry.

    Returns (score delta for the antagonist, events fired, next camping
    counter). The camping rule pays out each time the protagonist's in-target
    streak reaches ``camping_ticks``, then restarts the streak.
    """
    delta = 0
    events: list[ScoreEvent] = []
    tick = state.tick
    tgt = config.target_center
    r = config.target_radius

    a_lo, a_hi = blade_endpoints(state.bat_a.pose, config.bat_length)
    if point_segment_distance(tgt, a_lo, a_hi) <= r:
        p_lo, p_hi = blade_endpoints(state.bat_p.pose, config.bat_length)
        if segment_segment_distance(a_lo, a_hi, p_lo, p_hi) < 2.0 * config.bat_radius:
            delta += config.penalty_contact
            events.append(ScoreEvent(tick, CONTACT_PENALTY, config.penalty_contact))
        else:
            delta += config.score_in_target
            events.append(ScoreEvent(tick, SCORE_TICK, config.score_in_target))

    counter = state.camping_counter
    p_lo, p_hi = blade_endpoints(state.bat_p.pose, config.bat_length)
    if point_segment_distance(tgt, p_lo, p_hi) <= r:
        counter += 1
        if counter >= config.camping_ticks:
            delta += config.reward_camping
            events.append(ScoreEvent(tick, CAMPING_REWARD, config.reward_camping))
            counter = 0
    else:
        counter = 0
    return delta, events, counter


def step(
    state: GameState, act_a: AgentAction, act_p: AgentAction, config: GameConfig
) -> tuple[GameState, int, list[ScoreEvent], bool]:
    """Advance one tick: both actions applied to the pre-step state, then scoring.

    Returns (next state, antagonist score delta, events, terminal flag).
    """
    if state.tick >= config.horizon_ticks:
        raise RuntimeError(f"cannot step a terminal state (tick={state.tick})")
    bat_a = apply_action(state.bat_a, act_a, config.anchor_a, config)
    bat_p = apply_action(state.bat_p, act_p, config.anchor_p, config)
    post = GameState(state.tick + 1, bat_a, bat_p, state.camping_counter, state.score)
    delta, events, counter = score_tick(post, config)
    post.camping_counter = counter
    post.score += delta
    return post, delta, events, post.tick >= config.horizon_ticks


def observe(state: GameState, perspective: str, config: GameConfig) -> np.ndarray:
    """25-vector: own bat (center, dir, lin_vel, dir_vel), opponent bat, game time [s]."""
    if perspective == ANTAGONIST:
        own, opp = state.bat_a, state.bat_p
    elif perspective == PROTAGONIST:
        own, opp = state.bat_p, state.bat_a
    else:
        raise ValueError(f"unknown perspective {perspective!r}")
    return np.array(
        own.pose.center + own.pose.dir + own.lin_vel + own.dir_vel
        + opp.pose.center + opp.pose.dir + opp.lin_vel + opp.dir_vel
        + (state.tick * config.dt,),
        dtype=np.float64,
    )


# ---------------------------------------------------------------------------
# lockstep fleet stepping
#
# Bulk test drivers and batched rollouts need thousands of independent games;
# the scalar loop above costs ~50 us/tick, so the fleet path advances n games
# per numpy call. Every expression below mirrors the scalar route
# operation-for-operation (same association order, same branch structure via
# masks, numpy's libm trig), so fleet trajectories are bitwise identical to
# scalar ones. test_game pins that equivalence.

_EPS_DEG = 1e-12
_EPS_PAR = 1e-14


@dataclass(slots=True)
class FleetState:
    """State of ``n`` independent games at a common tick, stored columnwise."""

    tick: int
    center_a: np.ndarray  # (n, 3)
    dir_a: np.ndarray
    lin_vel_a: np.ndarray
    dir_vel_a: np.ndarray
    center_p: np.ndarray
    dir_p: np.ndarray
    lin_vel_p: np.ndarray
    dir_vel_p: np.ndarray
    camping: np.ndarray  # (n,) int64
    score: np.ndarray  # (n,) int64

    @property
    def n(self) -> int:
        return self.center_a.shape[0]

    @staticmethod
    def from_states(states: list[GameState]) -> "FleetState":
        ticks = {s.tick for s in states}
        if len(ticks) != 1:
            raise ValueError(f"fleet games must share a tick, got {sorted(ticks)}")

        def col(get) -> np.ndarray:
            return np.array([get(s) for s in states], dtype=np.float64)

        return FleetState(
            tick=states[0].tick,
            center_a=col(lambda s: s.bat_a.pose.center),
            dir_a=col(lambda s: s.bat_a.pose.dir),
            lin_vel_a=col(lambda s: s.bat_a.lin_vel),
            dir_vel_a=col(lambda s: s.bat_a.dir_vel),
            center_p=col(lambda s: s.bat_p.pose.center),
            dir_p=col(lambda s: s.bat_p.pose.dir),
            lin_vel_p=col(lambda s: s.bat_p.lin_vel),
            dir_vel_p=col(lambda s: s.bat_p.dir_vel),
            camping=np.array([s.camping_counter for s in states], dtype=np.int64),
            score=np.array([s.score for s in states], dtype=np.int64),
        )

    def to_state(self, i: int) -> GameState:
        def vec(arr: np.ndarray) -> Vec3:
            return (float(arr[i, 0]), float(arr[i, 1]), float(arr[i, 2]))

        return GameState(
            tick=self.tick,
            bat_a=BatState(
                BatPose(vec(self.center_a), vec(self.dir_a)),
                vec(self.lin_vel_a),
                vec(self.dir_vel_a),
            ),
            bat_p=BatState(
                BatPose(vec(self.center_p), vec(self.dir_p)),
                vec(self.lin_vel_p),
                vec(self.dir_vel_p),
            ),
            camping_counter=int(self.camping[i]),
            score=int(self.score[i]),
        )


def reset_fleet(config: GameConfig, seeds: list[int | None]) -> FleetState:
    return FleetState.from_states([reset(config, s) for s in seeds])


def _clamp_norm_rows(v: np.ndarray, max_norm: float) -> np.ndarray:
    n = np.sqrt(v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1] + v[:, 2] * v[:, 2])
    over = n > max_norm
    k = np.where(over, max_norm / np.where(over, n, 1.0), 1.0)
    return v * k[:, None]


def _project_reach_rows(center: np.ndarray, anchor: Vec3, reach_radius: float) -> np.ndarray:
    dx = center[:, 0] - anchor[0]
    dy = center[:, 1] - anchor[1]
    dz = center[:, 2] - anchor[2]
    d = np.sqrt(dx * dx + dy * dy + dz * dz)
    out = d > reach_radius
    k = reach_radius / np.where(out, d, 1.0)
    proj = np.empty_like(center)
    proj[:, 0] = np.where(out, anchor[0] + dx * k, center[:, 0])
    proj[:, 1] = np.where(out, anchor[1] + dy * k, center[:, 1])
    proj[:, 2] = np.where(out, anchor[2] + dz * k, center[:, 2])
    return proj


def _rotate_dirs_rows(dirs: np.ndarray, dir_vel: np.ndarray, dt: float) -> np.ndarray:
    # mirrors apply_action: exact-zero commands leave dir untouched (no
    # renormalization); otherwise rotate_by_rotvec (identity below the angle
    # epsilon) followed by normalize.
    vx, vy, vz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    rvx = dir_vel[:, 0] * dt
    rvy = dir_vel[:, 1] * dt
    rvz = dir_vel[:, 2] * dt
    zero_cmd = (dir_vel[:, 0] == 0.0) & (dir_vel[:, 1] == 0.0) & (dir_vel[:, 2] == 0.0)
    angle = np.sqrt(rvx * rvx + rvy * rvy + rvz * rvz)
    small = angle < _EPS_DEG
    inv = 1.0 / np.where(small, 1.0, angle)
    kx, ky, kz = rvx * inv, rvy * inv, rvz * inv
    c = np.cos(angle)
    s = np.sin(angle)
    kvx = ky * vz - kz * vy
    kvy = kz * vx - kx * vz
    kvz = kx * vy - ky * vx
    kd = (kx * vx + ky * vy + kz * vz) * (1.0 - c)
    rx = np.where(small, vx, vx * c + kvx * s + kx * kd)
    ry = np.where(small, vy, vy * c + kvy * s + ky * kd)
    rz = np.where(small, vz, vz * c + kvz * s + kz * kd)
    n = np.sqrt(rx * rx + ry * ry + rz * rz)
    if np.any(n[~zero_cmd] < _EPS_DEG):
        raise ValueError("cannot normalize near-zero rotated direction")
    invn = 1.0 / np.where(zero_cmd, 1.0, n)
    out = np.empty_like(dirs)
    out[:, 0] = np.where(zero_cmd, vx, rx * invn)
    out[:, 1] = np.where(zero_cmd, vy, ry * invn)
    out[:, 2] = np.where(zero_cmd, vz, rz * invn)
    return out


def _apply_action_rows(
    center: np.ndarray, dirs: np.ndarray, act: np.ndarray, anchor: Vec3, config: GameConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    dt = config.dt
    inv_dt = 1.0 / dt
    dp = _clamp_norm_rows(act[:, 0:3], config.delta_pos_max)
    dd = _clamp_norm_rows(act[:, 3:6], config.delta_dir_max)
    lin_vel = _clamp_norm_rows(dp * inv_dt, config.v_max)
    dir_vel = _clamp_norm_rows(dd * inv_dt, config.omega_max)
    new_center = _project_reach_rows(center + lin_vel * dt, anchor, config.reach_radius)
    new_dirs = _rotate_dirs_rows(dirs, dir_vel, dt)
    return new_center, new_dirs, lin_vel, dir_vel


def _point_segment_dist_rows(p: Vec3, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    ux = hi[:, 0] - lo[:, 0]
    uy = hi[:, 1] - lo[:, 1]
    uz = hi[:, 2] - lo[:, 2]
    wx = p[0] - lo[:, 0]
    wy = p[1] - lo[:, 1]
    wz = p[2] - lo[:, 2]
    uu = ux * ux + uy * uy + uz * uz
    if np.any(uu < _EPS_DEG * _EPS_DEG):
        raise ValueError("degenerate zero-length segment")
    t = (ux * wx + uy * wy + uz * wz) / uu
    t = np.minimum(np.maximum(t, 0.0), 1.0)
    dx = wx - t * ux
    dy = wy - t * uy
    dz = wz - t * uz
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def _segment_segment_dist_rows(
    a_lo: np.ndarray, a_hi: np.ndarray, b_lo: np.ndarray, b_hi: np.ndarray
) -> np.ndarray:
    ux = a_hi[:, 0] - a_lo[:, 0]
    uy = a_hi[:, 1] - a_lo[:, 1]
    uz = a_hi[:, 2] - a_lo[:, 2]
    vx = b_hi[:, 0] - b_lo[:, 0]
    vy = b_hi[:, 1] - b_lo[:, 1]
    vz = b_hi[:, 2] - b_lo[:, 2]
    wx = a_lo[:, 0] - b_lo[:, 0]
    wy = a_lo[:, 1] - b_lo[:, 1]
    wz = a_lo[:, 2] - b_lo[:, 2]
    a = ux * ux + uy * uy + uz * uz
    c = vx * vx + vy * vy + vz * vz
    if np.any(a < _EPS_DEG * _EPS_DEG) or np.any(c < _EPS_DEG * _EPS_DEG):
        raise ValueError("degenerate zero-length segment")
    b = ux * vx + uy * vy + uz * vz
    d = ux * wx + uy * wy + uz * wz
    e = vx * wx + vy * wy + vz * wz
    denom = a * c - b * b

    par = denom <= _EPS_PAR
    s = np.where(par, 0.0, (b * e - c * d) / np.where(par, 1.0, denom))
    s = np.minimum(np.maximum(s, 0.0), 1.0)
    t = (b * s + e) / c
    t_lo = t < 0.0
    t_hi = t > 1.0
    s_re = np.where(t_lo, -d / a, np.where(t_hi, (b - d) / a, s))
    s = np.where(t_lo | t_hi, np.minimum(np.maximum(s_re, 0.0), 1.0), s)
    t = np.where(t_lo, 0.0, np.where(t_hi, 1.0, t))

    dx = (a_lo[:, 0] + s * ux) - (b_lo[:, 0] + t * vx)
    dy = (a_lo[:, 1] + s * uy) - (b_lo[:, 1] + t * vy)
    dz = (a_lo[:, 2] + s * uz) - (b_lo[:, 2] + t * vz)
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def step_fleet(
    fleet: FleetState, act_a: np.ndarray, act_p: np.ndarray, config: GameConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, bool]:
    """Advance every game in the fleet one tick, in place.

    ``act_a`` and ``act_p`` are (n, 6) arrays of [d_pos, d_dir] commands.
    Returns (score deltas, score_tick mask, contact_penalty mask,
    camping_reward mask, terminal flag); masks mark which games fired each
    event this tick.
    """
    if fleet.tick >= config.horizon_ticks:
        raise RuntimeError(f"cannot step a terminal fleet (tick={fleet.tick})")
    fleet.center_a, fleet.dir_a, fleet.lin_vel_a, fleet.dir_vel_a = _apply_action_rows(
        fleet.center_a, fleet.dir_a, act_a, config.anchor_a, config
    )
    fleet.center_p, fleet.dir_p, fleet.lin_vel_p, fleet.dir_vel_p = _apply_action_rows(
        fleet.center_p, fleet.dir_p, act_p, config.anchor_p, config
    )
    fleet.tick += 1

    h = 0.5 * config.bat_length
    a_off = fleet.dir_a * h
    p_off = fleet.dir_p * h
    a_lo, a_hi = fleet.center_a - a_off, fleet.center_a + a_off
    p_lo, p_hi = fleet.center_p - p_off, fleet.center_p + p_off
    tgt = config.target_center
    r = config.target_radius

    a_in = _point_segment_dist_rows(tgt, a_lo, a_hi) <= r
    p_in = _point_segment_dist_rows(tgt, p_lo, p_hi) <= r
    contact = _segment_segment_dist_rows(a_lo, a_hi, p_lo, p_hi) < 2.0 * config.bat_radius

    contact_mask = a_in & contact
    score_mask = a_in & ~contact
    counter = np.where(p_in, fleet.camping + 1, 0)
    camping_mask = counter >= config.camping_ticks
    counter = np.where(camping_mask, 0, counter)

    delta = (
        score_mask * config.score_in_target
        + contact_mask * config.penalty_contact
        + camping_mask * config.reward_camping
    ).astype(np.int64)
    fleet.camping = counter.astype(np.int64)
    fleet.score = fleet.score + delta
    return delta, score_mask, contact_mask, camping_mask, fleet.tick >= config.horizon_ticks


def events_from_masks(
    score_col: np.ndarray,
    contact_col: np.ndarray,
    camping_col: np.ndarray,
    config: GameConfig,
    first_tick: int = 1,
) -> list[ScoreEvent]:
    """Per-game event list from one game's per-tick fleet masks, in the order
    the scalar scorer emits them (in-target outcome first, camping second)."""
    events: list[ScoreEvent] = []
    for i in np.nonzero(score_col | contact_col | camping_col)[0]:
        tick = first_tick + int(i)
        if contact_col[i]:
            events.append(ScoreEvent(tick, CONTACT_PENALTY, config.penalty_contact))
        elif score_col[i]:
            events.append(ScoreEvent(tick, SCORE_TICK, config.score_in_target))
        if camping_col[i]:
            events.append(ScoreEvent(tick, CAMPING_REWARD, config.reward_camping))
    return events


def check_invariants(state: GameState, config: GameConfig, tol: float = 1e-9) -> None:
    """Raise if a state violates the structural invariants. Test helper."""
    if not (0 <= state.tick <= config.horizon_ticks):
        raise AssertionError(f"tick out of range: {state.tick}")
    if state.camping_counter < 0:
        raise AssertionError("negative camping counter")
    for bat, anchor in ((state.bat_a, config.anchor_a), (state.bat_p, config.anchor_p)):
        if dist(bat.pose.center, anchor) > config.reach_radius + tol:
            raise AssertionError("bat center escaped its reach sphere")
        n = math.sqrt(sum(c * c for c in bat.pose.dir))
        if abs(n - 1.0) > tol:
            raise AssertionError(f"bat dir not unit: |dir|={n}")
        for v in (bat.pose.center, bat.lin_vel, bat.dir_vel):
            if not is_finite(v):
                raise AssertionError("non-finite bat state")
