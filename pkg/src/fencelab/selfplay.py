"""Two-phase competitive co-evolution of the attacking and defending policies.

Phase one alternates full training blocks between the two roles, each always
facing the opponent's latest parameters, with the game score mixed with a
small dense shaping term. Phase two runs a fixed count of short alternating
blocks on pure game score, re-sampling the opponent uniformly from the
snapshot history before every block; each seeded phase-two round yields one
"characterized" policy pair that is registered in the library.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .agents import Agent, PolicyAgent, play_game
from .game import (
    ANTAGONIST,
    PROTAGONIST,
    AgentAction,
    GameConfig,
    GameState,
    blade_endpoints,
    observe,
    reset,
    step,
)
from .geometry import (
    closest_point_on_segment,
    dist,
    point_segment_distance,
    segment_segment_distance,
)
from .nets import Mlp
from .policy import (
    GaussianPolicy,
    make_value_net,
    mlp_from_json,
    mlp_to_json,
    policy_from_json,
    policy_to_json,
)
from .ppo import PpoConfig, RolloutBatch, ppo_update

REWARD_MIXED = "mixed"
REWARD_SCORE_ONLY = "score_only"
SAMPLE_LATEST = "latest"      # phase-one opponent rule
SAMPLE_UNIFORM = "uniform"    # phase-two opponent rule
PHASE_TWO_BLOCKS = 35
SNAPSHOT_SCHEMA_VERSION = 1


def other_role(role: str) -> str:
    if role == ANTAGONIST:
        return PROTAGONIST
    if role == PROTAGONIST:
        return ANTAGONIST
    raise ValueError(f"unknown role {role!r}")


# ---------------------------------------------------------------------------
# rewards

def shaping_reward(state: GameState, role: str, config: GameConfig) -> float:
    """Dense exploration reward, always <= 0, equal to 0 at ideal placement.

    Antagonist: negative distance from its blade to the target center.
    Protagonist: negative distance from its blade to the defend segment
    joining the target center and the point of the antagonist's blade closest
    to the target center.
    """
    a_lo, a_hi = blade_endpoints(state.bat_a.pose, config.bat_length)
    if role == ANTAGONIST:
        return -point_segment_distance(config.target_center, a_lo, a_hi)
    if role != PROTAGONIST:
        raise ValueError(f"unknown role {role!r}")
    p_lo, p_hi = blade_endpoints(state.bat_p.pose, config.bat_length)
    h_close = closest_point_on_segment(config.target_center, a_lo, a_hi)
    if dist(h_close, config.target_center) < 1e-9:
        # defend segment collapses to the target center itself
        return -point_segment_distance(config.target_center, p_lo, p_hi)
    return -segment_segment_distance(p_lo, p_hi, config.target_center, h_close)


def tick_reward(score_delta: int, shaping: float, mode: str, alpha: float, role: str) -> float:
    """Learner-perspective reward; the defender sees the negated score delta."""
    signed = float(score_delta) if role == ANTAGONIST else float(-score_delta)
    if mode == REWARD_SCORE_ONLY:
        return signed
    if mode == REWARD_MIXED:
        return signed + alpha * shaping
    raise ValueError(f"unknown reward mode {mode!r}")


# ---------------------------------------------------------------------------
# snapshots and the library

@dataclass(slots=True)
class PolicySnapshot:
    id: str
    role: str
    phase: int
    round: int
    update_index: int
    policy: GaussianPolicy
    value: Mlp

    def key(self) -> tuple:
        return (self.role, self.phase, self.round, self.update_index)


def snapshot_to_json(snap: PolicySnapshot) -> dict:
    return {
        "kind": "policy_snapshot",
        "schema_version": SNAPSHOT_SCHEMA_VERSION,
        "id": snap.id,
        "role": snap.role,
        "phase": snap.phase,
        "round": snap.round,
        "update_index": snap.update_index,
        "policy": policy_to_json(snap.policy),
        "value": mlp_to_json(snap.value),
    }


def snapshot_from_json(d: dict) -> PolicySnapshot:
    if d.get("kind") != "policy_snapshot":
        raise ValueError(f"not a policy snapshot: kind={d.get('kind')!r}")
    if d.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported snapshot schema: expected {SNAPSHOT_SCHEMA_VERSION}, "
            f"found {d.get('schema_version')!r}"
        )
    return PolicySnapshot(
        d["id"], d["role"], int(d["phase"]), int(d["round"]), int(d["update_index"]),
        policy_from_json(d["policy"]), mlp_from_json(d["value"]),
    )


class PolicyLibrary:
    """Ordered per-role snapshot store plus the characterized-pair registry."""

    def __init__(self):
        self.snapshots: dict[str, PolicySnapshot] = {}
        self.order: dict[str, list[str]] = {ANTAGONIST: [], PROTAGONIST: []}
        self.pairs: dict[int, tuple[str, str]] = {}  # round -> (antagonist id, protagonist id)

    def add(self, snap: PolicySnapshot) -> None:
        if snap.id in self.snapshots:
            raise ValueError(f"duplicate snapshot id {snap.id!r}")
        if any(s.key() == snap.key() for s in self.snapshots.values()):
            raise ValueError(f"duplicate snapshot key {snap.key()!r}")
        self.snapshots[snap.id] = snap
        self.order[snap.role].append(snap.id)

    def get(self, snap_id: str) -> PolicySnapshot:
        if snap_id not in self.snapshots:
            raise KeyError(f"no snapshot {snap_id!r} in library")
        return self.snapshots[snap_id]

    def by_role(self, role: str) -> list[PolicySnapshot]:
        return [self.snapshots[i] for i in self.order[role]]

    def register_pair(self, round_num: int, ant_id: str, pro_id: str) -> None:
        for sid in (ant_id, pro_id):
            if sid not in self.snapshots:
                raise ValueError(f"pair references unknown snapshot {sid!r}")
        if self.snapshots[ant_id].role != ANTAGONIST or self.snapshots[pro_id].role != PROTAGONIST:
            raise ValueError("pair roles must be (antagonist, protagonist)")
        self.pairs[round_num] = (ant_id, pro_id)

    def save(self, directory) -> None:
        os.makedirs(directory, exist_ok=True)
        dumps = lambda obj: json.dumps(obj, separators=(",", ":"))  # noqa: E731
        for snap_id, snap in sorted(self.snapshots.items()):
            with open(os.path.join(directory, f"{snap_id}.json"), "w", encoding="utf-8") as f:
                f.write(dumps(snapshot_to_json(snap)) + "\n")
        index = {
            "kind": "policy_library",
            "schema_version": SNAPSHOT_SCHEMA_VERSION,
            "order": self.order,
            "pairs": {str(k): list(v) for k, v in sorted(self.pairs.items())},
        }
        with open(os.path.join(directory, "library.json"), "w", encoding="utf-8") as f:
            f.write(dumps(index) + "\n")

    @staticmethod
    def load(directory) -> "PolicyLibrary":
        with open(os.path.join(directory, "library.json"), "r", encoding="utf-8") as f:
            index = json.load(f)
        if index.get("kind") != "policy_library":
            raise ValueError("not a policy library index")
        lib = PolicyLibrary()
        for role in (ANTAGONIST, PROTAGONIST):
            for snap_id in index["order"][role]:
                with open(os.path.join(directory, f"{snap_id}.json"), "r", encoding="utf-8") as f:
                    lib.add(snapshot_from_json(json.load(f)))
        for round_str, (ant_id, pro_id) in index["pairs"].items():
            lib.register_pair(int(round_str), ant_id, pro_id)
        return lib


def sample_opponent(
    history: list[PolicySnapshot], role: str, mode: str, rng: np.random.Generator
) -> PolicySnapshot:
    """Pick the opponent snapshot: latest for phase one, uniform for phase two."""
    pool = [s for s in history if s.role == role]
    if not pool:
        raise ValueError(f"no snapshots for role {role!r} in history")
    if mode == SAMPLE_LATEST:
        return pool[-1]
    if mode == SAMPLE_UNIFORM:
        return pool[int(rng.integers(len(pool)))]
    raise ValueError(f"unknown sampling mode {mode!r}")


# ---------------------------------------------------------------------------
# rollout collection

@dataclass(slots=True)
class RolloutStats:
    n_games: int
    final_scores: list[int]          # antagonist-perspective game scores
    mean_learner_score: float        # sign-adjusted for the learner role
    mean_return: float               # mean per-game sum of learner rewards


def collect_rollouts(
    game_config: GameConfig,
    policy: GaussianPolicy,
    value_net: Mlp,
    opponent: Agent,
    learner_role: str,
    n_ticks: int,
    mode: str,
    alpha: float,
    seed: int,
) -> tuple[RolloutBatch, RolloutStats]:
    """Play whole games back-to-back until at least n_ticks are collected.

    The learner samples stochastically and records (obs, action, log_prob,
    reward, terminal); the opponent agent acts but contributes nothing to the
    batch. Values are filled in afterwards with one batched forward pass.
    """
    if n_ticks < 1:
        raise ValueError("n_ticks must be positive")
    rng = np.random.default_rng(seed)
    opp_role = other_role(learner_role)
    obs_l: list[np.ndarray] = []
    acts: list[np.ndarray] = []
    logps: list[float] = []
    rewards: list[float] = []
    terminals: list[bool] = []
    scores: list[int] = []
    returns: list[float] = []

    while len(obs_l) < n_ticks:
        state = reset(game_config, int(rng.integers(2**63)))
        opponent.reset(np.random.default_rng(int(rng.integers(2**63))))
        game_return = 0.0
        terminal = False
        while not terminal:
            obs = observe(state, learner_role, game_config)
            action, logp = policy.sample(obs, rng)
            opp_action = opponent.act(observe(state, opp_role, game_config))
            learner_action = AgentAction.from_array(action)
            if learner_role == ANTAGONIST:
                act_a, act_p = learner_action, opp_action
            else:
                act_a, act_p = opp_action, learner_action
            state, delta, _, terminal = step(state, act_a, act_p, game_config)
            shaping = (
                shaping_reward(state, learner_role, game_config)
                if mode == REWARD_MIXED
                else 0.0
            )
            r = tick_reward(delta, shaping, mode, alpha, learner_role)
            obs_l.append(obs)
            acts.append(action)
            logps.append(logp)
            rewards.append(r)
            terminals.append(terminal)
            game_return += r
        scores.append(state.score)
        returns.append(game_return)

    obs_arr = np.stack(obs_l)
    batch = RolloutBatch(
        obs=obs_arr,
        actions=np.stack(acts),
        log_probs=np.array(logps),
        rewards=np.array(rewards),
        values=value_net.forward(obs_arr)[:, 0],
        terminals=np.array(terminals, dtype=bool),
    )
    sign = 1.0 if learner_role == ANTAGONIST else -1.0
    stats = RolloutStats(
        n_games=len(scores),
        final_scores=scores,
        mean_learner_score=sign * float(np.mean(scores)),
        mean_return=float(np.mean(returns)),
    )
    return batch, stats


# ---------------------------------------------------------------------------
# training blocks and phases

@dataclass(slots=True)
class PhaseConfig:
    """Knobs for one training phase.

    n_updates_* is both the per-block budget and the timeout: a block ends
    early if the windowed mean score stops moving (see ``_converged``).
    """

    n_iter: int = 2
    n_updates_mu: int = 60          # antagonist block budget/timeout
    n_updates_nu: int = 60          # protagonist block budget/timeout
    reward_mode: str = REWARD_MIXED
    alpha: float = 0.01
    rollout_ticks: int = 16384
    conv_window: int = 10
    conv_threshold: float = 0.05
    snapshot_every: int = 5
    eval_games: int = 0             # pre/post-block eval games; 0 skips evals

    def validate(self) -> None:
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if self.reward_mode not in (REWARD_MIXED, REWARD_SCORE_ONLY):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if self.n_updates_mu < 0 or self.n_updates_nu < 0:
            raise ValueError("update budgets must be >= 0")
        if self.rollout_ticks < 1 or self.snapshot_every < 1:
            raise ValueError("rollout_ticks and snapshot_every must be positive")
        if self.conv_window < 1 or self.conv_threshold < 0.0:
            raise ValueError("bad convergence settings")
        if self.eval_games < 0:
            raise ValueError("eval_games must be >= 0")

    def budget(self, role: str) -> int:
        return self.n_updates_mu if role == ANTAGONIST else self.n_updates_nu


def default_phase_one() -> PhaseConfig:
    return PhaseConfig()


def default_phase_two() -> PhaseConfig:
    return PhaseConfig(
        n_iter=1,
        n_updates_mu=4,
        n_updates_nu=4,
        reward_mode=REWARD_SCORE_ONLY,
        alpha=0.0,
        snapshot_every=1,
    )


def _converged(mean_scores: list[float], window: int, threshold: float) -> bool:
    """True once the last two non-overlapping score windows agree within the
    relative threshold (floored at 1 score point for near-zero means).

    Two exactly-zero windows are "no score signal yet", not convergence:
    early blocks sit at score 0 while the dense shaping term still improves.
    """
    if len(mean_scores) < 2 * window:
        return False
    recent = float(np.mean(mean_scores[-window:]))
    prev = float(np.mean(mean_scores[-2 * window : -window]))
    if recent == 0.0 and prev == 0.0:
        return False
    return abs(recent - prev) < threshold * max(1.0, abs(prev))


@dataclass(slots=True)
class BlockResult:
    policy: GaussianPolicy
    value: Mlp
    snapshots: list[PolicySnapshot] = field(default_factory=list)
    mean_scores: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def updates_run(self) -> int:
        return len(self.mean_scores)


def train_block(
    learner_role: str,
    policy: GaussianPolicy,
    value_net: Mlp,
    opponent: Agent,
    game_config: GameConfig,
    phase: PhaseConfig,
    ppo: PpoConfig,
    n_updates: int,
    seed: int,
    *,
    phase_num: int,
    round_num: int,
    update_index_start: int = 0,
) -> BlockResult:
    """Up to n_updates iterations of collect + update against a frozen opponent.

    Emits a snapshot every ``snapshot_every`` updates and always at the final
    update of the block, so the history ends with the block's last policy.
    """
    phase.validate()
    rng = np.random.default_rng(seed)
    cur_policy, cur_value = policy, value_net
    result = BlockResult(cur_policy, cur_value)
    for u in range(n_updates):
        collect_seed = int(rng.integers(2**63))
        update_seed = int(rng.integers(2**63))
        batch, stats = collect_rollouts(
            game_config, cur_policy, cur_value, opponent, learner_role,
            phase.rollout_ticks, phase.reward_mode, phase.alpha, collect_seed,
        )
        cur_policy, cur_value, _ = ppo_update(
            cur_policy, cur_value, batch, ppo, np.random.default_rng(update_seed)
        )
        result.mean_scores.append(stats.mean_learner_score)
        done = (u + 1) == n_updates or _converged(
            result.mean_scores, phase.conv_window, phase.conv_threshold
        )
        if (u + 1) % phase.snapshot_every == 0 or done:
            update_index = update_index_start + u + 1
            snap_id = f"{learner_role}-p{phase_num}-r{round_num}-u{update_index:04d}"
            result.snapshots.append(
                PolicySnapshot(
                    snap_id, learner_role, phase_num, round_num, update_index,
                    cur_policy.copy(), cur_value.copy(),
                )
            )
        if done and (u + 1) < n_updates:
            result.converged = True
            break
    result.policy = cur_policy
    result.value = cur_value
    return result


@dataclass(slots=True)
class BlockMeta:
    phase: int
    round: int
    block_index: int
    role: str
    reward_mode: str
    opponent_id: str
    updates_run: int
    converged: bool
    mean_scores: list[float]
    snapshot_ids: list[str]
    eval_before: float | None = None   # learner mean score vs block opponent
    eval_after: float | None = None

    def to_json(self) -> dict:
        return {
            "phase": self.phase,
            "round": self.round,
            "block_index": self.block_index,
            "role": self.role,
            "reward_mode": self.reward_mode,
            "opponent_id": self.opponent_id,
            "updates_run": self.updates_run,
            "converged": self.converged,
            "mean_scores": self.mean_scores,
            "snapshot_ids": self.snapshot_ids,
            "eval_before": self.eval_before,
            "eval_after": self.eval_after,
        }


def evaluate_vs(
    game_config: GameConfig,
    policy: GaussianPolicy,
    learner_role: str,
    opponent: Agent,
    n_games: int,
    seed: int,
) -> float:
    """Learner-perspective mean score over stochastic games vs a frozen opponent."""
    seeds = np.random.SeedSequence(seed).spawn(n_games)
    sign = 1.0 if learner_role == ANTAGONIST else -1.0
    total = 0.0
    for game_ss in seeds:
        learner = PolicyAgent(policy)
        if learner_role == ANTAGONIST:
            final = play_game(game_config, learner, opponent, int(game_ss.generate_state(1)[0]))
        else:
            final = play_game(game_config, opponent, learner, int(game_ss.generate_state(1)[0]))
        total += sign * final.score
    return total / n_games


@dataclass(slots=True)
class WarmStart:
    policy_a: GaussianPolicy
    value_a: Mlp
    policy_p: GaussianPolicy
    value_p: Mlp


def run_phase_one(
    game_config: GameConfig,
    phase: PhaseConfig,
    ppo: PpoConfig,
    seed: int,
    library: PolicyLibrary,
) -> tuple[WarmStart, list[BlockMeta]]:
    """Alternating warm-start training; block order [attacker, defender] x n_iter.

    Each learner always faces the opponent's latest parameters; new snapshots
    land in the library as phase-1, round-0 entries.
    """
    phase.validate()
    ppo.validate()
    ss = np.random.SeedSequence(seed)
    init_a, init_p, blocks_ss = ss.spawn(3)
    pol_a = GaussianPolicy(rng=np.random.default_rng(init_a))
    val_a = make_value_net(rng=np.random.default_rng(init_a.spawn(1)[0]))
    pol_p = GaussianPolicy(rng=np.random.default_rng(init_p))
    val_p = make_value_net(rng=np.random.default_rng(init_p.spawn(1)[0]))

    metas: list[BlockMeta] = []
    update_idx = {ANTAGONIST: 0, PROTAGONIST: 0}
    block_seeds = [int(s.generate_state(1)[0]) for s in blocks_ss.spawn(2 * phase.n_iter)]
    block_index = 0
    for _ in range(phase.n_iter):
        for learner_role in (ANTAGONIST, PROTAGONIST):
            if learner_role == ANTAGONIST:
                learner, learner_val = pol_a, val_a
                opponent_policy, opponent_tag = pol_p, "live-protagonist"
            else:
                learner, learner_val = pol_p, val_p
                opponent_policy, opponent_tag = pol_a, "live-antagonist"
            block_seed = block_seeds[block_index]
            eval_before = eval_after = None
            if phase.eval_games > 0:
                eval_before = evaluate_vs(
                    game_config, learner, learner_role, PolicyAgent(opponent_policy),
                    phase.eval_games, int(np.random.SeedSequence([block_seed, 0]).generate_state(1)[0]),
                )
            result = train_block(
                learner_role, learner, learner_val, PolicyAgent(opponent_policy),
                game_config, phase, ppo, phase.budget(learner_role),
                block_seed,
                phase_num=1, round_num=0, update_index_start=update_idx[learner_role],
            )
            if phase.eval_games > 0:
                eval_after = evaluate_vs(
                    game_config, result.policy, learner_role, PolicyAgent(opponent_policy),
                    phase.eval_games, int(np.random.SeedSequence([block_seed, 1]).generate_state(1)[0]),
                )
            update_idx[learner_role] += result.updates_run
            for snap in result.snapshots:
                library.add(snap)
            metas.append(
                BlockMeta(
                    1, 0, block_index, learner_role, phase.reward_mode, opponent_tag,
                    result.updates_run, result.converged, result.mean_scores,
                    [s.id for s in result.snapshots],
                    eval_before, eval_after,
                )
            )
            if learner_role == ANTAGONIST:
                pol_a, val_a = result.policy, result.value
            else:
                pol_p, val_p = result.policy, result.value
            block_index += 1
    return WarmStart(pol_a, val_a, pol_p, val_p), metas


def run_phase_two(
    game_config: GameConfig,
    phase: PhaseConfig,
    ppo: PpoConfig,
    warm: WarmStart,
    library: PolicyLibrary,
    round_num: int,
    round_seed: int,
    n_blocks: int = PHASE_TWO_BLOCKS,
) -> tuple[WarmStart, list[BlockMeta]]:
    """One characterization round: short alternating score-only blocks.

    Before each block the opponent is drawn uniformly from the phase-1
    history plus this round's own snapshots. The final pair is registered in
    the library under ``round_num``.
    """
    phase.validate()
    if phase.reward_mode != REWARD_SCORE_ONLY:
        raise ValueError("characterization blocks must use the score-only reward")
    rng = np.random.default_rng(round_seed)
    pol_a, val_a = warm.policy_a.copy(), warm.value_a.copy()
    pol_p, val_p = warm.policy_p.copy(), warm.value_p.copy()
    metas: list[BlockMeta] = []
    update_idx = {ANTAGONIST: 0, PROTAGONIST: 0}
    last_snap = {ANTAGONIST: None, PROTAGONIST: None}

    def history() -> list[PolicySnapshot]:
        return [
            s for s in (library.by_role(ANTAGONIST) + library.by_role(PROTAGONIST))
            if s.phase == 1 or (s.phase == 2 and s.round == round_num)
        ]

    for block_index in range(n_blocks):
        learner_role = ANTAGONIST if block_index % 2 == 0 else PROTAGONIST
        opp_snap = sample_opponent(history(), other_role(learner_role), SAMPLE_UNIFORM, rng)
        if learner_role == ANTAGONIST:
            learner, learner_val = pol_a, val_a
        else:
            learner, learner_val = pol_p, val_p
        result = train_block(
            learner_role, learner, learner_val, PolicyAgent(opp_snap.policy),
            game_config, phase, ppo, phase.budget(learner_role),
            int(rng.integers(2**63)),
            phase_num=2, round_num=round_num,
            update_index_start=update_idx[learner_role],
        )
        update_idx[learner_role] += result.updates_run
        for snap in result.snapshots:
            library.add(snap)
        if result.snapshots:
            last_snap[learner_role] = result.snapshots[-1]
        metas.append(
            BlockMeta(
                2, round_num, block_index, learner_role, phase.reward_mode, opp_snap.id,
                result.updates_run, result.converged, result.mean_scores,
                [s.id for s in result.snapshots],
            )
        )
        if learner_role == ANTAGONIST:
            pol_a, val_a = result.policy, result.value
        else:
            pol_p, val_p = result.policy, result.value

    if last_snap[ANTAGONIST] is None or last_snap[PROTAGONIST] is None:
        raise RuntimeError("characterization round produced no snapshots for a role")
    library.register_pair(round_num, last_snap[ANTAGONIST].id, last_snap[PROTAGONIST].id)
    return WarmStart(pol_a, val_a, pol_p, val_p), metas
