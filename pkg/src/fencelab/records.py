"""Game trajectory logs: line-delimited JSON IO and an independent re-scorer.

A game record is a header line (schema version, config, seed, policy ids),
one line per tick with both bat states plus the score delta and events of
that tick, and a trailer line with the final score. ``rescore`` re-derives
the full scoring sequence from the logged geometry alone with a vectorized
candidate-set formulation that shares no code with the environment's scalar
scorer, so the two routes check each other.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .game import (
    CAMPING_REWARD,
    CONTACT_PENALTY,
    SCORE_TICK,
    BatState,
    GameConfig,
    GameState,
    ScoreEvent,
)

SCHEMA_VERSION = 1
RECORD_KIND = "fencing_game_log"


@dataclass(slots=True)
class TickRecord:
    tick: int
    bat_a: BatState
    bat_p: BatState
    delta: int
    events: list[ScoreEvent]
    score: int


@dataclass(slots=True)
class GameRecord:
    config: GameConfig
    seed: int | None
    policy_a: str
    policy_p: str
    ticks: list[TickRecord]
    final_score: int
    truncated: bool = False


class GameRecorder:
    """Accumulates per-tick rows during a game loop."""

    def __init__(self, config: GameConfig, seed: int | None, policy_a: str, policy_p: str):
        self.config = config
        self.seed = seed
        self.policy_a = policy_a
        self.policy_p = policy_p
        self.ticks: list[TickRecord] = []

    def on_tick(self, state: GameState, delta: int, events: list[ScoreEvent]) -> None:
        self.ticks.append(
            TickRecord(state.tick, state.bat_a, state.bat_p, delta, list(events), state.score)
        )

    def finalize(self, truncated: bool = False) -> GameRecord:
        final = self.ticks[-1].score if self.ticks else 0
        return GameRecord(
            self.config, self.seed, self.policy_a, self.policy_p,
            self.ticks, final, truncated,
        )


# ---------------------------------------------------------------------------
# serialization

def _bat_to_json(bat: BatState) -> dict:
    return {
        "center": list(bat.pose.center),
        "dir": list(bat.pose.dir),
        "lin_vel": list(bat.lin_vel),
        "dir_vel": list(bat.dir_vel),
    }


def _bat_from_json(d: dict) -> BatState:
    from .game import BatPose

    return BatState(
        BatPose(tuple(d["center"]), tuple(d["dir"])),
        tuple(d["lin_vel"]),
        tuple(d["dir_vel"]),
    )


def config_to_json(config: GameConfig) -> dict:
    out = dataclasses.asdict(config)
    for k, v in out.items():
        if isinstance(v, tuple):
            out[k] = list(v)
    return out


def config_from_json(d: dict) -> GameConfig:
    kwargs = dict(d)
    for k, v in kwargs.items():
        if isinstance(v, list):
            kwargs[k] = tuple(v)
    return GameConfig(**kwargs)


def record_to_jsonl(record: GameRecord) -> str:
    """Deterministic text form: same record, byte-identical output."""
    dumps = lambda obj: json.dumps(obj, separators=(",", ":"))  # noqa: E731
    lines = [
        dumps(
            {
                "kind": RECORD_KIND,
                "schema_version": SCHEMA_VERSION,
                "config": config_to_json(record.config),
                "seed": record.seed,
                "policy_a": record.policy_a,
                "policy_p": record.policy_p,
            }
        )
    ]
    for t in record.ticks:
        lines.append(
            dumps(
                {
                    "tick": t.tick,
                    "bat_a": _bat_to_json(t.bat_a),
                    "bat_p": _bat_to_json(t.bat_p),
                    "delta": t.delta,
                    "events": [
                        {"tick": e.tick, "kind": e.kind, "value": e.value} for e in t.events
                    ],
                    "score": t.score,
                }
            )
        )
    lines.append(dumps({"final_score": record.final_score, "truncated": record.truncated}))
    return "\n".join(lines) + "\n"


def record_from_jsonl(text: str) -> GameRecord:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("truncated game record: missing header or trailer")
    header = json.loads(lines[0])
    if header.get("kind") != RECORD_KIND:
        raise ValueError(f"not a game record: kind={header.get('kind')!r}")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {header.get('schema_version')!r}")
    trailer = json.loads(lines[-1])
    if "final_score" not in trailer:
        raise ValueError("truncated game record: missing trailer")
    ticks = []
    for ln in lines[1:-1]:
        d = json.loads(ln)
        ticks.append(
            TickRecord(
                d["tick"],
                _bat_from_json(d["bat_a"]),
                _bat_from_json(d["bat_p"]),
                d["delta"],
                [ScoreEvent(e["tick"], e["kind"], e["value"]) for e in d["events"]],
                d["score"],
            )
        )
    return GameRecord(
        config_from_json(header["config"]),
        header["seed"],
        header["policy_a"],
        header["policy_p"],
        ticks,
        trailer["final_score"],
        trailer["truncated"],
    )


def write_game_record(record: GameRecord, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(record_to_jsonl(record))


def read_game_record(path) -> GameRecord:
    with open(path, "r", encoding="utf-8") as f:
        return record_from_jsonl(f.read())


# ---------------------------------------------------------------------------
# independent vectorized re-scorer

def _segment_point_dist_batch(lo: np.ndarray, hi: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Distance from a fixed point to each segment [lo_i, hi_i], shape (T,)."""
    v = hi - lo
    w = point[None, :] - lo
    vv = np.einsum("ij,ij->i", v, v)
    t = np.einsum("ij,ij->i", w, v) / np.where(vv > 0.0, vv, 1.0)
    np.clip(t, 0.0, 1.0, out=t)
    closest = lo + t[:, None] * v
    return np.linalg.norm(point[None, :] - closest, axis=1)


def _segment_segment_dist_batch(
    a_lo: np.ndarray, a_hi: np.ndarray, b_lo: np.ndarray, b_hi: np.ndarray
) -> np.ndarray:
    """Minimum distance between segment pairs via the candidate-set method.

    The squared distance is a convex quadratic in (s, t) over the unit square,
    so its minimum is either the interior critical point or lies on an edge,
    where the clamped 1-D projection is optimal. Evaluating the distance at
    the interior solution and all four edge projections and taking the
    elementwise minimum is therefore exact.
    """
    u = a_hi - a_lo
    v = b_hi - b_lo
    w = a_lo - b_lo
    a = np.einsum("ij,ij->i", u, u)
    b = np.einsum("ij,ij->i", u, v)
    c = np.einsum("ij,ij->i", v, v)
    d = np.einsum("ij,ij->i", u, w)
    e = np.einsum("ij,ij->i", v, w)
    det = a * c - b * b

    def dist_at(s: np.ndarray, t: np.ndarray) -> np.ndarray:
        diff = w + s[:, None] * u - t[:, None] * v
        return np.linalg.norm(diff, axis=1)

    def edge_s(s_fixed: np.ndarray) -> np.ndarray:
        # optimal t for fixed s: minimize over t of |w + s u - t v|
        t = (e + b * s_fixed) / np.where(c > 0.0, c, 1.0)
        return dist_at(s_fixed, np.clip(t, 0.0, 1.0))

    def edge_t(t_fixed: np.ndarray) -> np.ndarray:
        # optimal s for fixed t
        s = (b * t_fixed - d) / np.where(a > 0.0, a, 1.0)
        return dist_at(np.clip(s, 0.0, 1.0), t_fixed)

    n = a_lo.shape[0]
    zeros = np.zeros(n)
    ones = np.ones(n)
    cands = [edge_s(zeros), edge_s(ones), edge_t(zeros), edge_t(ones)]

    safe_det = np.where(det > 0.0, det, 1.0)
    s_int = (b * e - c * d) / safe_det
    t_int = (a * e - b * d) / safe_det
    interior_ok = (det > 0.0) & (s_int >= 0.0) & (s_int <= 1.0) & (t_int >= 0.0) & (t_int <= 1.0)
    d_int = dist_at(np.clip(s_int, 0.0, 1.0), np.clip(t_int, 0.0, 1.0))
    cands.append(np.where(interior_ok, d_int, np.inf))

    return np.minimum.reduce(cands)


def rescore_arrays(
    a_center: np.ndarray,
    a_dir: np.ndarray,
    p_center: np.ndarray,
    p_dir: np.ndarray,
    config: GameConfig,
    tick_numbers: np.ndarray | None = None,
) -> tuple[int, np.ndarray, list[ScoreEvent]]:
    """Recompute (final score, per-tick deltas, events) from geometry arrays.

    Inputs are (T, 3) per-tick bat centers and unit directions; ticks are
    numbered 1..T unless ``tick_numbers`` is given.
    """
    T = a_center.shape[0]
    if T == 0:
        return 0, np.zeros(0, dtype=np.int64), []
    if tick_numbers is None:
        tick_numbers = np.arange(1, T + 1)
    half = 0.5 * config.bat_length
    a_lo, a_hi = a_center - half * a_dir, a_center + half * a_dir
    p_lo, p_hi = p_center - half * p_dir, p_center + half * p_dir
    tgt = np.asarray(config.target_center, dtype=np.float64)

    a_in = _segment_point_dist_batch(a_lo, a_hi, tgt) <= config.target_radius
    p_in = _segment_point_dist_batch(p_lo, p_hi, tgt) <= config.target_radius
    contact = _segment_segment_dist_batch(a_lo, a_hi, p_lo, p_hi) < 2.0 * config.bat_radius

    deltas = np.zeros(T, dtype=np.int64)
    events: list[ScoreEvent] = []
    counter = 0
    prev = -1
    # only ticks with either blade in the target can change score or counter;
    # any skipped tick had the protagonist out, which resets the streak
    for i in np.nonzero(a_in | p_in)[0]:
        if i > prev + 1:
            counter = 0
        prev = i
        tick = int(tick_numbers[i])
        if a_in[i]:
            if contact[i]:
                deltas[i] += config.penalty_contact
                events.append(ScoreEvent(tick, CONTACT_PENALTY, config.penalty_contact))
            else:
                deltas[i] += config.score_in_target
                events.append(ScoreEvent(tick, SCORE_TICK, config.score_in_target))
        if p_in[i]:
            counter += 1
            if counter >= config.camping_ticks:
                deltas[i] += config.reward_camping
                events.append(ScoreEvent(tick, CAMPING_REWARD, config.reward_camping))
                counter = 0
        else:
            counter = 0
    return int(deltas.sum()), deltas, events


def rescore(
    ticks: list[TickRecord], config: GameConfig
) -> tuple[int, np.ndarray, list[ScoreEvent]]:
    """Recompute (final score, per-tick deltas, events) from logged geometry only."""
    if not ticks:
        return 0, np.zeros(0, dtype=np.int64), []
    return rescore_arrays(
        np.array([t.bat_a.pose.center for t in ticks]),
        np.array([t.bat_a.pose.dir for t in ticks]),
        np.array([t.bat_p.pose.center for t in ticks]),
        np.array([t.bat_p.pose.dir for t in ticks]),
        config,
        tick_numbers=np.array([t.tick for t in ticks], dtype=np.int64),
    )


def verify_record(record: GameRecord) -> None:
    """Raise AssertionError unless the record's scoring is internally consistent
    and matches the independent re-scorer."""
    total, deltas, events = rescore(record.ticks, record.config)
    if total != record.final_score:
        raise AssertionError(
            f"re-scored total {total} != recorded final score {record.final_score}"
        )
    running = 0
    for i, t in enumerate(record.ticks):
        if t.delta != int(deltas[i]):
            raise AssertionError(f"tick {t.tick}: re-scored delta {deltas[i]} != logged {t.delta}")
        running += t.delta
        if t.score != running:
            raise AssertionError(f"tick {t.tick}: cumulative score mismatch")
    logged_events = [e for t in record.ticks for e in t.events]
    if logged_events != events:
        raise AssertionError("re-scored event sequence differs from the log")
