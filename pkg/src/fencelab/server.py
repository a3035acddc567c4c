"""Live WebSocket game server: human attacker versus a served defender.

One session owns one authoritative game loop at 100 ticks per second of
wall clock (configurable pace; pace 0 runs unthrottled for tests). Incoming
messages land on a queue the loop drains once per tick, applying only the
newest command; with no fresh input the last commanded pose stays in force.
Every tick streams the full state plus any score events, each tagged with
the audio cue the client should play: "high" (440 Hz) for a scoring tick,
"low" (300 Hz) for a contact penalty, "none" for a camping award. Finished
or interrupted games are persisted as trajectory records.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import os
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .agents import Agent, agent_rngs
from .game import (
    CAMPING_REWARD,
    CONTACT_PENALTY,
    SCORE_TICK,
    AgentAction,
    GameConfig,
    GameState,
    observe,
    reset,
    step,
)
from .geometry import Vec3, is_finite, norm, rotvec_between, sub
from .records import GameRecorder, config_to_json, write_game_record

CUE_FOR_KIND = {SCORE_TICK: "high", CONTACT_PENALTY: "low", CAMPING_REWARD: "none"}


def _bat_msg(bat) -> dict:
    return {
        "center": list(bat.pose.center),
        "dir": list(bat.pose.dir),
        "lin_vel": list(bat.lin_vel),
        "dir_vel": list(bat.dir_vel),
    }


def state_message(state: GameState, config: GameConfig, events) -> dict:
    return {
        "type": "state",
        "tick": state.tick,
        "t": state.tick * config.dt,
        "bat_a": _bat_msg(state.bat_a),
        "bat_p": _bat_msg(state.bat_p),
        "score": state.score,
        "events": [{"kind": e.kind, "cue": CUE_FOR_KIND[e.kind]} for e in events],
    }


def parse_client_message(text: str) -> dict:
    """Validate one inbound frame; raises ValueError with a reason."""
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"not valid JSON: {e}") from None
    if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
        raise ValueError("message must be an object with a string 'type'")
    kind = msg["type"]
    if kind == "join":
        if "name" in msg and not isinstance(msg["name"], str):
            raise ValueError("join.name must be a string")
        return msg
    if kind == "cmd":
        for key in ("pos", "dir"):
            v = msg.get(key)
            if (
                not isinstance(v, list)
                or len(v) != 3
                or not all(isinstance(c, (int, float)) for c in v)
            ):
                raise ValueError(f"cmd.{key} must be a list of 3 numbers")
            vec = (float(v[0]), float(v[1]), float(v[2]))
            if not is_finite(vec):
                raise ValueError(f"cmd.{key} must be finite")
        return msg
    if kind == "restart":
        return msg
    raise ValueError(f"unknown message type {kind!r}")


def command_to_action(state: GameState, desired_pos: Vec3, desired_dir: Vec3) -> AgentAction:
    """Absolute desired pose -> offset command; the step clamps it further."""
    cur = state.bat_a.pose
    d_pos = sub(desired_pos, cur.center)
    if norm(desired_dir) < 1e-9:
        d_dir: Vec3 = (0.0, 0.0, 0.0)
    else:
        d_dir = rotvec_between(
            cur.dir,
            tuple(c / norm(desired_dir) for c in desired_dir),  # type: ignore[arg-type]
        )
    return AgentAction(d_pos, d_dir)


class Session:
    """State shared between the socket reader and the tick loop."""

    def __init__(self):
        self.queue: asyncio.Queue = asyncio.Queue()
        self.closed = asyncio.Event()
        self.joined = False

    def drain(self) -> tuple[dict | None, bool]:
        """Newest cmd (if any) and whether a restart arrived since last tick."""
        latest_cmd = None
        restart = False
        while True:
            try:
                msg = self.queue.get_nowait()
            except asyncio.QueueEmpty:
                return latest_cmd, restart
            if msg["type"] == "cmd":
                latest_cmd = msg
            elif msg["type"] == "restart":
                restart = True


def create_app(
    game_config: GameConfig,
    protagonist: Agent,
    policy_id: str,
    record_dir: str | None = None,
    pace: float = 1.0,
    master_seed: int = 0,
) -> FastAPI:
    """Build the serving app around one defender agent."""
    game_config.validate()
    app = FastAPI()
    session_counter = itertools.count()

    async def read_socket(ws: WebSocket, session: Session) -> None:
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = parse_client_message(text)
                except ValueError as e:
                    await ws.send_text(
                        json.dumps({"type": "error", "message": str(e)})
                    )
                    continue
                if msg["type"] == "join":
                    session.joined = True
                    await ws.send_text(
                        json.dumps(
                            {"type": "hello", "config": config_to_json(game_config)}
                        )
                    )
                else:
                    await session.queue.put(msg)
        except WebSocketDisconnect:
            session.closed.set()
        except RuntimeError:
            session.closed.set()

    async def run_game(
        ws: WebSocket, session: Session, game_index: int, session_id: int
    ) -> tuple[bool, bool]:
        """One full game; returns (ran to the horizon, restart already requested)."""
        seed = int(
            np.random.SeedSequence([master_seed, session_id, game_index]).generate_state(1)[0]
        )
        _, _, rng_p = agent_rngs(seed)
        state = reset(game_config, seed)
        protagonist.reset(rng_p)
        recorder = GameRecorder(game_config, seed, "human", policy_id)
        desired_pos: Vec3 | None = None
        desired_dir: Vec3 = (0.0, 0.0, 0.0)
        tick_interval = game_config.dt / pace if pace > 0.0 else 0.0
        next_deadline = time.monotonic()
        completed = False
        restarted = False
        try:
            while True:
                cmd, restart = session.drain()
                if restart:
                    restarted = True
                    break
                if session.closed.is_set():
                    break
                if cmd is not None:
                    desired_pos = (float(cmd["pos"][0]), float(cmd["pos"][1]), float(cmd["pos"][2]))
                    desired_dir = (float(cmd["dir"][0]), float(cmd["dir"][1]), float(cmd["dir"][2]))
                if desired_pos is None:
                    act_a = AgentAction((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
                else:
                    act_a = command_to_action(state, desired_pos, desired_dir)
                act_p = protagonist.act(observe(state, "protagonist", game_config))
                state, delta, events, terminal = step(state, act_a, act_p, game_config)
                recorder.on_tick(state, delta, events)
                await ws.send_text(json.dumps(state_message(state, game_config, events)))
                if terminal:
                    completed = True
                    await ws.send_text(
                        json.dumps({"type": "game_over", "score": state.score})
                    )
                    break
                if tick_interval > 0.0:
                    next_deadline += tick_interval
                    delay = next_deadline - time.monotonic()
                    if delay > 0.0:
                        await asyncio.sleep(delay)
                else:
                    # yield so the reader task can run even at full speed
                    await asyncio.sleep(0)
        finally:
            if record_dir is not None and recorder.ticks:
                os.makedirs(record_dir, exist_ok=True)
                path = os.path.join(
                    record_dir, f"session{session_id}_game{game_index}.jsonl"
                )
                write_game_record(recorder.finalize(truncated=not completed), path)
        return completed, restarted

    @app.websocket("/play")
    async def play(ws: WebSocket):
        await ws.accept()
        session = Session()
        session_id = next(session_counter)
        reader = asyncio.create_task(read_socket(ws, session))
        try:
            while not session.joined and not session.closed.is_set():
                await asyncio.sleep(0.01)
            game_index = 0
            while not session.closed.is_set():
                _, restarted = await run_game(ws, session, game_index, session_id)
                game_index += 1
                # unless a restart already arrived, wait for one (or disconnect)
                while not restarted and not session.closed.is_set():
                    _, restarted = session.drain()
                    if not restarted:
                        await asyncio.sleep(0.01)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            session.closed.set()
            reader.cancel()

    return app
