"""Competitive fencing self-play laboratory.

A deterministic two-agent fencing game, from-scratch policy-gradient
training with two-phase co-evolution, a hand-designed blocking baseline,
gameplay-style analytics, evolution-strategy plant calibration, and a live
WebSocket server for human-versus-policy play.
"""

__version__ = "0.1.0"

from .game import (  # noqa: F401
    ANTAGONIST,
    PROTAGONIST,
    AgentAction,
    GameConfig,
    GameState,
    observe,
    reset,
    step,
)
