"""Run-level configuration and deterministic seed derivation.

One master seed plus a text label deterministically yields every sub-seed
in the pipeline, so re-running any stage with the same RunConfig reproduces
identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .game import GameConfig
from .ppo import PpoConfig
from .records import config_from_json, config_to_json
from .selfplay import PhaseConfig, default_phase_one, default_phase_two

CONFIG_SCHEMA_VERSION = 1


def derive_seed(master_seed: int, label: str) -> int:
    """Stable sub-seed from the master seed and a purpose label."""
    crc = zlib.crc32(label.encode("utf-8"))
    return int(np.random.SeedSequence([master_seed, crc]).generate_state(1)[0])


@dataclass(slots=True)
class SysidConfig:
    n_ticks: int = 900
    max_generations: int = 4000
    target_residual: float = 1e-10
    seeds: tuple[int, ...] = (1, 2, 3)

    def validate(self) -> None:
        if self.n_ticks < 30 or self.max_generations < 1:
            raise ValueError("bad sysid budget")
        if not self.seeds:
            raise ValueError("need at least one sysid seed")


@dataclass(slots=True)
class RunConfig:
    out_dir: str
    master_seed: int = 0
    game: GameConfig = field(default_factory=GameConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    phase_one: PhaseConfig = field(default_factory=default_phase_one)
    phase_two: PhaseConfig = field(default_factory=default_phase_two)
    library_rounds: int = 6
    tournament_games_per_pair: int = 20
    pca_components: int = 3
    select_k: int = 3
    sysid: SysidConfig = field(default_factory=SysidConfig)

    def validate(self) -> None:
        if not self.out_dir:
            raise ValueError("out_dir must be set")
        self.game.validate()
        self.ppo.validate()
        self.phase_one.validate()
        self.phase_two.validate()
        self.sysid.validate()
        if self.library_rounds < 1:
            raise ValueError("library_rounds must be positive")
        if self.tournament_games_per_pair < 1:
            raise ValueError("tournament_games_per_pair must be positive")
        if self.pca_components < 1 or self.select_k < 1:
            raise ValueError("pca_components and select_k must be positive")

    def seed_for(self, label: str) -> int:
        return derive_seed(self.master_seed, label)


def run_config_to_json(config: RunConfig) -> dict:
    return {
        "kind": "run_config",
        "schema_version": CONFIG_SCHEMA_VERSION,
        "out_dir": config.out_dir,
        "master_seed": config.master_seed,
        "game": config_to_json(config.game),
        "ppo": dataclasses.asdict(config.ppo),
        "phase_one": dataclasses.asdict(config.phase_one),
        "phase_two": dataclasses.asdict(config.phase_two),
        "library_rounds": config.library_rounds,
        "tournament_games_per_pair": config.tournament_games_per_pair,
        "pca_components": config.pca_components,
        "select_k": config.select_k,
        "sysid": {
            "n_ticks": config.sysid.n_ticks,
            "max_generations": config.sysid.max_generations,
            "target_residual": config.sysid.target_residual,
            "seeds": list(config.sysid.seeds),
        },
    }


def run_config_from_json(doc: dict) -> RunConfig:
    if doc.get("kind") != "run_config":
        raise ValueError(f"not a run config: kind={doc.get('kind')!r}")
    if doc.get("schema_version") != CONFIG_SCHEMA_VERSION:
        raise ValueError(f"unsupported config schema {doc.get('schema_version')!r}")
    sysid_doc = doc.get("sysid", {})
    config = RunConfig(
        out_dir=doc["out_dir"],
        master_seed=int(doc.get("master_seed", 0)),
        game=config_from_json(doc["game"]) if "game" in doc else GameConfig(),
        ppo=PpoConfig(**doc.get("ppo", {})),
        phase_one=PhaseConfig(**doc.get("phase_one", {})),
        phase_two=PhaseConfig(**doc.get("phase_two", {})),
        library_rounds=int(doc.get("library_rounds", 6)),
        tournament_games_per_pair=int(doc.get("tournament_games_per_pair", 20)),
        pca_components=int(doc.get("pca_components", 3)),
        select_k=int(doc.get("select_k", 3)),
        sysid=SysidConfig(
            n_ticks=int(sysid_doc.get("n_ticks", 900)),
            max_generations=int(sysid_doc.get("max_generations", 4000)),
            target_residual=float(sysid_doc.get("target_residual", 1e-10)),
            seeds=tuple(sysid_doc.get("seeds", (1, 2, 3))),
        ),
    )
    config.validate()
    return config


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return run_config_from_json(json.load(f))


def save_run_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(run_config_to_json(config), separators=(",", ":")) + "\n")
