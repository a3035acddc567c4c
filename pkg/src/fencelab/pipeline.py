"""End-to-end pipeline stages over an output directory of flat artifacts.

Stages: warm-start training, characterization rounds, tournament, style
analysis, policy selection, and plant calibration. Every stage is a pure
function of (RunConfig, master seed); artifact bytes are reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .agents import Agent, PolicyAgent, StationaryAgent, play_game
from .baseline import BASELINE_POLICY_ID, BaselineAgent, HeuristicConfig
from .config import RunConfig
from .game import ANTAGONIST, PROTAGONIST
from .policy import mlp_from_json, mlp_to_json, policy_from_json, policy_to_json
from .records import GameRecorder, write_game_record
from .selfplay import (
    BlockMeta,
    PolicyLibrary,
    WarmStart,
    run_phase_one,
    run_phase_two,
)
from .style import (
    FeatureMatrix,
    pca_fit,
    run_tournament,
    select_most_separable,
    style_report_json,
    style_report_text,
)
from .plant import reference_to_json
from .sysid import calibrate, calibration_result_to_json, make_reference

MANIFEST_SCHEMA_VERSION = 1

LIBRARY_DIR = "library"
WARM_FILE = "warmstart.json"
TOURNAMENT_FILE = "tournament.json"
STYLE_JSON_FILE = "style_report.json"
STYLE_TEXT_FILE = "style_report.txt"
SELECTION_FILE = "selection.json"
SYSID_DIR = "sysid"
EVAL_DIR = "eval_games"


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _manifest(run: RunConfig, phase: int, round_num: int, metas: list[BlockMeta]) -> str:
    return _dumps(
        {
            "kind": "training_manifest",
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "master_seed": run.master_seed,
            "phase": phase,
            "round": round_num,
            "blocks": [m.to_json() for m in metas],
        }
    )


def warm_to_json(warm: WarmStart) -> dict:
    return {
        "kind": "warm_start",
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "antagonist": {
            "policy": policy_to_json(warm.policy_a),
            "value": mlp_to_json(warm.value_a),
        },
        "protagonist": {
            "policy": policy_to_json(warm.policy_p),
            "value": mlp_to_json(warm.value_p),
        },
    }


def warm_from_json(doc: dict) -> WarmStart:
    if doc.get("kind") != "warm_start":
        raise ValueError("not a warm-start file")
    return WarmStart(
        policy_from_json(doc["antagonist"]["policy"]),
        mlp_from_json(doc["antagonist"]["value"]),
        policy_from_json(doc["protagonist"]["policy"]),
        mlp_from_json(doc["protagonist"]["value"]),
    )


def stage_train_warmstart(run: RunConfig) -> WarmStart:
    """Phase-one training; persists the library, warm pair, and manifest."""
    run.validate()
    library = PolicyLibrary()
    warm, metas = run_phase_one(
        run.game, run.phase_one, run.ppo, run.seed_for("phase-one"), library
    )
    library.save(os.path.join(run.out_dir, LIBRARY_DIR))
    _write(os.path.join(run.out_dir, WARM_FILE), _dumps(warm_to_json(warm)))
    _write(
        os.path.join(run.out_dir, "manifest_phase1.json"),
        _manifest(run, 1, 0, metas),
    )
    return warm


def load_warm(run: RunConfig) -> WarmStart:
    with open(os.path.join(run.out_dir, WARM_FILE), "r", encoding="utf-8") as f:
        return warm_from_json(json.load(f))


def load_library(run: RunConfig) -> PolicyLibrary:
    return PolicyLibrary.load(os.path.join(run.out_dir, LIBRARY_DIR))


def stage_characterize(run: RunConfig, rounds: int | None = None) -> PolicyLibrary:
    """Phase-two rounds on top of an existing warm start.

    Runs rounds 1..n that are not yet registered in the library; each round
    is seeded independently from the master seed.
    """
    run.validate()
    n_rounds = run.library_rounds if rounds is None else rounds
    warm = load_warm(run)
    library = load_library(run)
    for round_num in range(1, n_rounds + 1):
        if round_num in library.pairs:
            continue
        round_seed = run.seed_for(f"phase-two-round-{round_num}")
        _, metas = run_phase_two(
            run.game, run.phase_two, run.ppo, warm, library, round_num, round_seed
        )
        _write(
            os.path.join(run.out_dir, f"manifest_phase2_round{round_num}.json"),
            _manifest(run, 2, round_num, metas),
        )
    library.save(os.path.join(run.out_dir, LIBRARY_DIR))
    return library


def stage_build_library(run: RunConfig) -> PolicyLibrary:
    """Verify the persisted library is complete and internally consistent."""
    library = load_library(run)
    missing = [
        r for r in range(1, run.library_rounds + 1) if r not in library.pairs
    ]
    if missing:
        raise ValueError(f"library incomplete: missing characterized rounds {missing}")
    for round_num, (ant_id, pro_id) in library.pairs.items():
        library.get(ant_id)
        library.get(pro_id)
    return library


def stage_tournament(run: RunConfig) -> FeatureMatrix:
    run.validate()
    library = load_library(run)
    summaries, matrix = run_tournament(
        library, run.tournament_games_per_pair, run.seed_for("tournament"), run.game
    )
    doc = {
        "kind": "tournament",
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "games_per_pair": run.tournament_games_per_pair,
        "games": [s.to_json() for s in summaries],
        "feature_matrix": matrix.to_json(),
    }
    _write(os.path.join(run.out_dir, TOURNAMENT_FILE), _dumps(doc))
    return matrix


def load_feature_matrix(run: RunConfig) -> FeatureMatrix:
    with open(os.path.join(run.out_dir, TOURNAMENT_FILE), "r", encoding="utf-8") as f:
        doc = json.load(f)
    fm = doc["feature_matrix"]
    return FeatureMatrix(
        protagonist_ids=list(fm["protagonist_ids"]),
        mean=np.asarray(fm["mean"], dtype=np.float64),
        std=np.asarray(fm["std"], dtype=np.float64),
        games_per_row=int(fm["games_per_row"]),
    )


def stage_analyze_style(run: RunConfig) -> tuple[FeatureMatrix, list[int]]:
    """PCA + selection over the tournament feature matrix; writes reports."""
    matrix = load_feature_matrix(run)
    model, projected = pca_fit(matrix.mean, k=run.pca_components)
    selected = select_most_separable(projected, k=run.select_k)
    _write(
        os.path.join(run.out_dir, STYLE_JSON_FILE),
        style_report_json(matrix, model, projected, selected),
    )
    _write(
        os.path.join(run.out_dir, STYLE_TEXT_FILE),
        style_report_text(matrix, model, selected),
    )
    return matrix, selected


def stage_select_policies(run: RunConfig) -> list[str]:
    """Re-derive the selection and write it as a stand-alone artifact."""
    matrix = load_feature_matrix(run)
    model, projected = pca_fit(matrix.mean, k=run.pca_components)
    selected = select_most_separable(projected, k=run.select_k)
    ids = [matrix.protagonist_ids[i] for i in selected]
    _write(
        os.path.join(run.out_dir, SELECTION_FILE),
        _dumps(
            {
                "kind": "policy_selection",
                "schema_version": MANIFEST_SCHEMA_VERSION,
                "selected_indices": selected,
                "selected_ids": ids,
                "retained_variance": model.retained,
            }
        ),
    )
    return ids


def stage_sysid(run: RunConfig) -> list[dict]:
    """Generate references and calibrate for each configured seed."""
    run.validate()
    results = []
    for seed in run.sysid.seeds:
        ref, truth = make_reference(seed, n_ticks=run.sysid.n_ticks)
        _write(os.path.join(run.out_dir, SYSID_DIR, f"reference_{seed}.json"),
               reference_to_json(ref))
        result = calibrate(
            ref, seed=run.seed_for(f"sysid-{seed}"),
            max_generations=run.sysid.max_generations,
            target_residual=run.sysid.target_residual,
        )
        _write(os.path.join(run.out_dir, SYSID_DIR, f"result_{seed}.json"),
               calibration_result_to_json(result, seed))
        rel_err = np.abs(result.x - truth) / np.abs(truth)
        results.append(
            {
                "seed": seed,
                "residual": result.residual,
                "max_relative_error": float(np.max(rel_err)),
                "generations": result.generations,
            }
        )
    return results


def resolve_agent(policy_id: str, run: RunConfig, library: PolicyLibrary | None) -> Agent:
    """Map a policy id to an agent: snapshot id, "baseline", or "stationary"."""
    if policy_id == BASELINE_POLICY_ID:
        return BaselineAgent(HeuristicConfig.from_game(run.game))
    if policy_id == "stationary":
        return StationaryAgent()
    if library is None:
        raise ValueError(f"policy {policy_id!r} needs a library")
    return PolicyAgent(library.get(policy_id).policy)


def stage_eval(
    run: RunConfig, pol_a: str, pol_p: str, games: int, keep_records: bool = False
) -> dict:
    """Head-to-head evaluation; returns a JSON-ready summary."""
    run.validate()
    if games < 1:
        raise ValueError("games must be positive")
    library = None
    if pol_a not in (BASELINE_POLICY_ID, "stationary") or pol_p not in (
        BASELINE_POLICY_ID, "stationary",
    ):
        library = load_library(run)
    scores = []
    for g in range(games):
        agent_a = resolve_agent(pol_a, run, library)
        agent_p = resolve_agent(pol_p, run, library)
        seed = run.seed_for(f"eval-{pol_a}-{pol_p}-{g}")
        recorder = (
            GameRecorder(run.game, seed, pol_a, pol_p) if keep_records else None
        )
        final = play_game(run.game, agent_a, agent_p, seed=seed, recorder=recorder)
        scores.append(final.score)
        if recorder is not None:
            path = os.path.join(run.out_dir, EVAL_DIR, f"game_{pol_a}_vs_{pol_p}_{g}.jsonl")
            os.makedirs(os.path.dirname(path), exist_ok=True)
            write_game_record(recorder.finalize(), path)
    return {
        "kind": "evaluation",
        "antagonist": pol_a,
        "protagonist": pol_p,
        "games": games,
        "scores": scores,
        "mean_score": float(np.mean(scores)),
    }
