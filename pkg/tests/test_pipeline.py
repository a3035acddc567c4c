"""Pipeline stages over a shared miniature run directory."""

import json
import os

import numpy as np
import pytest

from fencelab import pipeline
from fencelab.agents import PolicyAgent, StationaryAgent
from fencelab.baseline import BaselineAgent
from fencelab.config import RunConfig, SysidConfig
from fencelab.game import GameConfig
from fencelab.ppo import PpoConfig
from fencelab.selfplay import PhaseConfig
from fencelab.style import FeatureMatrix


def tiny_run(out_dir: str) -> RunConfig:
    return RunConfig(
        out_dir=out_dir,
        master_seed=5,
        game=GameConfig(
            dt=0.1, horizon_ticks=200, camping_ticks=20,
            start_center_a=(-0.12, 0.0, 0.0), start_center_p=(0.12, 0.0, 0.0),
            start_jitter=0.1,
        ),
        ppo=PpoConfig(minibatch_size=64),
        phase_one=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                              rollout_ticks=200, snapshot_every=1, eval_games=0),
        phase_two=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                              reward_mode="score_only", rollout_ticks=200,
                              snapshot_every=1, eval_games=0),
        library_rounds=3,
        tournament_games_per_pair=1,
        pca_components=2,
        select_k=2,
        sysid=SysidConfig(n_ticks=60, max_generations=12, seeds=(1,)),
    )


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    cfg = tiny_run(str(tmp_path_factory.mktemp("run")))
    pipeline.stage_train_warmstart(cfg)
    pipeline.stage_characterize(cfg)
    return cfg


class TestWarmstartStage:
    def test_artifacts_exist(self, run):
        assert os.path.isdir(os.path.join(run.out_dir, pipeline.LIBRARY_DIR))
        assert os.path.isfile(os.path.join(run.out_dir, pipeline.WARM_FILE))
        assert os.path.isfile(os.path.join(run.out_dir, "manifest_phase1.json"))

    def test_warm_file_round_trips(self, run):
        warm = pipeline.load_warm(run)
        doc = pipeline.warm_to_json(warm)
        with open(os.path.join(run.out_dir, pipeline.WARM_FILE)) as f:
            assert doc == json.load(f)

    def test_manifest_lists_phase_one_blocks(self, run):
        with open(os.path.join(run.out_dir, "manifest_phase1.json")) as f:
            doc = json.load(f)
        assert doc["kind"] == "training_manifest"
        assert doc["phase"] == 1
        assert doc["master_seed"] == 5
        # one antagonist and one protagonist block for a single iteration
        roles = [b["role"] for b in doc["blocks"]]
        assert roles == ["antagonist", "protagonist"]

    def test_warm_from_json_rejects_wrong_kind(self):
        with pytest.raises(ValueError, match="warm-start"):
            pipeline.warm_from_json({"kind": "other"})


class TestCharacterizeStage:
    def test_library_has_all_rounds(self, run):
        library = pipeline.load_library(run)
        assert sorted(library.pairs) == [1, 2, 3]
        for round_num in (1, 2, 3):
            with open(os.path.join(run.out_dir, f"manifest_phase2_round{round_num}.json")) as f:
                doc = json.load(f)
            assert doc["phase"] == 2 and doc["round"] == round_num

    def test_rerun_skips_existing_rounds(self, run):
        before = pipeline.load_library(run)
        library = pipeline.stage_characterize(run)
        assert sorted(library.pairs) == sorted(before.pairs)
        assert sorted(library.snapshots) == sorted(before.snapshots)

    def test_build_library_passes_when_complete(self, run):
        library = pipeline.stage_build_library(run)
        assert sorted(library.pairs) == [1, 2, 3]

    def test_build_library_reports_missing_rounds(self, run):
        wider = tiny_run(run.out_dir)
        wider.library_rounds = 5
        with pytest.raises(ValueError, match=r"missing characterized rounds \[4, 5\]"):
            pipeline.stage_build_library(wider)


class TestTournamentAndStyle:
    def test_tournament_artifact_round_trips(self, run):
        matrix = pipeline.stage_tournament(run)
        loaded = pipeline.load_feature_matrix(run)
        assert isinstance(loaded, FeatureMatrix)
        assert loaded.protagonist_ids == matrix.protagonist_ids
        np.testing.assert_array_equal(loaded.mean, matrix.mean)
        np.testing.assert_array_equal(loaded.std, matrix.std)
        assert loaded.games_per_row == matrix.games_per_row == 3

    def test_style_reports_written(self, run):
        matrix, selected = pipeline.stage_analyze_style(run)
        with open(os.path.join(run.out_dir, pipeline.STYLE_JSON_FILE)) as f:
            doc = json.load(f)
        assert doc["selected_indices"] == selected
        text = open(os.path.join(run.out_dir, pipeline.STYLE_TEXT_FILE)).read()
        for pid in matrix.protagonist_ids:
            assert pid in text

    def test_selection_stage_agrees_with_style_stage(self, run):
        _, selected = pipeline.stage_analyze_style(run)
        ids = pipeline.stage_select_policies(run)
        with open(os.path.join(run.out_dir, pipeline.SELECTION_FILE)) as f:
            doc = json.load(f)
        assert doc["selected_indices"] == selected
        assert doc["selected_ids"] == ids
        matrix = pipeline.load_feature_matrix(run)
        assert ids == [matrix.protagonist_ids[i] for i in selected]

    def test_tournament_artifact_is_reproducible(self, run, tmp_path):
        # stage output depends only on the config and master seed, not on the
        # directory it is written into
        again = tiny_run(str(tmp_path / "other"))
        pipeline.stage_train_warmstart(again)
        pipeline.stage_characterize(again)
        pipeline.stage_tournament(again)
        pipeline.stage_tournament(run)
        a = open(os.path.join(run.out_dir, pipeline.TOURNAMENT_FILE), "rb").read()
        b = open(os.path.join(again.out_dir, pipeline.TOURNAMENT_FILE), "rb").read()
        assert a == b


class TestSysidStage:
    def test_artifacts_and_summary(self, run):
        results = pipeline.stage_sysid(run)
        assert len(results) == 1
        r = results[0]
        assert r["seed"] == 1
        assert set(r) == {"seed", "residual", "max_relative_error", "generations"}
        sysdir = os.path.join(run.out_dir, pipeline.SYSID_DIR)
        assert os.path.isfile(os.path.join(sysdir, "reference_1.json"))
        with open(os.path.join(sysdir, "result_1.json")) as f:
            doc = json.load(f)
        assert doc["kind"] == "calibration_result"
        assert doc["residual"] == r["residual"]


class TestAgentsAndEval:
    def test_resolve_agent_kinds(self, run):
        library = pipeline.load_library(run)
        assert isinstance(pipeline.resolve_agent("baseline", run, None), BaselineAgent)
        assert isinstance(pipeline.resolve_agent("stationary", run, None), StationaryAgent)
        some_id = next(iter(library.snapshots))
        assert isinstance(pipeline.resolve_agent(some_id, run, library), PolicyAgent)
        with pytest.raises(ValueError, match="needs a library"):
            pipeline.resolve_agent("antagonist-p1-r0-u0001", run, None)
        with pytest.raises(KeyError, match="no snapshot"):
            pipeline.resolve_agent("nope", run, library)

    def test_eval_baseline_vs_stationary(self, run):
        summary = pipeline.stage_eval(run, "baseline", "stationary", games=2)
        assert summary["games"] == 2
        assert len(summary["scores"]) == 2
        assert summary["mean_score"] == np.mean(summary["scores"])
        again = pipeline.stage_eval(run, "baseline", "stationary", games=2)
        assert again["scores"] == summary["scores"]

    def test_eval_keeps_records_when_asked(self, run):
        pipeline.stage_eval(run, "stationary", "baseline", games=2, keep_records=True)
        evdir = os.path.join(run.out_dir, pipeline.EVAL_DIR)
        names = sorted(os.listdir(evdir))
        assert "game_stationary_vs_baseline_0.jsonl" in names
        assert "game_stationary_vs_baseline_1.jsonl" in names

    def test_eval_rejects_zero_games(self, run):
        with pytest.raises(ValueError, match="games"):
            pipeline.stage_eval(run, "baseline", "stationary", games=0)
