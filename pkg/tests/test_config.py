"""Run configuration: seed derivation stability and JSON persistence."""

import dataclasses
import json

import numpy as np
import pytest

from fencelab.config import (
    RunConfig,
    SysidConfig,
    derive_seed,
    load_run_config,
    run_config_from_json,
    run_config_to_json,
    save_run_config,
)
from fencelab.game import GameConfig
from fencelab.ppo import PpoConfig
from fencelab.selfplay import PhaseConfig


class TestDeriveSeed:
    def test_frozen_values(self):
        # pinned so artifacts stay reproducible across releases
        assert derive_seed(0, "phase-one") == 1880563710
        assert derive_seed(0, "tournament") == 1705859527
        assert derive_seed(7, "phase-one") == 1586656886
        assert derive_seed(0, "phase-two-round-1") == 3285709072
        assert derive_seed(0, "sysid-1") == 4014060529

    def test_sensitive_to_both_inputs(self):
        assert derive_seed(0, "a") != derive_seed(0, "b")
        assert derive_seed(0, "a") != derive_seed(1, "a")

    def test_range_is_uint32(self):
        for label in ("x", "y", "phase-one", "eval-0"):
            s = derive_seed(123, label)
            assert 0 <= s < 2**32

    def test_usable_as_generator_seed(self):
        rng = np.random.default_rng(derive_seed(5, "check"))
        rng.standard_normal(3)


class TestValidation:
    def test_sysid_config(self):
        SysidConfig().validate()
        with pytest.raises(ValueError, match="budget"):
            SysidConfig(n_ticks=10).validate()
        with pytest.raises(ValueError, match="budget"):
            SysidConfig(max_generations=0).validate()
        with pytest.raises(ValueError, match="seed"):
            SysidConfig(seeds=()).validate()

    def test_run_config(self):
        RunConfig(out_dir="/tmp/x").validate()
        with pytest.raises(ValueError, match="out_dir"):
            RunConfig(out_dir="").validate()
        with pytest.raises(ValueError, match="library_rounds"):
            RunConfig(out_dir="/tmp/x", library_rounds=0).validate()
        with pytest.raises(ValueError, match="games_per_pair"):
            RunConfig(out_dir="/tmp/x", tournament_games_per_pair=0).validate()
        with pytest.raises(ValueError, match="positive"):
            RunConfig(out_dir="/tmp/x", select_k=0).validate()

    def test_nested_configs_are_validated(self):
        run = RunConfig(out_dir="/tmp/x")
        run.game = GameConfig(dt=0.5)  # horizon no longer spans 20 s
        with pytest.raises(ValueError):
            run.validate()

    def test_seed_for_matches_derive(self):
        run = RunConfig(out_dir="/tmp/x", master_seed=42)
        assert run.seed_for("tournament") == derive_seed(42, "tournament")


def custom_run() -> RunConfig:
    return RunConfig(
        out_dir="/tmp/run7",
        master_seed=77,
        game=GameConfig(dt=0.1, horizon_ticks=200, camping_ticks=20),
        ppo=PpoConfig(clip_eps=0.3, epochs=2),
        phase_one=PhaseConfig(n_iter=1, n_updates_mu=3, n_updates_nu=4,
                              rollout_ticks=512, eval_games=2),
        phase_two=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                              reward_mode="score_only", rollout_ticks=256),
        library_rounds=2,
        tournament_games_per_pair=3,
        pca_components=2,
        select_k=2,
        sysid=SysidConfig(n_ticks=120, max_generations=50,
                          target_residual=1e-8, seeds=(9,)),
    )


class TestJsonRoundtrip:
    def test_full_roundtrip_preserves_every_field(self):
        run = custom_run()
        back = run_config_from_json(run_config_to_json(run))
        assert back.out_dir == run.out_dir
        assert back.master_seed == 77
        assert back.game == run.game
        assert dataclasses.asdict(back.ppo) == dataclasses.asdict(run.ppo)
        assert dataclasses.asdict(back.phase_one) == dataclasses.asdict(run.phase_one)
        assert dataclasses.asdict(back.phase_two) == dataclasses.asdict(run.phase_two)
        assert back.library_rounds == 2
        assert back.tournament_games_per_pair == 3
        assert back.pca_components == 2 and back.select_k == 2
        assert back.sysid == run.sysid

    def test_json_document_is_serializable(self):
        doc = run_config_to_json(custom_run())
        assert doc["kind"] == "run_config"
        json.dumps(doc)

    def test_minimal_document_uses_defaults(self):
        back = run_config_from_json(
            {"kind": "run_config", "schema_version": 1, "out_dir": "/tmp/min"}
        )
        assert back.master_seed == 0
        assert back.library_rounds == 6
        assert back.sysid.seeds == (1, 2, 3)
        assert back.game == GameConfig()

    def test_rejects_wrong_kind_and_schema(self):
        with pytest.raises(ValueError, match="not a run config"):
            run_config_from_json({"kind": "other", "out_dir": "x"})
        with pytest.raises(ValueError, match="schema"):
            run_config_from_json({"kind": "run_config", "schema_version": 99,
                                  "out_dir": "x"})

    def test_file_roundtrip(self, tmp_path):
        run = custom_run()
        path = tmp_path / "run.json"
        save_run_config(run, path)
        back = load_run_config(path)
        assert back.master_seed == run.master_seed
        assert back.sysid == run.sysid
        # byte-stable re-save
        save_run_config(back, tmp_path / "resave.json")
        assert path.read_bytes() == (tmp_path / "resave.json").read_bytes()
