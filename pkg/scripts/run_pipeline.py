"""Run the whole experiment pipeline into one output directory.

Stages: warm-start training, characterization rounds, library check,
round-robin tournament, style analysis + selection, plant calibration.
Everything is derived from (out_dir, master_seed); re-running is a no-op
for already-characterized rounds and byte-identical for the rest.

Usage:
    python scripts/run_pipeline.py --out runs/full --seed 0
    python scripts/run_pipeline.py --out runs/smoke --seed 0 --quick
"""

import argparse
import os
import sys
import time

from fencelab.config import RunConfig, SysidConfig, save_run_config
from fencelab.game import GameConfig
from fencelab.pipeline import (
    stage_analyze_style,
    stage_build_library,
    stage_characterize,
    stage_select_policies,
    stage_sysid,
    stage_tournament,
    stage_train_warmstart,
)
from fencelab.ppo import PpoConfig
from fencelab.selfplay import REWARD_SCORE_ONLY, PhaseConfig


def quick_run(out_dir: str, seed: int) -> RunConfig:
    """Coarse-dt smoke configuration: same code paths, minutes not hours."""
    return RunConfig(
        out_dir=out_dir,
        master_seed=seed,
        game=GameConfig(
            dt=0.1, horizon_ticks=200, camping_ticks=20,
            start_center_a=(-0.12, 0.0, 0.0), start_center_p=(0.12, 0.0, 0.0),
            start_jitter=0.1,
        ),
        ppo=PpoConfig(minibatch_size=64),
        phase_one=PhaseConfig(n_iter=1, n_updates_mu=4, n_updates_nu=4,
                              rollout_ticks=400, snapshot_every=2, eval_games=4),
        phase_two=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                              reward_mode=REWARD_SCORE_ONLY, alpha=0.0,
                              rollout_ticks=200, snapshot_every=1),
        library_rounds=4,
        tournament_games_per_pair=5,
        sysid=SysidConfig(n_ticks=120, max_generations=300, seeds=(1,)),
    )


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/full", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("--quick", action="store_true",
                    help="coarse-dt smoke run instead of full resolution")
    ap.add_argument("--skip-sysid", action="store_true",
                    help="skip the plant-calibration stage")
    args = ap.parse_args(argv)

    run = quick_run(args.out, args.seed) if args.quick else RunConfig(
        out_dir=args.out, master_seed=args.seed
    )
    os.makedirs(args.out, exist_ok=True)
    save_run_config(run, os.path.join(args.out, "run_config.json"))

    stages = [
        ("warm start", lambda: stage_train_warmstart(run)),
        ("characterize", lambda: stage_characterize(run)),
        ("library check", lambda: stage_build_library(run)),
        ("tournament", lambda: stage_tournament(run)),
        ("style analysis", lambda: stage_analyze_style(run)),
        ("selection", lambda: stage_select_policies(run)),
    ]
    if not args.skip_sysid:
        stages.append(("plant calibration", lambda: stage_sysid(run)))

    for name, fn in stages:
        t0 = time.monotonic()
        fn()
        print(f"[{time.monotonic() - t0:7.1f}s] {name} done")
    print(f"artifacts in {run.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
