"""Command-line entry points for the training, analysis, and serving stages."""

from __future__ import annotations

import argparse
import json
import sys

from .baseline import BASELINE_POLICY_ID
from .config import RunConfig, load_run_config, save_run_config
from . import pipeline


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fencelab",
        description="Competitive fencing self-play: training, style analysis, "
        "plant calibration, and live serving.",
    )
    p.add_argument("--config", help="path to a run-config JSON file")
    p.add_argument("--out", default="runs/default", help="output directory (when no config file)")
    p.add_argument("--seed", type=int, default=0, help="master seed (when no config file)")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("train-warmstart", help="phase-one alternating warm-start training")

    c = sub.add_parser("characterize", help="phase-two characterization rounds")
    c.add_argument("--rounds", type=int, default=None, help="total rounds to ensure")

    sub.add_parser("build-library", help="verify the characterized-pair library")
    sub.add_parser("tournament", help="round-robin games over the library")
    sub.add_parser("analyze-style", help="featurize, fit PCA, report styles")
    sub.add_parser("select-policies", help="pick the most separable defenders")
    sub.add_parser("sysid", help="generate references and calibrate the plant")

    e = sub.add_parser("eval", help="head-to-head evaluation games")
    e.add_argument("--pol-a", required=True, help="antagonist policy id")
    e.add_argument("--pol-p", required=True,
                   help=f"protagonist policy id (or {BASELINE_POLICY_ID!r})")
    e.add_argument("--games", type=int, default=10)
    e.add_argument("--keep-records", action="store_true", help="persist game logs")

    s = sub.add_parser("serve", help="serve a defender over WebSocket for live play")
    s.add_argument("--policy", required=True, help="protagonist policy id")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--pace", type=float, default=1.0,
                   help="wall-clock speed factor; 0 disables throttling")

    w = sub.add_parser("write-config", help="write the default run config to --config")
    w.add_argument("path", help="destination JSON path")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        return load_run_config(args.config)
    config = RunConfig(out_dir=args.out, master_seed=args.seed)
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "write-config":
        config = RunConfig(out_dir=args.out, master_seed=args.seed)
        save_run_config(config, args.path)
        print(f"wrote default run config to {args.path}")
        return 0

    run = resolve_config(args)

    if args.command == "train-warmstart":
        pipeline.stage_train_warmstart(run)
        print(f"warm start written to {run.out_dir}")
    elif args.command == "characterize":
        library = pipeline.stage_characterize(run, args.rounds)
        print(f"library now holds {len(library.pairs)} characterized pairs")
    elif args.command == "build-library":
        library = pipeline.stage_build_library(run)
        print(
            f"library ok: {len(library.snapshots)} snapshots, "
            f"{len(library.pairs)} characterized pairs"
        )
    elif args.command == "tournament":
        matrix = pipeline.stage_tournament(run)
        print(
            f"tournament complete: {len(matrix.protagonist_ids)} defenders x "
            f"{matrix.games_per_row} games each"
        )
    elif args.command == "analyze-style":
        _, selected = pipeline.stage_analyze_style(run)
        print(f"style report written; most separable rows: {selected}")
    elif args.command == "select-policies":
        ids = pipeline.stage_select_policies(run)
        print(json.dumps({"selected": ids}))
    elif args.command == "sysid":
        results = pipeline.stage_sysid(run)
        print(json.dumps({"runs": results}))
    elif args.command == "eval":
        summary = pipeline.stage_eval(
            run, args.pol_a, args.pol_p, args.games, keep_records=args.keep_records
        )
        print(json.dumps(summary))
    elif args.command == "serve":
        import uvicorn

        from .server import create_app

        library = None
        if args.policy not in (BASELINE_POLICY_ID, "stationary"):
            library = pipeline.load_library(run)
        agent = pipeline.resolve_agent(args.policy, run, library)
        app = create_app(
            run.game, agent, args.policy,
            record_dir=f"{run.out_dir}/sessions", pace=args.pace,
            master_seed=run.master_seed,
        )
        print(f"serving policy {args.policy!r} on ws://{args.host}:{args.port}/play")
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    else:
        raise AssertionError(f"unhandled command {args.command!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
