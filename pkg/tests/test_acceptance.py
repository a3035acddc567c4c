"""Acceptance gate: one quantitative end-to-end check per headline guarantee.

Each test states its tolerance and budget inline. The suite exercises exact
scoring agreement against an independent rescorer, score bounds, verified
policy-gradient arithmetic, demonstrable learning, the two training-schedule
properties, the style pipeline, the hand-designed blocker, plant-parameter
recovery, bitwise reproducibility, and record integrity.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from fencelab import pipeline
from fencelab.agents import PolicyAgent, RandomAgent, StationaryAgent, play_game
from fencelab.baseline import (
    HeuristicConfig,
    HeuristicState,
    baseline_act,
    closest_point_param,
    desired_pose,
)
from fencelab.cmaes import CmaConfig, cmaes_minimize
from fencelab.config import RunConfig, SysidConfig
from fencelab.game import (
    ANTAGONIST,
    PROTAGONIST,
    GameConfig,
    reset_fleet,
    step_fleet,
)
from fencelab.geometry import dot, norm
from fencelab.policy import GaussianPolicy, make_value_net
from fencelab.ppo import PpoConfig, RolloutBatch, ppo_loss, ppo_loss_and_grad, ppo_update
from fencelab.records import (
    GameRecorder,
    record_from_jsonl,
    record_to_jsonl,
    rescore,
    rescore_arrays,
    verify_record,
)
from fencelab.selfplay import (
    REWARD_MIXED,
    REWARD_SCORE_ONLY,
    SAMPLE_UNIFORM,
    PhaseConfig,
    PolicyLibrary,
    PolicySnapshot,
    collect_rollouts,
    evaluate_vs,
    run_phase_one,
    run_phase_two,
    sample_opponent,
)
from fencelab.style import pca_fit, run_tournament, select_most_separable
from fencelab.sysid import calibrate, make_reference


def close_config() -> GameConfig:
    """Full-resolution game with jittered near-target starts so random play
    produces scoring ticks, contacts, and camping streaks."""
    return GameConfig(
        start_center_a=(-0.12, 0.0, 0.0),
        start_center_p=(0.12, 0.0, 0.0),
        start_jitter=0.1,
    )


def coarse_config() -> GameConfig:
    """Same 20 s game at dt=0.1 for schedule/pipeline checks where per-tick
    resolution is irrelevant."""
    return GameConfig(
        dt=0.1, horizon_ticks=200, camping_ticks=20,
        start_center_a=(-0.12, 0.0, 0.0), start_center_p=(0.12, 0.0, 0.0),
        start_jitter=0.1,
    )


@pytest.fixture(scope="module")
def random_game_batch():
    """1,000 seeded random-action games with full logged geometry."""
    config = close_config()
    n, T = 1000, config.horizon_ticks
    scale = np.array([0.05, 0.05, 0.05, 0.1, 0.1, 0.1])
    t0 = time.monotonic()
    fleet = reset_fleet(config, list(range(n)))
    rng = np.random.default_rng(2718)
    a_c = np.empty((T, n, 3))
    a_d = np.empty((T, n, 3))
    p_c = np.empty((T, n, 3))
    p_d = np.empty((T, n, 3))
    for t in range(T):
        act_a = rng.uniform(-1.0, 1.0, (n, 6)) * scale
        act_p = rng.uniform(-1.0, 1.0, (n, 6)) * scale
        step_fleet(fleet, act_a, act_p, config)
        a_c[t], a_d[t] = fleet.center_a, fleet.dir_a
        p_c[t], p_d[t] = fleet.center_p, fleet.dir_p
    engine_scores = fleet.score.copy()
    rescored = np.array(
        [
            rescore_arrays(a_c[:, g], a_d[:, g], p_c[:, g], p_d[:, g], config)[0]
            for g in range(n)
        ],
        dtype=np.int64,
    )
    elapsed = time.monotonic() - t0
    return engine_scores, rescored, elapsed


def test_scoring_engine_matches_independent_rescorer_on_1000_games(random_game_batch):
    # the rescorer recomputes every game from logged geometry alone, with its
    # own distance routines and its own camping-streak scan
    engine_scores, rescored, elapsed = random_game_batch
    assert engine_scores.shape == rescored.shape == (1000,)
    np.testing.assert_array_equal(engine_scores, rescored)
    assert elapsed < 30.0, f"scoring oracle took {elapsed:.1f}s"


def test_score_bounds_and_scripted_perfect_attacker(random_game_batch):
    engine_scores, _, _ = random_game_batch
    # worst case -10 on each of 2000 ticks; best case +1 per tick plus ten
    # camping awards of +10
    assert np.all(engine_scores >= -20000)
    assert np.all(engine_scores <= 2100)
    # an attacker resting inside the target, far from the defender, earns
    # exactly one point per tick for the whole game
    config = GameConfig(start_center_a=(-0.1, 0.0, 0.0))
    final = play_game(config, StationaryAgent(), StationaryAgent(), seed=0)
    assert final.score == 2000


def test_policy_gradient_matches_central_finite_differences():
    t0 = time.monotonic()
    cfg = PpoConfig()
    worst = 0.0
    for trial in range(20):
        rng = np.random.default_rng(9000 + trial)
        obs_dim = int(rng.integers(4, 8))
        act_dim = int(rng.integers(2, 4))
        hidden = [(8,), (12,), (6, 5)][trial % 3]
        n = 40
        policy = GaussianPolicy(obs_dim, act_dim, hidden=hidden, rng=rng)
        value = make_value_net(obs_dim, hidden, rng=rng)
        obs = rng.standard_normal((n, obs_dim))
        actions = policy.mean(obs) + np.exp(policy.log_std) * rng.standard_normal((n, act_dim))
        # spread the ratios to either side of the clip window, away from its
        # kinks, so both surrogate branches are exercised smoothly
        offsets = rng.choice([-0.45, 0.0, 0.45], size=n)
        batch = RolloutBatch(
            obs=obs,
            actions=actions,
            log_probs=policy.log_prob(obs, actions) - offsets,
            rewards=rng.standard_normal(n),
            values=rng.standard_normal(n),
            terminals=np.zeros(n, dtype=bool),
        )
        advantages = rng.standard_normal(n)
        returns = rng.standard_normal(n)

        _, gp, gv, _ = ppo_loss_and_grad(policy, value, batch, advantages, returns, cfg)
        analytic = np.concatenate([g.ravel() for g in gp] + [g.ravel() for g in gv])

        flat_p = policy.get_flat()
        flat_v = value.get_flat()
        combined = np.concatenate([flat_p, flat_v])
        split = flat_p.size

        def loss_at(vec):
            policy.set_flat(vec[:split])
            value.set_flat(vec[split:])
            return ppo_loss(policy, value, batch, advantages, returns, cfg)

        eps = 1e-6
        fd = np.empty_like(combined)
        for i in range(combined.size):
            probe = combined.copy()
            probe[i] = combined[i] + eps
            up = loss_at(probe)
            probe[i] = combined[i] - eps
            down = loss_at(probe)
            fd[i] = (up - down) / (2.0 * eps)
        loss_at(combined)

        rel = np.linalg.norm(analytic - fd) / max(1.0, np.linalg.norm(fd))
        worst = max(worst, rel)
        assert rel < 1e-4, f"trial {trial}: relative gradient error {rel:.2e}"
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"gradient check took {elapsed:.1f}s (worst err {worst:.2e})"


def test_attacker_trained_against_stationary_defender_reaches_500():
    # desk-scale learning budget: at most 60 updates of 8192 ticks each,
    # evaluated over 20 fresh stochastic games; must finish inside 30 min
    t0 = time.monotonic()
    config = close_config()
    seed_rng = np.random.default_rng(42)
    policy = GaussianPolicy(rng=np.random.default_rng(seed_rng.integers(2**63)))
    value = make_value_net(rng=np.random.default_rng(seed_rng.integers(2**63)))
    ppo_cfg = PpoConfig()
    best = -np.inf
    for update in range(1, 61):
        batch, _ = collect_rollouts(
            config, policy, value, StationaryAgent(), ANTAGONIST,
            8192, REWARD_MIXED, 0.01, int(seed_rng.integers(2**63)),
        )
        policy, value, _ = ppo_update(
            policy, value, batch, ppo_cfg, np.random.default_rng(seed_rng.integers(2**63))
        )
        if update >= 30 and update % 10 == 0:
            mean = evaluate_vs(
                config, policy, ANTAGONIST, StationaryAgent(), 20,
                int(seed_rng.integers(2**63)),
            )
            best = max(best, mean)
            if mean >= 500.0:
                break
    elapsed = time.monotonic() - t0
    assert best >= 500.0, f"best mean eval score {best:.0f} after {update} updates"
    assert elapsed < 1800.0, f"learning run took {elapsed:.0f}s"


def test_warmstart_blocks_bias_toward_the_current_learner():
    # four alternating blocks per seed; the learner's mean eval score against
    # its current opponent must rise across the block in at least 3 of 4
    phase = PhaseConfig(
        n_iter=2, n_updates_mu=15, n_updates_nu=15,
        rollout_ticks=8192, eval_games=12, snapshot_every=5,
    )
    config = close_config()
    for seed in (101, 202, 303):
        library = PolicyLibrary()
        _, metas = run_phase_one(config, phase, PpoConfig(), seed, library)
        assert len(metas) == 4
        improved = sum(1 for m in metas if m.eval_after > m.eval_before)
        assert improved >= 3, (
            f"seed {seed}: only {improved}/4 blocks improved "
            f"({[(m.eval_before, m.eval_after) for m in metas]})"
        )


def test_characterization_runs_35_score_only_blocks_with_uniform_sampling():
    config = coarse_config()
    ppo_cfg = PpoConfig(minibatch_size=64)
    warm_phase = PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                             rollout_ticks=200, snapshot_every=1, eval_games=0)
    library = PolicyLibrary()
    warm, _ = run_phase_one(config, warm_phase, ppo_cfg, 7, library)

    char_phase = PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                             reward_mode=REWARD_SCORE_ONLY, alpha=0.0,
                             rollout_ticks=200, snapshot_every=1)
    _, metas = run_phase_two(config, char_phase, ppo_cfg, warm, library, 1, 11)

    assert len(metas) == 35
    assert all(m.reward_mode == REWARD_SCORE_ONLY for m in metas)
    expected_roles = [ANTAGONIST if i % 2 == 0 else PROTAGONIST for i in range(35)]
    assert [m.role for m in metas] == expected_roles
    # opponents come from the snapshot history, and not always the newest one
    assert all(m.opponent_id in library.snapshots for m in metas)
    assert len({m.opponent_id for m in metas}) > 3

    # the sampling rule itself: uniform over the pool within 5 sigma
    rng = np.random.default_rng(0)
    pool = [
        PolicySnapshot(f"s{i}", PROTAGONIST, 1, 0, i,
                       GaussianPolicy(hidden=(4,), rng=rng),
                       make_value_net(hidden=(4,), rng=rng))
        for i in range(5)
    ]
    draws = 5000
    counts = {s.id: 0 for s in pool}
    for _ in range(draws):
        counts[sample_opponent(pool, PROTAGONIST, SAMPLE_UNIFORM, rng).id] += 1
    sigma = math.sqrt(draws * 0.2 * 0.8)
    for snap_id, count in counts.items():
        assert abs(count - draws / 5) < 5 * sigma, f"{snap_id}: {count}"


def test_style_pipeline_variance_retention_and_optimal_selection():
    # four characterized pairs, twenty games per pairing
    library = PolicyLibrary()
    rng = np.random.default_rng(3)
    for rnd in range(1, 5):
        for role, prefix in ((ANTAGONIST, "antagonist"), (PROTAGONIST, "protagonist")):
            library.add(PolicySnapshot(
                f"{prefix}-p2-r{rnd}-u0001", role, 2, rnd, 1,
                GaussianPolicy(hidden=(8,), rng=rng),
                make_value_net(hidden=(8,), rng=rng),
            ))
        library.register_pair(rnd, f"antagonist-p2-r{rnd}-u0001",
                              f"protagonist-p2-r{rnd}-u0001")

    summaries, matrix = run_tournament(library, 20, seed=17, game_config=coarse_config())
    assert len(summaries) == 4 * 4 * 20
    assert matrix.mean.shape == (4, 8)

    model, projected = pca_fit(matrix.mean, k=3)
    assert model.retained >= 0.98, f"retained variance {model.retained:.4f}"

    selected = select_most_separable(projected, k=3)
    # independent exhaustive search over all 3-subsets with the same
    # (min pairwise distance, total distance) preference
    dmat = np.linalg.norm(projected[:, None, :] - projected[None, :, :], axis=2)

    def subset_key(combo):
        pairs = list(itertools.combinations(combo, 2))
        return (min(dmat[i, j] for i, j in pairs), sum(dmat[i, j] for i, j in pairs))

    best = max(itertools.combinations(range(4), 3), key=subset_key)
    assert tuple(selected) == best


def test_hand_designed_blocker_construction_properties():
    config = HeuristicConfig()

    # interpolation parameter stays clamped to [0, 1] on a million random
    # blade/target geometries
    rng = np.random.default_rng(5)
    pts = rng.uniform(-1.0, 1.0, (1_000_000, 9))
    clamp = closest_point_param
    for tar_x, tar_y, tar_z, lo_x, lo_y, lo_z, up_x, up_y, up_z in pts:
        h = clamp((tar_x, tar_y, tar_z), (lo_x, lo_y, lo_z), (up_x, up_y, up_z), 0.5)
        assert 0.0 <= h <= 1.0

    # with zeroed angular offsets the commanded blade is perpendicular to the
    # opponent's blade to within float rounding of the dot product
    worst = 0.0
    for _ in range(10_000):
        v = rng.standard_normal(3)
        opp_dir = tuple(v / np.linalg.norm(v))
        pose = desired_pose((0.5, 0.0, 0.0), (-0.3, 0.0, 0.0), opp_dir,
                            config, 0.75, (0.0, 0.0, 0.0))
        worst = max(worst, abs(dot(pose.dir, opp_dir)))
        assert abs(norm(pose.dir) - 1.0) < 1e-12
    assert worst <= 5e-16, f"worst perpendicularity dot {worst:.2e}"

    # hold frequency 0.5 +/- 0.02 over ten thousand decisions, and every
    # drawn angular offset inside +/-25 degrees (checked by replaying the
    # fixed draw order on a shadow generator)
    obs = np.zeros(25)
    obs[0:3] = (0.5, 0.0, 0.0)
    obs[3:6] = (0.0, 0.0, 1.0)
    obs[12:15] = (-0.3, 0.0, 0.0)
    obs[15:18] = (0.0, 1.0, 0.0)
    agent_rng = np.random.default_rng(99)
    shadow = np.random.default_rng(99)
    state = HeuristicState()
    holds = 0
    lim = math.radians(25.0)
    for _ in range(10_000):
        _, state = baseline_act(obs, state, config, agent_rng)
        coin = shadow.uniform()
        if state.last_was_hold:
            holds += 1
            assert coin < config.hold_prob
        else:
            shadow.uniform(config.standoff_low, config.standoff_high)
            offs = shadow.uniform(-lim, lim, 3)
            assert np.all(np.abs(offs) <= lim)
    freq = holds / 10_000
    assert abs(freq - 0.5) <= 0.02, f"hold frequency {freq:.4f}"


def test_plant_parameters_recovered_within_five_percent():
    # the optimizer first: 10-D sphere to 1e-8 inside 200 generations
    res = cmaes_minimize(
        lambda x: float(np.sum(x * x)), np.full(10, 1.0),
        CmaConfig(sigma0=0.3, max_generations=200, target_objective=1e-8), seed=0,
    )
    assert res.f_best < 1e-8 and res.generations <= 200

    # then full 18-parameter recovery against three hidden ground truths
    for seed in (1, 2, 3):
        t0 = time.monotonic()
        ref, truth = make_reference(seed)
        result = calibrate(ref, seed=seed)
        elapsed = time.monotonic() - t0
        rel = np.abs(result.x - truth) / np.abs(truth)
        assert np.max(rel) <= 0.05, (
            f"seed {seed}: worst parameter off by {np.max(rel) * 100:.2f}%"
        )
        assert result.residual < 1e-6, f"seed {seed}: residual {result.residual:.2e}"
        assert elapsed < 300.0, f"seed {seed}: calibration took {elapsed:.0f}s"


def test_identical_master_seed_reproduces_identical_artifact_bytes(tmp_path):
    def run_all(out_dir: str) -> None:
        run = RunConfig(
            out_dir=out_dir,
            master_seed=9,
            game=coarse_config(),
            ppo=PpoConfig(minibatch_size=64),
            phase_one=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                                  rollout_ticks=200, snapshot_every=1, eval_games=0),
            phase_two=PhaseConfig(n_iter=1, n_updates_mu=2, n_updates_nu=2,
                                  reward_mode=REWARD_SCORE_ONLY, alpha=0.0,
                                  rollout_ticks=200, snapshot_every=1, eval_games=0),
            library_rounds=2,
            tournament_games_per_pair=2,
            pca_components=1,
            select_k=1,
            sysid=SysidConfig(n_ticks=60, max_generations=5, seeds=(1,)),
        )
        pipeline.stage_train_warmstart(run)
        pipeline.stage_characterize(run)
        pipeline.stage_tournament(run)
        pipeline.stage_analyze_style(run)

    def tree_bytes(root: str) -> dict:
        out = {}
        for dirpath, _, files in os.walk(root):
            for name in files:
                full = os.path.join(dirpath, name)
                with open(full, "rb") as f:
                    out[os.path.relpath(full, root)] = f.read()
        return out

    run_all(str(tmp_path / "a"))
    run_all(str(tmp_path / "b"))
    a = tree_bytes(str(tmp_path / "a"))
    b = tree_bytes(str(tmp_path / "b"))
    assert sorted(a) == sorted(b)
    mism = [p for p in a if a[p] != b[p]]
    assert not mism, f"artifacts differ between identical runs: {mism}"
    assert len(a) >= 8  # library, warm start, manifests, tournament, reports


def test_record_roundtrip_and_rescore_on_100_games():
    config = close_config()
    for seed in range(100):
        recorder = GameRecorder(config, seed, "rand-a", "rand-p")
        final = play_game(
            config, RandomAgent(), RandomAgent(), seed=seed, recorder=recorder
        )
        record = recorder.finalize()
        text = record_to_jsonl(record)
        back = record_from_jsonl(text)
        assert record_to_jsonl(back) == text
        assert back.final_score == final.score
        assert rescore(back.ticks, config)[0] == final.score
        verify_record(back)
