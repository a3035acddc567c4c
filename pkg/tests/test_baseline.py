"""Reactive blocking heuristic: closest-point clamp, perpendicularity, draw order."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fencelab import baseline, game
from fencelab.agents import RandomAgent, play_game
from fencelab.geometry import dist, dot, norm, normalize

CFG = baseline.HeuristicConfig()


def rand_blade(rng):
    opp_dir = normalize(tuple(rng.normal(size=3)))
    opp_center = tuple(rng.uniform(-1.0, 1.0, 3))
    half = 0.5 * CFG.l_sword
    h_low = tuple(c - half * d for c, d in zip(opp_center, opp_dir))
    h_up = tuple(c + half * d for c, d in zip(opp_center, opp_dir))
    return opp_center, opp_dir, h_low, h_up


class TestClosestPointParam:
    def test_verbatim_hand_value(self):
        # blade from (0.1,-0.25,0) to (0.1,0.25,0): projection numerator 0.125,
        # verbatim denominator 2*l = 1.0
        ht = baseline.closest_point_param(
            (0.0, 0.0, 0.0), (0.1, -0.25, 0.0), (0.1, 0.25, 0.0), 0.5, verbatim=True
        )
        assert ht == 0.125

    def test_projection_hand_value(self):
        # same geometry, textbook denominator |seg|^2 = 0.25
        ht = baseline.closest_point_param(
            (0.0, 0.0, 0.0), (0.1, -0.25, 0.0), (0.1, 0.25, 0.0), 0.5, verbatim=False
        )
        assert ht == 0.5

    def test_clamped_to_unit_interval(self):
        lo, hi = (0.0, -0.25, 0.0), (0.0, 0.25, 0.0)
        assert baseline.closest_point_param((0.0, 5.0, 0.0), lo, hi, 0.5) == 1.0
        assert baseline.closest_point_param((0.0, -5.0, 0.0), lo, hi, 0.5) == 0.0

    def test_degenerate_blade_raises(self):
        with pytest.raises(ValueError, match="degenerate"):
            baseline.closest_point_param((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), 0.5)

    def test_always_in_unit_interval_both_forms(self):
        rng = np.random.default_rng(5)
        for _ in range(10_000):
            _, _, h_low, h_up = rand_blade(rng)
            tar = tuple(rng.uniform(-2.0, 2.0, 3))
            for verbatim in (True, False):
                ht = baseline.closest_point_param(tar, h_low, h_up, CFG.l_sword, verbatim)
                assert 0.0 <= ht <= 1.0

    def test_projection_form_recovers_true_closest_point(self):
        # the textbook variant must agree with the unclamped orthogonal projection
        rng = np.random.default_rng(6)
        for _ in range(200):
            _, _, h_low, h_up = rand_blade(rng)
            tar = tuple(rng.uniform(-0.4, 0.4, 3))
            ht = baseline.closest_point_param(tar, h_low, h_up, CFG.l_sword, verbatim=False)
            if 0.0 < ht < 1.0:
                foot = tuple(l + ht * (u - l) for l, u in zip(h_low, h_up))
                seg = tuple(u - l for u, l in zip(h_up, h_low))
                assert abs(dot(tuple(t - f for t, f in zip(tar, foot)), seg)) < 1e-12


class TestDesiredPosition:
    def test_interpolates(self):
        p = baseline.desired_position((0.0, 0.0, 0.0), (1.0, 2.0, 0.0), 0.5)
        assert p == (0.5, 1.0, 0.0)

    @pytest.mark.parametrize("u", [0.49, 1.01, -1.0])
    def test_rejects_out_of_band_standoff(self, u):
        with pytest.raises(ValueError, match="standoff"):
            baseline.desired_position((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), u)

    @given(st.floats(min_value=0.5, max_value=1.0))
    @settings(max_examples=50)
    def test_lands_between_midpoint_and_blade(self, u):
        tar, h_close = (0.0, 0.0, 0.0), (0.8, -0.2, 0.4)
        p = baseline.desired_position(tar, h_close, u)
        assert math.isclose(dist(tar, p), u * dist(tar, h_close), rel_tol=1e-12)


class TestDesiredPose:
    def test_zero_offsets_give_machine_exact_perpendicularity(self):
        rng = np.random.default_rng(7)
        for _ in range(2000):
            opp_center, opp_dir, _, _ = rand_blade(rng)
            pose = baseline.desired_pose(
                (0.7, 0.0, 0.0), opp_center, opp_dir, CFG, 0.75, (0.0, 0.0, 0.0)
            )
            assert abs(dot(pose.dir, opp_dir)) <= 2.3e-16  # a couple of ulp
            assert abs(norm(pose.dir) - 1.0) < 1e-12

    def test_offset_rotations_compose_in_declared_order(self):
        opp_dir = (0.0, 0.0, 1.0)
        offs = (0.3, -0.2, 0.1)
        pose = baseline.desired_pose((0.7, 0.0, 0.0), (0.0, 0.0, 0.0), opp_dir, CFG, 0.75, offs)
        from fencelab.geometry import perpendicular_unit, rotate_about_axis

        d = perpendicular_unit(opp_dir)
        d = rotate_about_axis(d, (0.0, 0.0, 1.0), offs[2])
        d = rotate_about_axis(d, (0.0, 1.0, 0.0), offs[1])
        d = rotate_about_axis(d, (1.0, 0.0, 0.0), offs[0])
        assert pose.dir == d

    def test_center_sits_on_target_to_blade_ray(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            opp_center, opp_dir, h_low, h_up = rand_blade(rng)
            u = rng.uniform(0.5, 1.0)
            pose = baseline.desired_pose((0.7, 0.0, 0.0), opp_center, opp_dir, CFG, u, (0, 0, 0))
            ht = baseline.closest_point_param((0.0, 0.0, 0.0), h_low, h_up, CFG.l_sword)
            h_close = tuple(l + ht * (hu - l) for l, hu in zip(h_low, h_up))
            np.testing.assert_allclose(pose.center, tuple(u * c for c in h_close), atol=1e-12)


class TestBaselineAct:
    def make_obs(self, rng):
        obs = np.zeros(25)
        obs[0:3] = rng.uniform(-0.3, 0.3, 3)
        obs[3:6] = normalize(tuple(rng.normal(size=3)))
        obs[12:15] = rng.uniform(-0.3, 0.3, 3)
        obs[15:18] = normalize(tuple(rng.normal(size=3)))
        return obs

    def test_draw_order_is_replayable(self):
        # independent replay of the documented rng discipline: hold coin first,
        # then standoff fraction, then the three angular offsets
        state = baseline.HeuristicState()
        rng = np.random.default_rng(9)
        shadow = np.random.default_rng(9)
        obs_rng = np.random.default_rng(10)
        lim = math.radians(CFG.angle_offset_deg)
        for k in range(200):
            obs = self.make_obs(obs_rng)
            action, state = baseline.baseline_act(obs, state, CFG, rng)
            coin = shadow.uniform()
            if coin < CFG.hold_prob and k > 0:
                continue  # held: no further draws this tick
            u = shadow.uniform(CFG.standoff_low, CFG.standoff_high)
            offs = shadow.uniform(-lim, lim, 3)
            assert np.all(np.abs(offs) <= lim)
            expect = baseline.desired_pose(
                tuple(obs[0:3]), tuple(obs[12:15]), tuple(obs[15:18]), CFG, u,
                (float(offs[0]), float(offs[1]), float(offs[2])),
            )
            assert state.last_desired == expect

    def test_hold_frequency_matches_hold_prob(self):
        state = baseline.HeuristicState()
        rng = np.random.default_rng(11)
        obs = self.make_obs(np.random.default_rng(12))
        holds = 0
        n = 10_000
        for _ in range(n):
            _, state = baseline.baseline_act(obs, state, CFG, rng)
            holds += state.last_was_hold
        assert abs(holds / n - CFG.hold_prob) < 0.02

    def test_first_tick_cannot_hold(self):
        # even when the coin says hold there is no previous pose to keep
        state = baseline.HeuristicState()
        rng = np.random.default_rng(2)  # first uniform() draw < 0.5 for this seed
        assert np.random.default_rng(2).uniform() < CFG.hold_prob
        _, state = baseline.baseline_act(self.make_obs(np.random.default_rng(1)), state, CFG, rng)
        assert not state.last_was_hold
        assert state.last_desired is not None

    def test_hold_keeps_desired_pose(self):
        state = baseline.HeuristicState()
        rng = np.random.default_rng(13)
        obs = self.make_obs(np.random.default_rng(14))
        _, state = baseline.baseline_act(obs, state, CFG, rng)
        first = state.last_desired
        cfg_hold = baseline.HeuristicConfig(hold_prob=1.0)
        for _ in range(5):
            _, state = baseline.baseline_act(obs, state, cfg_hold, rng)
            assert state.last_was_hold
            assert state.last_desired is first

    def test_actions_respect_command_clamps(self):
        state = baseline.HeuristicState()
        rng = np.random.default_rng(15)
        obs_rng = np.random.default_rng(16)
        for _ in range(500):
            action, state = baseline.baseline_act(self.make_obs(obs_rng), state, CFG, rng)
            assert norm(action.d_pos) <= CFG.delta_pos_max + 1e-12
            assert norm(action.d_dir) <= CFG.delta_dir_max + 1e-12


class TestBaselineAgent:
    def test_validates_config(self):
        with pytest.raises(ValueError):
            baseline.BaselineAgent(baseline.HeuristicConfig(hold_prob=1.5))

    def test_from_game_copies_fields(self):
        gc = game.GameConfig(bat_length=0.6, horizon_ticks=2000, dt=0.01)
        hc = baseline.HeuristicConfig.from_game(gc, angle_offset_deg=10.0)
        assert hc.l_sword == 0.6
        assert hc.delta_pos_max == gc.delta_pos_max
        assert hc.angle_offset_deg == 10.0

    def test_plays_full_game_reproducibly(self):
        cfg = game.GameConfig(
            dt=0.1, horizon_ticks=200, camping_ticks=20,
            start_center_a=(-0.12, 0.0, 0.0), start_center_p=(0.12, 0.0, 0.0),
            start_jitter=0.1,
        )
        hc = baseline.HeuristicConfig.from_game(cfg)
        s1 = play_game(cfg, RandomAgent(), baseline.BaselineAgent(hc), seed=3)
        s2 = play_game(cfg, RandomAgent(), baseline.BaselineAgent(hc), seed=3)
        assert s1 == s2
        game.check_invariants(s1, cfg)
