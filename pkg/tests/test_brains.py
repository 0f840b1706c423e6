from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elfarol.brains import (
    GreedyToBar,
    RandomWalk,
    ThresholdResponder,
    keyed_uniform,
    make_brain,
    toward_center,
    toward_exit,
)
from elfarol.config import BrainSpec, SimConfig
from elfarol.errors import ConfigError
from elfarol.prompt import build_observation
from elfarol.runner import observe
from elfarol.world import (
    Action,
    Decision,
    GridConfig,
    Position,
    apply_action,
    attendance,
    is_inside,
    signed_boundary_distance,
    step,
)

from conftest import place

GRID = GridConfig()


def outside_obs(pos):
    return build_observation("Agent0", Position(*pos), "", [], False, True)


def inside_obs(pos, crowded):
    return build_observation("Agent0", Position(*pos), "", [], True, crowded)


class TestGreedy:
    def test_corner_heads_along_x(self):
        assert GreedyToBar(GRID).decide(outside_obs((0, 0)), 0, 0).action is Action.X_PLUS

    def test_stays_inside(self):
        assert GreedyToBar(GRID).decide(inside_obs((22, 22), True), 0, 0).action is Action.STAY

    @pytest.mark.parametrize("pos", [(0, 49), (49, 0), (25, 0), (0, 25), (40, 41)])
    def test_every_move_approaches_bar(self, pos):
        a = GreedyToBar(GRID).decide(outside_obs(pos), 0, 0).action
        new = apply_action(Position(*pos), a, GRID)
        assert signed_boundary_distance(new, GRID) < signed_boundary_distance(Position(*pos), GRID)

    @pytest.mark.parametrize("w,h,bx,by,size", [(10, 10, 3, 3, 4), (12, 7, 0, 0, 2), (9, 9, 7, 7, 2), (6, 15, 2, 10, 3)])
    def test_everyone_arrives_within_width_plus_height(self, w, h, bx, by, size):
        grid = GridConfig(w, h, Position(bx, by), size)
        cfg = SimConfig(grid=grid, n_agents=w * h)
        world = place(cfg, list(itertools.product(range(w), range(h))))
        brain = GreedyToBar(grid)
        for t in range(w + h):
            outs = brain.decide_batch(observe(world), t)
            world = step(world, [Decision(o.message, o.memory, o.action) for o in outs])
        assert attendance(world) == cfg.n_agents


class TestThreshold:
    def _certain(self):
        return ThresholdResponder(GRID, seed=0, p_leave=1.0, p_enter=1.0)

    @pytest.mark.parametrize(
        "pos,expected",
        [((20, 25), Action.X_MINUS), ((29, 24), Action.X_PLUS), ((24, 20), Action.Y_MINUS), ((25, 29), Action.Y_PLUS)],
    )
    def test_depth_one_cell_has_unique_exit(self, pos, expected):
        p = Position(*pos)
        exits = [a for a in Action if not is_inside(apply_action(p, a, GRID), GRID)]
        assert exits == [expected]
        assert self._certain().decide(inside_obs(pos, True), 0, 0).action is expected

    def test_comfortable_stays(self):
        assert self._certain().decide(inside_obs((20, 25), False), 0, 0).action is Action.STAY

    def test_exit_move_reduces_depth(self):
        for x, y in itertools.product(range(20, 30), repeat=2):
            p = Position(x, y)
            new = apply_action(p, toward_exit(p, GRID), GRID)
            assert signed_boundary_distance(new, GRID) > signed_boundary_distance(p, GRID)

    def test_outside_approaches(self):
        assert self._certain().decide(outside_obs((0, 0)), 0, 0).action is Action.X_PLUS

    def test_entry_gated_by_probability(self):
        never = ThresholdResponder(GRID, p_enter=0.0)
        assert never.decide(outside_obs((19, 25)), 0, 0).action is Action.STAY
        assert never.decide(outside_obs((10, 25)), 0, 0).action is Action.X_PLUS

    def test_leave_probability_frequency(self):
        brain = ThresholdResponder(GRID, seed=3, p_leave=0.3)
        leaves = sum(brain.decide(inside_obs((20, 25), True), t, 1).action is Action.X_MINUS for t in range(4000))
        assert leaves / 4000 == pytest.approx(0.3, abs=0.03)

    def test_pure(self):
        brain = ThresholdResponder(GRID, seed=11)
        obs = inside_obs((20, 25), True)
        assert [brain.decide(obs, t, 4) for t in range(50)] == [brain.decide(obs, t, 4) for t in range(50)]

    def test_bad_probability(self):
        with pytest.raises(ConfigError):
            ThresholdResponder(GRID, p_leave=1.5)


class TestRandom:
    def test_reproducible(self):
        a, b = RandomWalk(7), RandomWalk(7)
        obs = outside_obs((5, 5))
        seq = [a.decide(obs, t, 2).action for t in range(100)]
        assert seq == [b.decide(obs, t, 2).action for t in range(100)]
        assert set(seq) == set(Action)

    def test_streams_differ_by_seed(self):
        obs = outside_obs((5, 5))
        a = [RandomWalk(1).decide(obs, t, 0).action for t in range(50)]
        b = [RandomWalk(2).decide(obs, t, 0).action for t in range(50)]
        assert a != b

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 100), st.integers(0, 10_000))
    def test_keyed_uniform_range(self, seed, agent, t):
        u = keyed_uniform(seed, agent, t)
        assert 0.0 <= u < 1.0 and u == keyed_uniform(seed, agent, t)


def test_toward_center_ties_prefer_x():
    assert toward_center(Position(0, 0), GRID) is Action.X_PLUS
    assert toward_center(Position(24, 24), GRID) is Action.X_PLUS  # centre is (24.5, 24.5)
    odd = GridConfig(9, 9, Position(2, 2), 5)
    assert toward_center(Position(4, 4), odd) is Action.STAY


def test_make_brain_kinds(default_config):
    assert make_brain(BrainSpec("greedy"), default_config).kind == "greedy"
    assert make_brain(BrainSpec("threshold", {"p_leave": 1}), default_config).p_leave == 1.0
    assert make_brain(BrainSpec("random"), default_config.with_overrides(rng_seed=5)).seed == 5
    with pytest.raises(ConfigError):
        BrainSpec("oracle")
