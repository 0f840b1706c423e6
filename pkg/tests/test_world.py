from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elfarol.config import SimConfig
from elfarol.errors import ConfigError
from elfarol.world import (
    Action,
    Decision,
    GridConfig,
    Position,
    apply_action,
    attendance,
    is_crowded,
    is_inside,
    neighbors,
    signed_boundary_distance,
    step,
)

from conftest import place

GRID = GridConfig()  # bar at [20, 29]^2


def brute_signed_distance(pos, grid):
    """Min distance to bar cells (outside) or to the ring of cells around the bar (inside)."""
    lo, hi = grid.bar_min, grid.bar_max
    if is_inside(pos, grid):
        ring = [
            (x, y)
            for x in range(lo.x - 1, hi.x + 2)
            for y in range(lo.y - 1, hi.y + 2)
            if not (lo.x <= x <= hi.x and lo.y <= y <= hi.y)
        ]
        return -min(math.dist(pos, c) for c in ring)
    cells = [(x, y) for x in range(lo.x, hi.x + 1) for y in range(lo.y, hi.y + 1)]
    return min(math.dist(pos, c) for c in cells)


class TestGeometry:
    @pytest.mark.parametrize(
        "pos,expected",
        [((25, 25), True), ((19, 25), False), ((20, 20), True), ((29, 29), True), ((30, 29), False)],
    )
    def test_is_inside(self, pos, expected):
        assert is_inside(Position(*pos), GRID) is expected

    @pytest.mark.parametrize(
        "pos,action,expected",
        [
            ((0, 0), Action.X_MINUS, (0, 0)),
            ((5, 5), Action.STAY, (5, 5)),
            ((5, 5), Action.Y_PLUS, (5, 6)),
            ((49, 49), Action.Y_PLUS, (49, 49)),
            ((49, 10), Action.X_PLUS, (49, 10)),
        ],
    )
    def test_apply_action(self, pos, action, expected):
        assert apply_action(Position(*pos), action, GRID) == expected

    def test_apply_action_preserves_validity_exhaustively(self):
        grid = GridConfig(4, 3, Position(1, 1), 2)
        for x, y, a in itertools.product(range(4), range(3), Action):
            p = apply_action(Position(x, y), a, grid)
            assert grid.contains(p)
            assert abs(p.x - x) + abs(p.y - y) <= 1

    def test_action_set(self):
        assert {a.value for a in Action} == {"x+1", "x-1", "y+1", "y-1", "stay"}

    def test_bar_must_fit(self):
        with pytest.raises(ConfigError):
            GridConfig(10, 10, Position(5, 5), 6)
        with pytest.raises(ConfigError):
            GridConfig(0, 10)


class TestSignedDistance:
    @pytest.mark.parametrize("pos,expected", [((19, 25), 1.0), ((25, 25), -5.0), ((35, 25), 6.0), ((20, 25), -1.0)])
    def test_examples(self, pos, expected):
        assert signed_boundary_distance(Position(*pos), GRID) == expected

    def test_matches_brute_force_everywhere(self):
        for x in range(GRID.width):
            for y in range(GRID.height):
                p = Position(x, y)
                assert signed_boundary_distance(p, GRID) == pytest.approx(brute_signed_distance(p, GRID), abs=1e-12)

    def test_sign_flips_exactly_with_inside(self):
        for x in range(GRID.width):
            for y in range(GRID.height):
                d = signed_boundary_distance(Position(x, y), GRID)
                assert d != 0
                assert (d < 0) == is_inside(Position(x, y), GRID)


class TestPopulation:
    def test_threshold_count_default(self, default_config):
        assert default_config.threshold_count == 12

    def test_attendance_extremes(self, default_config):
        assert attendance(place(default_config, [(25, 25)] * 20)) == 20
        assert attendance(place(default_config, [(0, 0)] * 20)) == 0

    def test_attendance_planted(self, default_config):
        positions = [(20 + i % 10, 20 + i // 10) for i in range(12)] + [(i, 0) for i in range(8)]
        world = place(default_config, positions)
        assert attendance(world) == 12

    @pytest.mark.parametrize("inside,crowded", [(12, True), (11, False), (20, True), (0, False)])
    def test_is_crowded(self, default_config, inside, crowded):
        positions = [(25, 25)] * inside + [(0, 0)] * (20 - inside)
        assert is_crowded(place(default_config, positions)) is crowded

    def test_crowding_monotone(self, default_config):
        flags = [is_crowded(place(default_config, [(25, 25)] * k + [(0, 0)] * (20 - k))) for k in range(21)]
        assert flags == sorted(flags)

    def test_threshold_count_ceil(self):
        assert SimConfig(n_agents=7, threshold_fraction=0.6).threshold_count == 5
        assert SimConfig(n_agents=10, threshold_fraction=0.6).threshold_count == 6


class TestNeighbors:
    def _pair(self, a, b):
        cfg = SimConfig(n_agents=2)
        return place(cfg, [a, b])

    def test_three_four_five(self):
        w = self._pair((0, 0), (3, 4))
        assert neighbors(w, 0) == {1} and neighbors(w, 1) == {0}

    def test_too_far(self):
        w = self._pair((0, 0), (4, 4))
        assert neighbors(w, 0) == set()

    def test_wall_blocks(self):
        w = self._pair((19, 25), (20, 25))
        assert neighbors(w, 0) == set() and neighbors(w, 1) == set()

    def test_chebyshev_option(self):
        cfg = SimConfig(n_agents=2, distance_metric="chebyshev")
        w = place(cfg, [(0, 0), (5, 5)])
        assert neighbors(w, 0) == {1}

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 49), st.integers(0, 49)), min_size=2, max_size=20))
    def test_symmetric_irreflexive(self, positions):
        cfg = SimConfig(n_agents=len(positions))
        w = place(cfg, positions)
        nbrs = [neighbors(w, i) for i in range(len(positions))]
        for i, ns in enumerate(nbrs):
            assert i not in ns
            for j in ns:
                assert i in nbrs[j]


class TestStep:
    def test_all_stay(self, default_config):
        w = place(default_config, [(i, i) for i in range(20)])
        w2 = step(w, [Decision("", "", Action.STAY)] * 20)
        assert w2.positions == w.positions and w2.step == 1

    def test_simultaneous_pass_through(self):
        cfg = SimConfig(n_agents=2)
        w = place(cfg, [(5, 5), (6, 5)])
        w2 = step(w, [Decision("", "", Action.X_PLUS), Decision("", "", Action.X_MINUS)])
        assert w2.positions == [(6, 5), (5, 5)]

    def test_overlap_allowed(self):
        cfg = SimConfig(n_agents=2)
        w = place(cfg, [(5, 5), (7, 5)])
        w2 = step(w, [Decision("", "", Action.X_PLUS), Decision("", "", Action.X_MINUS)])
        assert w2.positions == [(6, 5), (6, 5)]

    def test_length_mismatch(self, default_config):
        w = place(default_config, [(0, 0)] * 20)
        with pytest.raises(ConfigError):
            step(w, [Decision("", "", Action.STAY)] * 19)

    def test_memory_and_outbox_replaced(self):
        cfg = SimConfig(n_agents=1)
        w = place(cfg, [(0, 0)])
        w2 = step(w, [Decision("hello", "remember", Action.Y_PLUS)])
        assert w2.agents[0].outbox == "hello" and w2.agents[0].memory == "remember"
        assert w.agents[0].memory == ""  # snapshot untouched

    def test_pure(self, default_config):
        w = place(default_config, [(i, 2 * i) for i in range(20)])
        d = [Decision(str(i), "", list(Action)[i % 5]) for i in range(20)]
        assert step(w, d) == step(w, d)
