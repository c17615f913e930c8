import numpy as np
import pytest

from wrhlab.covering import CoverResult, covers, sigma_cover, vitali_subfamily
from wrhlab.space import Ball, ball_members, grid_1d, grid_nd

from conftest import random_cloud_space


def check_counting_bound(space, result: CoverResult):
    assert result.count <= result.counting_bound + 1e-9


def test_sigma_at_least_one_single_ball():
    sp = grid_1d(0.0, 10.0, 1.0)
    for sigma in (1.0, 2.0, 3.5):
        res = sigma_cover(sp, Ball(5, 3.0), sigma)
        assert res.count == 1
        assert covers(sp, res, Ball(5, 3.0))
        check_counting_bound(sp, res)


def test_unit_line_small_sigma():
    sp = grid_1d(0.0, 20.0, 1.0)
    ball = Ball(10, 4.0)
    res = sigma_cover(sp, ball, 1.0 / 5.0)
    assert covers(sp, res, ball)
    check_counting_bound(sp, res)
    assert all(b.radius == pytest.approx(4.0 / 5.0) for b in res.balls)
    member_set = set(ball_members(sp, ball).tolist())
    assert all(b.center in member_set for b in res.balls)


def test_grid2d_random_balls_sweep(rng):
    sp = grid_nd([-4, -4], [4, 4], 0.5, metric="chebyshev")
    for sigma in (1.0 / 12.0, 1.0 / 5.0, 1.0 / 2.0):
        for _ in range(15):
            ball = Ball(int(rng.integers(0, sp.n)), float(rng.uniform(0.5, 3.0)))
            res = sigma_cover(sp, ball, sigma)
            assert covers(sp, res, ball)
            check_counting_bound(sp, res)


def test_pieces_disjoint(rng):
    sp = grid_nd([-4, -4], [4, 4], 0.5, metric="chebyshev")
    ball = Ball(int(rng.integers(0, sp.n)), 2.5)
    res = sigma_cover(sp, ball, 1.0 / 5.0)
    seen = np.zeros(sp.n, dtype=bool)
    for b in res.balls:
        piece = ball_members(sp, Ball(b.center, res.piece_radius))
        assert not np.any(seen[piece])
        seen[piece] = True


# -- vitali ---------------------------------------------------------------------

def test_vitali_disjoint_input_kept():
    sp = grid_1d(0.0, 30.0, 1.0)
    balls = [Ball(2, 1.0), Ball(10, 2.0), Ball(20, 1.5)]
    out = vitali_subfamily(sp, balls)
    assert set(out) == set(balls)


def test_vitali_nested_returns_largest():
    sp = grid_1d(0.0, 30.0, 1.0)
    balls = [Ball(15, 1.0), Ball(15, 5.0), Ball(14, 2.0)]
    out = vitali_subfamily(sp, balls)
    assert out == [Ball(15, 5.0)]


def test_vitali_random_disjoint_and_5r_coverage(rng):
    sp = random_cloud_space(rng, 60)
    for trial in range(10):
        balls = [Ball(int(rng.integers(0, sp.n)), float(rng.uniform(0.1, 1.0)))
                 for _ in range(30)]
        out = vitali_subfamily(sp, balls)
        # pairwise member-set disjointness
        union = np.zeros(sp.n, dtype=bool)
        for b in out:
            m = ball_members(sp, b)
            assert not np.any(union[m])
            union[m] = True
        # each input ball sits inside the 5-dilate of some selected ball
        for b in balls:
            m = set(ball_members(sp, b).tolist())
            assert any(m <= set(ball_members(sp, s.dilate(5.0)).tolist()) for s in out)


def test_vitali_deterministic(rng):
    sp = random_cloud_space(rng, 40)
    balls = [Ball(int(rng.integers(0, sp.n)), float(rng.uniform(0.1, 1.0)))
             for _ in range(20)]
    assert vitali_subfamily(sp, balls) == vitali_subfamily(sp, list(balls))
