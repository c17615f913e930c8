"""Constructive ball coverings: sigma-covers of a ball by dilated pieces and
greedy 5r Vitali subfamilies.

On a finite space the greedy maximal-first selection realizes the covering
statements exactly: selected pieces are member-set disjoint, and every
discarded ball shares a point with an earlier (hence no smaller) selected
ball, which places it inside the 5-fold dilate of that ball.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import Ball, PointCloudSpace, ball_members


@dataclass(frozen=True)
class CoverResult:
    """Balls centered inside B, all of radius sigma * rad(B), covering B."""
    balls: tuple[Ball, ...]
    piece_radius: float      # radius of the disjoint greedy pieces
    counting_bound: float    # mass((1 + sigma/5) B) / min piece mass

    @property
    def count(self) -> int:
        return len(self.balls)


def sigma_cover(space: PointCloudSpace, ball: Ball, sigma: float) -> CoverResult:
    """Cover a ball by balls of radius sigma * rad(B) centered at its points.

    For sigma >= 1 the dilate at the ball's own center already suffices.
    Below 1 the greedy disjoint family of (sigma/5) r pieces is built and each
    selected piece is dilated by 5.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = ball.radius
    members = ball_members(space, ball)
    piece_r = sigma * r / 5.0

    if sigma >= 1.0:
        selected = [ball.center]
    else:
        union = np.zeros(space.n, dtype=bool)
        candidates = [ball.center] + sorted(int(i) for i in members if int(i) != ball.center)
        selected = []
        for x in candidates:
            piece = ball_members(space, Ball(x, piece_r))
            if not np.any(union[piece]):
                selected.append(x)
                union[piece] = True

    piece_masses = [float(np.sum(space.masses[ball_members(space, Ball(x, piece_r))]))
                    for x in selected]
    outer = float(np.sum(space.masses[ball_members(space, Ball(ball.center, (1 + sigma / 5.0) * r))]))
    bound = outer / min(piece_masses)
    return CoverResult(tuple(Ball(x, sigma * r) for x in selected), piece_r, bound)


def covers(space: PointCloudSpace, result: CoverResult, ball: Ball) -> bool:
    """Set-theoretic coverage check: members of the ball versus the union."""
    union = np.zeros(space.n, dtype=bool)
    for b in result.balls:
        union[ball_members(space, b)] = True
    return bool(np.all(union[ball_members(space, ball)]))


def vitali_subfamily(space: PointCloudSpace, balls: list[Ball]) -> list[Ball]:
    """Greedy disjoint subfamily: descending radius, ties by center id.

    Every input ball's member set lies inside the members of the 5-dilate of
    some selected ball.
    """
    order = sorted(range(len(balls)),
                   key=lambda i: (-balls[i].radius, balls[i].center, i))
    union = np.zeros(space.n, dtype=bool)
    selected: list[Ball] = []
    for i in order:
        members = ball_members(space, balls[i])
        if not np.any(union[members]):
            selected.append(balls[i])
            union[members] = True
    return selected
