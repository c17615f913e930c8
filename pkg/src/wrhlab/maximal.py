"""Exact Hardy-Littlewood maximal fields on finite spaces.

``Mf(x)`` is the max of the averages of ``|f|`` over every attained ball that
contains ``x``, where the enumeration runs over all centers and all attained
radii of the whole space (including the radius-0 singleton at each center, so
``Mf >= f`` pointwise holds by construction).

Two implementations ship side by side: an optimized kernel (per-center
cumulative sums plus a suffix max over the radius grid, O(n) per center after
the geometry is in place) and a naive per-ball double loop used as an oracle.
Both accumulate sums in the same (distance, id) order, so on identical input
they agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import Ball, PointCloudSpace, ball_members
from .util import parallel_map
from .weights import Weight


class MaximalError(ValueError):
    pass


@dataclass
class MaximalField:
    space: PointCloudSpace
    values: np.ndarray
    restriction: Ball | None = None

    def integral_over(self, ids: np.ndarray) -> float:
        return float(np.sum(self.values[ids] * self.space.masses[ids]))


def _restricted_values(space: PointCloudSpace, f: np.ndarray, restriction: Ball | None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (space.n,):
        raise MaximalError("field length does not match the space")
    if np.any(f < 0):
        bad = int(np.flatnonzero(f < 0)[0])
        raise MaximalError(f"maximal function input must be nonnegative (point {bad})")
    if restriction is not None:
        mask = np.zeros(space.n)
        mask[ball_members(space, restriction)] = 1.0
        f = f * mask
    return f


def maximal_function(space: PointCloudSpace, f, restriction: Ball | None = None,
                     threads: int | None = None) -> MaximalField:
    """Exact maximal field over all attained balls of the space."""
    f = _restricted_values(space, f, restriction)
    fm = f * space.masses

    def chunk_max(centers: np.ndarray) -> np.ndarray:
        local = np.full(space.n, -np.inf)
        for c in centers:
            ctx = space.center_context(int(c))
            avg = ctx.cum(fm) / ctx.cum_mass
            suffix = np.maximum.accumulate(avg[::-1])[::-1]
            np.maximum(local, suffix[ctx.point_rank], out=local)
        return local

    chunks = np.array_split(np.arange(space.n), max(1, min(space.n, 8)))
    partials = parallel_map(chunk_max, chunks, threads)
    out = partials[0]
    for p in partials[1:]:
        np.maximum(out, p, out=out)
    return MaximalField(space, out, restriction)


def naive_maximal_field(space: PointCloudSpace, f, restriction: Ball | None = None) -> np.ndarray:
    """Oracle: per-ball double loop over (center, attained radius) pairs.

    Uses direct distance rows and explicit sequential accumulation; no shared
    machinery with the optimized kernel beyond the membership convention.
    """
    f = _restricted_values(space, f, restriction)
    fm = f * space.masses
    n = space.n
    out = np.full(n, -np.inf)
    # The accumulation order mirrors each backend's cumulative-sum semantics
    # (flat for distance sorts, per-key subtotals for lattice bins) so that
    # agreement with the optimized kernel is exact, not approximate.
    for c in range(n):
        row = space.dist_row(c)
        lattice = space.lattice is not None
        if lattice:
            keys = space.lattice.keys_from_row(row)
            order = np.argsort(keys, kind="stable")
            group_keys = keys[order]
        else:
            order = np.argsort(row, kind="stable")
            group_keys = row[order]
        boundaries = np.flatnonzero(np.diff(group_keys)) + 1
        starts = np.concatenate([[0], boundaries])
        ends = np.concatenate([boundaries, [n]])
        acc_f = 0.0
        acc_m = 0.0
        for s, e in zip(starts, ends):
            if lattice:
                sub_f = 0.0
                sub_m = 0.0
                for i in order[s:e]:
                    sub_f += fm[i]
                    sub_m += space.masses[i]
                acc_f += sub_f
                acc_m += sub_m
            else:
                for i in order[s:e]:
                    acc_f += fm[i]
                    acc_m += space.masses[i]
            avg = acc_f / acc_m
            ids = order[:e]
            out[ids] = np.maximum(out[ids], avg)
    return out


# ---------------------------------------------------------------------------
# Weak (1,1) machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeakTypeReport:
    constant: float
    witness_t: float
    integral: float


def weak_type_constant(space: PointCloudSpace, f, t_grid=None,
                       threads: int | None = None) -> WeakTypeReport:
    """Empirical weak (1,1) constant: sup_t t * mass({Mf > t}) / ||f||_1.

    With no grid the sup over t > 0 is computed exactly by evaluating
    ``v * mass({Mf >= v})`` at the attained field values.
    """
    f = np.asarray(f, dtype=float)
    field = maximal_function(space, f, threads=threads).values
    total = float(np.sum(np.abs(f) * space.masses))
    if total == 0.0:
        return WeakTypeReport(0.0, 0.0, 0.0)
    if t_grid is None:
        order = np.argsort(field, kind="stable")
        sorted_vals = field[order]
        tail_mass = np.cumsum(space.masses[order][::-1])[::-1]
        vals, first = np.unique(sorted_vals, return_index=True)
        scores = vals * tail_mass[first] / total
        j = int(np.argmax(scores))
        return WeakTypeReport(float(scores[j]), float(vals[j]), total)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise MaximalError("t grid must be positive")
    best, wt = 0.0, float(t_grid[0])
    for t in t_grid:
        score = t * float(np.sum(space.masses[field > t])) / total
        if score > best:
            best, wt = score, float(t)
    return WeakTypeReport(best, wt, total)


@dataclass(frozen=True)
class ReverseWeakTypeReport:
    lambdas: np.ndarray
    ratios: np.ndarray
    skipped: list
    constant: float
    witness_lambda: float


def reverse_weak_type_check(space: PointCloudSpace, f, ball: Ball,
                            lambdas, threads: int | None = None) -> ReverseWeakTypeReport:
    """Per-lambda ratios of int_{B n {Mf > lam}} f dmu over lam * mass({Mf > lam}).

    Only lambdas above the ball average of f qualify; the rest are skipped and
    listed.  Empty superlevel sets give ratio 0 by convention.
    """
    f = np.asarray(f, dtype=float)
    field = maximal_function(space, f, threads=threads).values
    members = ball_members(space, ball)
    fm = f * space.masses
    fb = float(np.sum(fm[members]) / np.sum(space.masses[members]))
    kept, ratios, skipped = [], [], []
    for lam in np.asarray(lambdas, dtype=float):
        if lam <= fb:
            skipped.append(float(lam))
            continue
        above = field > lam
        denom_mass = float(np.sum(space.masses[above]))
        if denom_mass == 0.0:
            kept.append(float(lam))
            ratios.append(0.0)
            continue
        num = float(np.sum(fm[members[above[members]]]))
        kept.append(float(lam))
        ratios.append(num / (lam * denom_mass))
    ratios_arr = np.asarray(ratios)
    if len(ratios):
        j = int(np.argmax(ratios_arr))
        c0, wl = float(ratios_arr[j]), kept[j]
    else:
        c0, wl = 0.0, float("nan")
    return ReverseWeakTypeReport(np.asarray(kept), ratios_arr, skipped, c0, wl)


def localization_ratio(w: Weight, ball: Ball, threads: int | None = None) -> float:
    """Max of M(w 1_B) / average(w over B) outside the doubled ball.

    Returns 0 when w vanishes on B (the restricted field is identically 0)
    or when the doubled ball already swallows the space.
    """
    space = w.space
    members = ball_members(space, ball)
    wb_total = w.integral(members)
    if wb_total == 0.0:
        return 0.0
    wb = wb_total / w.measure(members)
    field = maximal_function(space, w.values, restriction=ball, threads=threads).values
    outside = np.ones(space.n, dtype=bool)
    outside[ball_members(space, ball.dilate(2.0))] = False
    if not np.any(outside):
        return 0.0
    return float(np.max(field[outside]) / wb)
