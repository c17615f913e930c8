"""Weights: per-point values, integrals and averages, example generators, and
the extremal-subset solver used by the measure-smallness conditions.

For a point set F, ``w(F) = sum_i values[i] * mass[i]`` and the average is
``w(F) / mass(F)``.  The adversarial subset of a ball under a measure budget
is found by sorting the ball's points by pointwise value: since each atom's
value density is just ``w_i``, the fractional relaxation is solved exactly by
a greedy fill that splits the last atom, and its support is a superlevel set
of the weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .space import Ball, PointCloudSpace, ball_members

EXACT_MODE_LIMIT = 22


class WeightError(ValueError):
    pass


@dataclass
class Weight:
    """Nonnegative values per point of a fixed space."""

    space: PointCloudSpace
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n,):
            raise WeightError("weight length does not match the space")
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise WeightError(f"non-finite weight value at point {bad}")
        if np.any(self.values < 0):
            bad = int(np.flatnonzero(self.values < 0)[0])
            raise WeightError(f"negative weight value at point {bad}")
        self.wm = self.values * self.space.masses  # per-atom integral pieces

    def integral(self, ids: np.ndarray) -> float:
        return float(np.sum(self.wm[ids]))

    def measure(self, ids: np.ndarray) -> float:
        return float(np.sum(self.space.masses[ids]))

    @property
    def total(self) -> float:
        return float(np.sum(self.wm))


def set_average(w: Weight, ids: np.ndarray) -> tuple[float, float]:
    """Exact (w(F), average of w over F) for a nonempty point set F."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise WeightError("average over an empty set")
    total = w.integral(ids)
    return total, total / w.measure(ids)


def superlevel_set(w: Weight, ball: Ball, t: float) -> np.ndarray:
    """Points of the ball with w > t; nested decreasing in t."""
    members = ball_members(w.space, ball)
    return members[w.values[members] > t]


# ---------------------------------------------------------------------------
# Extremal subsets under a measure budget
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtremalResult:
    mode: str                 # fractional | prefix | exact
    ids: np.ndarray           # whole atoms in the chosen set
    value: float              # w(F)
    measure: float            # mass(F)
    frac_id: int | None = None
    frac_theta: float = 0.0   # fraction of the split atom, fractional mode only


def _value_sorted(w: Weight, members: np.ndarray) -> np.ndarray:
    # descending value, ties by ascending point id: reproducible witnesses
    return members[np.lexsort((members, -w.values[members]))]


def extremal_subset(w: Weight, ball: Ball, budget: float, mode: str = "fractional") -> ExtremalResult:
    """Maximize w(F) over F inside the ball with mass(F) <= budget.

    fractional: exact optimum of the relaxation (greedy fill, split atom).
    prefix: the whole-atom greedy prefix (a feasible set).
    exact: the 0/1 optimum by enumeration, limited to small balls.
    """
    members = ball_members(w.space, ball)
    total_mass = w.measure(members)
    if budget < -1e-12 or budget > total_mass * (1 + 1e-12):
        raise WeightError(f"budget {budget} outside [0, mass(B)={total_mass}]")
    budget = min(max(budget, 0.0), total_mass)

    if mode == "exact":
        if len(members) > EXACT_MODE_LIMIT:
            raise WeightError(
                f"exact mode limited to {EXACT_MODE_LIMIT} points "
                f"(ball has {len(members)}); use fractional or prefix")
        return _exact_knapsack(w, members, budget)
    if mode not in ("fractional", "prefix"):
        raise WeightError(f"unknown extremal mode {mode!r}")

    order = _value_sorted(w, members)
    masses = w.space.masses[order]
    gains = w.wm[order]
    cmass = np.cumsum(masses)
    cgain = np.cumsum(gains)
    k = int(np.searchsorted(cmass, budget * (1 + 1e-12), side="right"))
    prefix_val = float(cgain[k - 1]) if k else 0.0
    prefix_mass = float(cmass[k - 1]) if k else 0.0
    if mode == "prefix":
        return ExtremalResult("prefix", order[:k], prefix_val, prefix_mass)
    if k < len(order) and masses[k] > 0:
        theta = (budget - prefix_mass) / masses[k]
        theta = min(max(theta, 0.0), 1.0)
    else:
        theta = 0.0
    value = prefix_val + (theta * gains[k] if theta > 0 else 0.0)
    measure = prefix_mass + (theta * masses[k] if theta > 0 else 0.0)
    frac_id = int(order[k]) if theta > 0 else None
    return ExtremalResult("fractional", order[:k], value, measure, frac_id, theta)


def _exact_knapsack(w: Weight, members: np.ndarray, budget: float) -> ExtremalResult:
    n = len(members)
    members = np.sort(members)
    sum_mass = np.zeros(1)
    sum_val = np.zeros(1)
    for i in range(n):
        sum_mass = np.concatenate([sum_mass, sum_mass + w.space.masses[members[i]]])
        sum_val = np.concatenate([sum_val, sum_val + w.wm[members[i]]])
    feasible = sum_mass <= budget * (1 + 1e-12)
    vals = np.where(feasible, sum_val, -np.inf)
    best = int(np.argmax(vals))  # lowest bitmask among ties
    chosen = members[[i for i in range(n) if best >> i & 1]]
    return ExtremalResult("exact", np.asarray(chosen, dtype=np.int64),
                          float(sum_val[best]), float(sum_mass[best]))


def fractional_curve(w: Weight, ball: Ball, budgets: np.ndarray) -> np.ndarray:
    """Fractional extremal value at several budgets; one sort serves all."""
    members = ball_members(w.space, ball)
    order = _value_sorted(w, members)
    masses = w.space.masses[order]
    gains = w.wm[order]
    cmass = np.concatenate([[0.0], np.cumsum(masses)])
    cgain = np.concatenate([[0.0], np.cumsum(gains)])
    budgets = np.minimum(np.asarray(budgets, dtype=float), cmass[-1])
    ks = np.searchsorted(cmass[1:], budgets * (1 + 1e-12), side="right")
    out = cgain[ks].copy()
    has_next = ks < len(masses)
    theta = np.zeros_like(out)
    theta[has_next] = (budgets[has_next] - cmass[ks[has_next]]) / masses[ks[has_next]]
    np.clip(theta, 0.0, 1.0, out=theta)
    out[has_next] += theta[has_next] * gains[ks[has_next]]
    return out


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def make_weight(space: PointCloudSpace, kind: str, **params) -> Weight:
    """Build one of the stock weights on a space.

    kinds: constant, exponential, log_spike, slab_indicator, power,
    random_lognormal (reproducible from its seed).
    """
    meta = {"kind": kind, **params}
    if kind == "constant":
        c = float(params.get("c", 1.0))
        if c < 0:
            raise WeightError("constant weight must be nonnegative")
        return Weight(space, np.full(space.n, c), meta)

    if kind == "random_lognormal":
        seed = int(params.get("seed", 0))
        mu = float(params.get("mu", 0.0))
        sigma = float(params.get("sigma", 1.0))
        sparsify = float(params.get("sparsify", 0.0))
        rng = np.random.default_rng(seed)
        vals = rng.lognormal(mu, sigma, size=space.n)
        if sparsify > 0:
            kill = rng.choice(space.n, size=int(sparsify * space.n), replace=False)
            vals[kill] = 0.0
        return Weight(space, vals, meta)

    if space.coords is None:
        raise WeightError(f"weight kind {kind!r} needs point coordinates")
    x = space.coords

    if kind == "exponential":
        return Weight(space, np.exp(x[:, 0]), meta)

    if kind == "slab_indicator":
        last = x[:, -1]
        vals = ((last >= -1e-12) & (last <= 1.0 + 1e-12)).astype(float)
        return Weight(space, vals, meta)

    norms = np.sqrt(np.sum(x * x, axis=1))

    if kind == "log_spike":
        vals = np.empty(space.n)
        at_zero = norms == 0.0
        with np.errstate(divide="ignore"):
            vals[~at_zero] = np.maximum(np.log(1.0 / norms[~at_zero]), 1.0)
        if np.any(at_zero):
            vals[at_zero] = _cell_average_at_zero(space, params, "log_spike")
        return Weight(space, vals, meta)

    if kind == "power":
        a = float(params.get("a", 0.5))
        with np.errstate(divide="ignore"):
            vals = norms ** a
        at_zero = norms == 0.0
        if np.any(at_zero):
            vals[at_zero] = 1.0 if a == 0 else _cell_average_at_zero(space, params, "power", a=a)
        return Weight(space, vals, meta)

    raise WeightError(f"unknown weight kind {kind!r}")


def _cell_average_at_zero(space, params, kind, a: float = 0.0) -> float:
    """Value assigned at a grid point sitting exactly at the origin: the cell
    average of the continuum profile over [-h/2, h/2] (one-dimensional form)."""
    if "zero_value" in params:
        return float(params["zero_value"])
    if space.lattice is None:
        raise WeightError(f"{kind} weight needs a grid step (or zero_value=) to fill x=0")
    h = space.lattice.step
    if kind == "log_spike":
        # average of log(1/|t|) over |t| <= h/2, valid while h/2 < 1/e
        return 1.0 + math.log(2.0 / h) if h < 0.7 else 1.0
    return (h / 2.0) ** a / (a + 1.0)
