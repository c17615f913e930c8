"""Refinement and growth studies.

Finite spaces make every constant finite, so class membership is probed by
evaluating a constant across a sequence of spaces (finer steps, larger
domains) and classifying the sequence: steadily multiplying constants read as
"diverging", essentially flat ones as "bounded", anything else as
"inconclusive".

Study spaces keep the analysis region strictly inside the point set: the grid
extends a few steps beyond the region of interest and admissibility is taken
against the inner box.  Without that margin, balls leaning on the edge of the
point set have silently truncated dilates and pollute constants that are
genuinely bounded on unbounded spaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characterize import (exponential_mean, fujii_wilson, log_integral,
                           muckenhoupt_constants, reverse_holder,
                           smallness_power_on_ball, smallness_envelopes,
                           weak_reverse_holder, wrh_infinity)
from .space import (BallFamily, BallPolicy, DomainMask, PointCloudSpace,
                    doubling_constant, enumerate_balls, full_family, grid_1d,
                    grid_nd, inside_family)
from .weights import Weight, make_weight

GROW_FACTOR = 1.2
FLAT_TOL = 0.10


@dataclass
class StudyMember:
    label: str
    space: PointCloudSpace
    weight: Weight
    family: BallFamily
    inside: BallFamily
    c_d: float


def classify_sequence(values, grow_factor: float = GROW_FACTOR,
                      flat_tol: float = FLAT_TOL) -> str:
    """Heuristic verdict for a constant sequence across a study family."""
    vals = [float(v) for v in values]
    if len(vals) < 3:
        return "inconclusive"
    if any(not np.isfinite(v) for v in vals):
        return "diverging" if not np.isfinite(vals[-1]) else "inconclusive"
    nsteps = min(3, len(vals) - 1)
    tail = vals[-(nsteps + 1):]
    ratios = []
    for a, b in zip(tail, tail[1:]):
        if a == 0:
            ratios.append(np.inf if b > 0 else 1.0)
        else:
            ratios.append(b / a)
    if all(r >= grow_factor for r in ratios):
        return "diverging"
    last = vals[-3:]
    hi, lo = max(last), min(last)
    if hi > 0 and (hi - lo) / hi < flat_tol:
        return "bounded"
    if hi == 0:
        return "bounded"
    return "inconclusive"


def make_grid_member(weight_kind: str, R: float, h: float, *, dim: int = 1,
                     metric: str = "euclidean", sigma: float = 2.0,
                     pad_steps: int = 3, weight_params: dict | None = None,
                     policy: BallPolicy | None = None,
                     cd_centers: int = 1500) -> StudyMember:
    """One study member: grid on [-R-pad, R+pad]^dim with the inner box
    [-R, R]^dim as the admissibility region."""
    pad = pad_steps * h
    if dim == 1:
        space = grid_1d(-R - pad, R + pad, h)
    else:
        space = grid_nd([-R - pad] * dim, [R + pad] * dim, h, metric=metric)
    inner = np.max(np.abs(space.coords), axis=1) <= R + 1e-9 * max(1.0, R)
    weight = make_weight(space, weight_kind, **(weight_params or {}))
    policy = policy or BallPolicy(max_radii_per_center=24,
                                  max_centers=min(space.n, 600))
    family = enumerate_balls(space, DomainMask(inner, sigma), policy)
    inside = inside_family(space, inner, policy)
    cd_fam = full_family(space, BallPolicy(max_centers=min(space.n, cd_centers)))
    c_d = doubling_constant(space, cd_fam).c_d_emp
    label = f"{weight_kind} R={R} h={h} dim={dim}"
    return StudyMember(label, space, weight, family, inside, c_d)


def domain_growth_members(weight_kind: str, R_values, h: float, **kw) -> list[StudyMember]:
    return [make_grid_member(weight_kind, R, h, **kw) for R in R_values]


def refinement_members(weight_kind: str, R: float, h_values, **kw) -> list[StudyMember]:
    return [make_grid_member(weight_kind, R, h, **kw) for h in h_values]


def _eval_entry(entry: str, m: StudyMember, fujii_budget: int | None,
                threads: int | None) -> float:
    name, _, arg = entry.partition(":")
    params = {}
    if arg:
        k, _, v = arg.partition("=")
        params[k] = float(v)
    fam = m.family
    if fam.is_empty:
        return float("nan")
    if name == "wrh_infinity":
        return wrh_infinity(m.weight, fam).constant
    if name == "weak_reverse_holder":
        p = params.get("p", 2.0)
        return weak_reverse_holder(m.weight, fam, [p]).constant
    if name == "reverse_holder":
        p = params.get("p", 2.0)
        return reverse_holder(m.weight, m.inside, [p]).constant
    if name == "smallness_power":
        alpha = params.get("alpha", 0.5)
        rep = smallness_envelopes(m.weight, fam, alpha_grid=[alpha])["smallness_power"]
        return rep.constant
    if name == "fujii_wilson":
        return fujii_wilson(m.weight, fam, ball_budget=fujii_budget, threads=threads).constant
    if name == "log_integral":
        return log_integral(m.weight, fam).constant
    if name == "exponential_mean":
        return exponential_mean(m.weight, fam).constant
    if name == "muckenhoupt_a1":
        return muckenhoupt_constants(m.weight, m.inside)["muckenhoupt_a1"].constant
    raise ValueError(f"unknown study condition {entry!r}")


@dataclass
class StudyTable:
    members: list[str]
    conditions: dict[str, dict] = field(default_factory=dict)

    def verdict(self, entry: str) -> str:
        return self.conditions[entry]["verdict"]

    def values(self, entry: str) -> list[float]:
        return self.conditions[entry]["values"]

    def as_dict(self) -> dict:
        return {"members": self.members, "conditions": self.conditions}


def refinement_study(members: list[StudyMember], conditions: list[str],
                     fujii_budget: int | None = 12,
                     grow_factor: float = GROW_FACTOR,
                     flat_tol: float = FLAT_TOL,
                     threads: int | None = None) -> StudyTable:
    """Evaluate each condition across the members and attach verdicts."""
    table = StudyTable([m.label for m in members])
    for entry in conditions:
        vals = [_eval_entry(entry, m, fujii_budget, threads) for m in members]
        table.conditions[entry] = {
            "values": [float(v) for v in vals],
            "verdict": classify_sequence(vals, grow_factor, flat_tol),
        }
    return table
