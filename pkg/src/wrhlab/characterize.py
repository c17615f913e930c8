"""Characterizing functionals for weights over admissible ball families.

Every functional scans a family of sigma-admissible balls and reports the
worst ball (the measured constant and its witness), envelope curves over
parameter grids where the condition is quantified over a parameter, and the
count of balls skipped because the weight integrates to zero over the dilated
ball (those satisfy every inequality trivially and are only tallied).

Condition ids used in reports:

============================  ==================================================
smallness_envelope            worst w(F)/w(sigma B) under mass(F) <= eps mass(B)
smallness_threshold           verdict: some envelope value beats C_d^-5
weak_reverse_holder           avg_B w^p <= K (avg_{sigma B} w)^p, per p
smallness_power               worst w(F)/(w(sigma B) (mass F / mass B)^alpha)
fujii_wilson                  int_B M(w 1_B) <= K w(sigma B)
superlevel_mass               w(B n {w >= alpha avg}) <= beta w(sigma B), per alpha
log_integral                  int_B w log+(w / avg_{sigma B} w) <= K w(sigma B)
vanishing_envelope            the smallness envelope read as a function phi(t)
bmo_pairing                   int_B |f - f_B| w <= K w(sigma B), kappa-admissible
phi_integral                  like log_integral with a chosen increasing phi
wrh_infinity                  esssup_B w <= K avg_{sigma B} w
reverse_holder                same-ball (avg_B w^p)^(1/p) <= K avg_B w
muckenhoupt_ap / _a1          classical A_p / A_1 constants on balls inside omega
bmo_norm                      sup_B avg_B |f - f_B| over balls inside omega
exponential_mean              avg_B w <= K exp(avg_{sigma B} log w)
sublevel_fraction             mass(B n {w <= beta avg}) <= alpha mass(B)
============================  ==================================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maximal import maximal_function
from .space import (Ball, BallFamily, BallPolicy, NO_ADMISSIBLE_BALLS,
                    PointCloudSpace, full_family, inside_family)
from .util import effective_radius
from .weights import Weight

EPS_GRID = 0.5 ** np.arange(12, 0, -1)  # ascending 2^-12 .. 2^-1
ALPHA_GRID_POWER = np.round(np.arange(0.05, 1.0001, 0.05), 2)
ALPHA_GRID_SUPERLEVEL = 2.0 ** np.arange(0, 11)
P_GRID = np.array([1.1, 1.25, 1.5, 2.0, 3.0, 4.0])


@dataclass(frozen=True)
class WitnessBall:
    center: int
    radius: float
    value: float
    param: float | None = None

    def as_dict(self) -> dict:
        d = {"center": self.center, "radius": self.radius, "value": self.value}
        if self.param is not None:
            d["param"] = self.param
        return d


@dataclass
class EnvelopeCurve:
    params: np.ndarray
    values: np.ndarray
    witnesses: list  # (center, radius) per parameter

    def rows(self) -> list[tuple[float, float, int, float]]:
        return [(float(p), float(v), int(wc), float(wr))
                for p, v, (wc, wr) in zip(self.params, self.values, self.witnesses)]


@dataclass
class ConditionReport:
    condition: str
    sigma: float
    params: dict = field(default_factory=dict)
    constant: float | None = None
    envelope: EnvelopeCurve | None = None
    witness: WitnessBall | None = None
    evaluated: int = 0
    skipped: int = 0
    status: str = "ok"
    extras: dict = field(default_factory=dict)
    per_ball: list | None = None

    def as_dict(self) -> dict:
        out = {
            "condition": self.condition,
            "sigma": self.sigma,
            "params": self.params,
            "constant": self.constant,
            "witness": self.witness.as_dict() if self.witness else None,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "status": self.status,
            "extras": self.extras,
        }
        if self.envelope is not None:
            out["envelope"] = [list(r) for r in self.envelope.rows()]
        if self.per_ball is not None:
            out["per_ball"] = self.per_ball
        return out


def _empty_report(condition: str, family: BallFamily, **params) -> ConditionReport:
    return ConditionReport(condition, family.sigma, params, status=NO_ADMISSIBLE_BALLS)


# ---------------------------------------------------------------------------
# Per-center weighted views
# ---------------------------------------------------------------------------

class WeightedContext:
    """Cumulative views of one weight as seen from one center."""

    def __init__(self, w: Weight, center: int):
        self.ctx = w.space.center_context(center)
        self.center = center
        self.w = w
        self.cum_wm = self.ctx.cum(w.wm)
        self._powers: dict[float, np.ndarray] = {}
        self._runmax: np.ndarray | None = None
        self._runmin: np.ndarray | None = None
        self._cum_log: np.ndarray | None = None

    def cum_power(self, p: float) -> np.ndarray:
        arr = self._powers.get(p)
        if arr is None:
            with np.errstate(divide="ignore"):  # zeros under negative powers
                arr = self.ctx.cum(self.w.values ** p * self.w.space.masses)
            self._powers[p] = arr
        return arr

    @property
    def runmax(self) -> np.ndarray:
        if self._runmax is None:
            self._runmax = self.ctx.runmax(self.w.values)
        return self._runmax

    @property
    def runmin(self) -> np.ndarray:
        if self._runmin is None:
            self._runmin = self.ctx.runmin(self.w.values)
        return self._runmin

    @property
    def cum_log(self) -> np.ndarray:
        if self._cum_log is None:
            with np.errstate(divide="ignore"):
                logs = np.log(self.w.values)
            self._cum_log = self.ctx.cum(logs * self.w.space.masses)
        return self._cum_log


def weighted_context(w: Weight, center: int) -> WeightedContext:
    cache = getattr(w, "_wctx_cache", None)
    if cache is None:
        cache = {}
        w._wctx_cache = cache
    wc = cache.get(center)
    if wc is None:
        wc = WeightedContext(w, center)
        if len(cache) > 512:
            cache.pop(next(iter(cache)))
        cache[center] = wc
    return wc


def _sweep(w: Weight, family: BallFamily):
    """Yield per-ball geometry shared by the condition functionals.

    Tuples are (center, radius, weighted ctx, index of B, index of sigma B,
    mass(B), mass(sigma B), w(sigma B)).  Balls with w(sigma B) == 0 are not
    yielded; the caller learns the skipped count from the second yield slot.
    """
    sigma = family.sigma
    for center, radii in family.per_center():
        wc = weighted_context(w, center)
        ctx = wc.ctx
        i_b = ctx.radius_indices(radii)
        i_s = ctx.radius_indices(sigma * radii)
        for r, ib, isig in zip(radii, i_b, i_s):
            yield center, float(r), wc, int(ib), int(isig)


# ---------------------------------------------------------------------------
# Reverse Holder family: (weak) reverse Holder, WRH-infinity
# ---------------------------------------------------------------------------

def weak_reverse_holder(w: Weight, family: BallFamily, p_grid=P_GRID) -> ConditionReport:
    """Per p: worst avg_B(w^p) / (avg_{sigma B} w)^p over the family."""
    p_grid = np.asarray(p_grid, dtype=float)
    if family.is_empty:
        return _empty_report("weak_reverse_holder", family, p_grid=p_grid.tolist())
    best = np.zeros(len(p_grid))
    wit = [(-1, 0.0)] * len(p_grid)
    evaluated = skipped = 0
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        mu_b = wc.ctx.cum_mass[ib]
        mu_s = wc.ctx.cum_mass[isig]
        avg_s = ws / mu_s
        for k, p in enumerate(p_grid):
            val = (wc.cum_power(p)[ib] / mu_b) / avg_s ** p
            if val > best[k]:
                best[k] = val
                wit[k] = (center, r)
    env = EnvelopeCurve(p_grid, best, wit)
    j = int(np.argmax(best))
    witness = WitnessBall(wit[j][0], wit[j][1], float(best[j]), float(p_grid[j]))
    return ConditionReport("weak_reverse_holder", family.sigma,
                           {"p_grid": p_grid.tolist()}, float(best[j]), env, witness,
                           evaluated, skipped)


def reverse_holder(w: Weight, family: BallFamily, p_grid=P_GRID) -> ConditionReport:
    """Same-ball reverse Holder constants (avg_B w^p)^(1/p) / avg_B w.

    The family should be an inside-omega family (sigma plays no role here).
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if family.is_empty:
        return _empty_report("reverse_holder", family, p_grid=p_grid.tolist())
    best = np.zeros(len(p_grid))
    wit = [(-1, 0.0)] * len(p_grid)
    evaluated = skipped = 0
    for center, radii in family.per_center():
        wc = weighted_context(w, center)
        idx = wc.ctx.radius_indices(radii)
        for r, ib in zip(radii, idx):
            wb = wc.cum_wm[ib]
            if wb == 0.0:
                skipped += 1
                continue
            evaluated += 1
            mu_b = wc.ctx.cum_mass[ib]
            avg_b = wb / mu_b
            for k, p in enumerate(p_grid):
                val = (wc.cum_power(p)[ib] / mu_b) ** (1.0 / p) / avg_b
                if val > best[k]:
                    best[k] = val
                    wit[k] = (center, float(r))
    env = EnvelopeCurve(p_grid, best, wit)
    j = int(np.argmax(best))
    witness = WitnessBall(wit[j][0], wit[j][1], float(best[j]), float(p_grid[j]))
    return ConditionReport("reverse_holder", family.sigma,
                           {"p_grid": p_grid.tolist()}, float(best[j]), env, witness,
                           evaluated, skipped)


def wrh_infinity(w: Weight, family: BallFamily, collect_per_ball: bool = False) -> ConditionReport:
    """Worst esssup_B w / avg_{sigma B} w over the family."""
    if family.is_empty:
        return _empty_report("wrh_infinity", family)
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = 0
    per_ball = [] if collect_per_ball else None
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        val = wc.runmax[ib] / (ws / wc.ctx.cum_mass[isig])
        if per_ball is not None:
            per_ball.append((center, r, float(val)))
        if val > best:
            best, wit = float(val), (center, r)
    return ConditionReport("wrh_infinity", family.sigma, {}, best, None,
                           WitnessBall(wit[0], wit[1], best), evaluated, skipped,
                           per_ball=per_ball)


def wrh_infinity_on_ball(w: Weight, ball: Ball, sigma: float) -> float:
    """Single-ball esssup_B w / avg_{sigma B} w (the witness re-evaluation path)."""
    wc = weighted_context(w, ball.center)
    ib = wc.ctx.radius_index(ball.radius)
    isig = wc.ctx.radius_index(sigma * ball.radius)
    ws = wc.cum_wm[isig]
    if ws == 0.0:
        return 0.0
    return float(wc.runmax[ib] / (ws / wc.ctx.cum_mass[isig]))


# ---------------------------------------------------------------------------
# Measure-smallness envelopes: (a)/(b), (d), (f), (h)
# ---------------------------------------------------------------------------

def _ball_value_profile(w: Weight, wc: WeightedContext, ib: int):
    """Members of the ball sorted by descending value (ties by id), with
    cumulative masses and cumulative weight integrals."""
    members = _member_prefix(wc.ctx, ib)
    vals = w.values[members]
    order = np.lexsort((members, -vals))
    sv = vals[order]
    sm = w.space.masses[members][order]
    sg = w.wm[members][order]
    return sv, np.cumsum(sm), np.cumsum(sg), sg


def _member_prefix(ctx, idx: int) -> np.ndarray:
    # ordered prefix of members up to the idx-th attained radius
    return ctx.member_ids(float(ctx.uniq_r[idx]))


def smallness_envelopes(w: Weight, family: BallFamily,
                        eps_grid=EPS_GRID,
                        alpha_grid=ALPHA_GRID_POWER,
                        superlevel_grid=ALPHA_GRID_SUPERLEVEL,
                        c_d: float | None = None,
                        mode: str = "fractional",
                        collect_per_ball: bool = False) -> dict[str, ConditionReport]:
    """Envelopes built from adversarial subsets of each ball.

    smallness_envelope: eta(eps) = worst extremal w(F) / w(sigma B) under the
    budget mass(F) <= eps mass(B); also reported as vanishing_envelope (the
    same curve read as phi(t)).  smallness_power: worst ratio against
    (mass F / mass B)^alpha over superlevel prefixes F.  superlevel_mass:
    worst w(B n {w >= alpha avg_{sigma B} w}) / w(sigma B).

    With ``c_d`` given, verdicts against the threshold c_d^-5 are attached to
    smallness_threshold and superlevel_mass.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    superlevel_grid = np.asarray(superlevel_grid, dtype=float)
    if mode not in ("fractional", "prefix"):
        raise ValueError("envelope mode must be fractional or prefix")
    if family.is_empty:
        return {name: _empty_report(name, family) for name in
                ("smallness_envelope", "vanishing_envelope", "smallness_power",
                 "superlevel_mass", "smallness_threshold")}

    eta = np.zeros(len(eps_grid))
    eta_wit = [(-1, 0.0)] * len(eps_grid)
    chat = np.zeros(len(alpha_grid))
    chat_wit = [(-1, 0.0)] * len(alpha_grid)
    beta = np.zeros(len(superlevel_grid))
    beta_wit = [(-1, 0.0)] * len(superlevel_grid)
    evaluated = skipped = 0
    per_ball = [] if collect_per_ball else None

    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        mu_b = wc.ctx.cum_mass[ib]
        avg_s = ws / wc.ctx.cum_mass[isig]
        sv, cmass, cgain, sg = _ball_value_profile(w, wc, ib)

        # eta(eps): fractional (or prefix) extremal value per budget
        budgets = eps_grid * mu_b
        ks = np.searchsorted(cmass, budgets * (1 + 1e-12), side="right")
        vals = np.where(ks > 0, cgain[np.maximum(ks - 1, 0)], 0.0)
        if mode == "fractional":
            has_next = ks < len(sv)
            prev = np.where(ks > 0, cmass[np.maximum(ks - 1, 0)], 0.0)
            theta = np.zeros(len(ks))
            nz = has_next.copy()
            theta[nz] = (budgets[nz] - prev[nz]) / (cmass[ks[nz]] - prev[nz])
            np.clip(theta, 0.0, 1.0, out=theta)
            vals = vals + np.where(has_next, theta * sg[np.minimum(ks, len(sv) - 1)], 0.0)
        contrib = vals / ws
        improved = contrib > eta
        eta = np.where(improved, contrib, eta)
        for k in np.flatnonzero(improved):
            eta_wit[k] = (center, r)

        # C(alpha) over superlevel prefixes (all prefix sizes at once)
        frac = cmass / mu_b
        for k, alpha in enumerate(alpha_grid):
            ratios = cgain / (ws * frac ** alpha)
            j = int(np.argmax(ratios))
            if ratios[j] > chat[k]:
                chat[k] = float(ratios[j])
                chat_wit[k] = (center, r)

        # beta(alpha): mass of the superlevel part of B against w(sigma B)
        asc = sv[::-1]
        for k, alpha in enumerate(superlevel_grid):
            t = alpha * avg_s
            count = len(sv) - int(np.searchsorted(asc, t, side="left"))
            val = (cgain[count - 1] / ws) if count else 0.0
            if val > beta[k]:
                beta[k] = float(val)
                beta_wit[k] = (center, r)

        if per_ball is not None:
            per_ball.append((center, r, contrib.tolist()))

    reports = {}
    j = int(np.argmax(eta))
    reports["smallness_envelope"] = ConditionReport(
        "smallness_envelope", family.sigma,
        {"eps_grid": eps_grid.tolist(), "mode": mode}, float(eta[j]),
        EnvelopeCurve(eps_grid, eta, eta_wit),
        WitnessBall(eta_wit[j][0], eta_wit[j][1], float(eta[j]), float(eps_grid[j])),
        evaluated, skipped, per_ball=per_ball)
    reports["vanishing_envelope"] = ConditionReport(
        "vanishing_envelope", family.sigma,
        {"t_grid": eps_grid.tolist(), "mode": mode}, float(eta[j]),
        EnvelopeCurve(eps_grid, eta, list(eta_wit)),
        WitnessBall(eta_wit[j][0], eta_wit[j][1], float(eta[j]), float(eps_grid[j])),
        evaluated, skipped)
    jc = int(np.argmax(chat))
    reports["smallness_power"] = ConditionReport(
        "smallness_power", family.sigma, {"alpha_grid": alpha_grid.tolist()},
        float(chat[jc]), EnvelopeCurve(alpha_grid, chat, chat_wit),
        WitnessBall(chat_wit[jc][0], chat_wit[jc][1], float(chat[jc]), float(alpha_grid[jc])),
        evaluated, skipped)
    jb = int(np.argmin(beta))
    reports["superlevel_mass"] = ConditionReport(
        "superlevel_mass", family.sigma, {"alpha_grid": superlevel_grid.tolist()},
        float(np.max(beta)), EnvelopeCurve(superlevel_grid, beta, beta_wit),
        WitnessBall(beta_wit[jb][0], beta_wit[jb][1], float(beta[jb]), float(superlevel_grid[jb])),
        evaluated, skipped)

    threshold = None if c_d is None else float(c_d) ** -5
    verdict_b = None if threshold is None else bool(np.any(eta < threshold))
    verdict_f = None if threshold is None else bool(np.any(beta < threshold))
    reports["smallness_threshold"] = ConditionReport(
        "smallness_threshold", family.sigma, {"eps_grid": eps_grid.tolist()},
        float(np.min(eta)), None, None, evaluated, skipped,
        extras={"threshold": threshold, "verdict": verdict_b,
                "best_eps": float(eps_grid[int(np.argmin(eta))])})
    reports["superlevel_mass"].extras.update(
        {"threshold": threshold, "verdict": verdict_f,
         "best_alpha": float(superlevel_grid[jb]), "best_beta": float(beta[jb])})
    return reports


def smallness_power_on_ball(w: Weight, ball: Ball, sigma: float, alpha: float) -> float:
    """Single-ball smallness_power ratio over superlevel prefixes."""
    wc = weighted_context(w, ball.center)
    ib = wc.ctx.radius_index(ball.radius)
    isig = wc.ctx.radius_index(sigma * ball.radius)
    ws = wc.cum_wm[isig]
    if ws == 0.0:
        return 0.0
    mu_b = wc.ctx.cum_mass[ib]
    _, cmass, cgain, _ = _ball_value_profile(w, wc, ib)
    return float(np.max(cgain / (ws * (cmass / mu_b) ** alpha)))


# ---------------------------------------------------------------------------
# Integral conditions: (e), (g), (j), and the weak-log variant
# ---------------------------------------------------------------------------

def _phi_callable(phi):
    if callable(phi):
        return phi
    if phi == "log":
        return np.log
    if phi == "sqrt_log":
        return lambda t: np.sqrt(np.maximum(np.log(t), 0.0))
    if isinstance(phi, (list, tuple, np.ndarray)):
        table = np.asarray(phi, dtype=float)
        return lambda t: np.interp(t, table[:, 0], table[:, 1])
    raise ValueError(f"unknown phi choice {phi!r}")


def _subsample_balls(family: BallFamily, budget: int | None) -> list[int]:
    idx = np.arange(len(family))
    if budget is None or len(idx) <= budget:
        return idx.tolist()
    picks = np.unique(np.round(np.linspace(0, len(idx) - 1, budget)).astype(int))
    return idx[picks].tolist()


def fujii_wilson(w: Weight, family: BallFamily, ball_budget: int | None = None,
                 threads: int | None = None) -> ConditionReport:
    """Worst int_B M(w 1_B) dmu / w(sigma B).

    Each ball needs its own restricted maximal field (quadratic in the space
    size), so large families can be subsampled deterministically with
    ``ball_budget``.
    """
    if family.is_empty:
        return _empty_report("fujii_wilson", family)
    sigma = family.sigma
    space = w.space
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = 0
    chosen = _subsample_balls(family, ball_budget)
    for i in chosen:
        ball = family.ball(i)
        wc = weighted_context(w, ball.center)
        isig = wc.ctx.radius_index(sigma * ball.radius)
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        field = maximal_function(space, w.values, restriction=ball, threads=threads)
        members = space.member_ids(ball.center, ball.radius)
        val = field.integral_over(members) / ws
        if val > best:
            best, wit = float(val), (ball.center, ball.radius)
    return ConditionReport("fujii_wilson", sigma, {"ball_budget": ball_budget},
                           best, None, WitnessBall(wit[0], wit[1], best),
                           evaluated, skipped,
                           extras={"balls_considered": len(chosen)})


def log_integral(w: Weight, family: BallFamily) -> ConditionReport:
    """Worst int_B w log+(w / avg_{sigma B} w) dmu / w(sigma B)."""
    if family.is_empty:
        return _empty_report("log_integral", family)
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = 0
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        avg_s = ws / wc.ctx.cum_mass[isig]
        members = _member_prefix(wc.ctx, ib)
        vals = w.values[members]
        gains = w.wm[members]
        above = vals > avg_s
        integral = float(np.sum(gains[above] * np.log(vals[above] / avg_s)))
        val = integral / ws
        if val > best:
            best, wit = val, (center, r)
    return ConditionReport("log_integral", family.sigma, {}, best, None,
                           WitnessBall(wit[0], wit[1], best), evaluated, skipped)


def phi_integral(w: Weight, family: BallFamily, phi="log") -> ConditionReport:
    """Worst int over B n {w > avg} of w phi(w / avg_{sigma B} w) / w(sigma B)."""
    if family.is_empty:
        return _empty_report("phi_integral", family)
    phi_fn = _phi_callable(phi)
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = 0
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        avg_s = ws / wc.ctx.cum_mass[isig]
        members = _member_prefix(wc.ctx, ib)
        vals = w.values[members]
        gains = w.wm[members]
        above = vals > avg_s
        integral = float(np.sum(gains[above] * phi_fn(vals[above] / avg_s)))
        val = integral / ws
        if val > best:
            best, wit = val, (center, r)
    return ConditionReport("phi_integral", family.sigma,
                           {"phi": phi if isinstance(phi, str) else "callable"},
                           best, None, WitnessBall(wit[0], wit[1], best),
                           evaluated, skipped)


def weak_log_4b(w: Weight, family: BallFamily, c_d: float) -> ConditionReport:
    """Worst int_B w log+(w / (C2 avg_{2B} w)) dmu / w(4B) over balls whose
    4-dilates stay admissible; C2 = c_d^4 dominates the localization chain."""
    if family.is_empty:
        return _empty_report("weak_log_4b", family)
    space = w.space
    omega = family.omega
    c2 = float(c_d) ** 4
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = 0
    not_4b = 0
    nonomega = None if omega is None else (~np.asarray(omega, dtype=bool)).astype(float)
    for center, radii in family.per_center():
        wc = weighted_context(w, center)
        ctx = wc.ctx
        i_b = ctx.radius_indices(radii)
        i_2 = ctx.radius_indices(2.0 * radii)
        i_4 = ctx.radius_indices(4.0 * radii)
        ok4 = 4.0 * radii <= effective_radius(ctx.eccentricity)
        if nonomega is not None:
            bad = ctx.cum(nonomega)
            ok4 &= bad[i_4] == 0
        for r, ib, i2, i4, ok in zip(radii, i_b, i_2, i_4, ok4):
            if not ok:
                not_4b += 1
                continue
            w4 = wc.cum_wm[i4]
            w2 = wc.cum_wm[i2]
            if w4 == 0.0 or w2 == 0.0:
                skipped += 1
                continue
            evaluated += 1
            level = c2 * (w2 / ctx.cum_mass[i2])
            members = _member_prefix(ctx, int(ib))
            vals = w.values[members]
            gains = w.wm[members]
            above = vals > level
            val = float(np.sum(gains[above] * np.log(vals[above] / level))) / w4
            if val > best:
                best, wit = val, (center, float(r))
    return ConditionReport("weak_log_4b", family.sigma, {"c2": c2}, best, None,
                           WitnessBall(wit[0], wit[1], best), evaluated, skipped,
                           extras={"not_4b_admissible": not_4b})


def integral_conditions(w: Weight, family: BallFamily, phi="log",
                        c_d: float | None = None,
                        fujii_ball_budget: int | None = None,
                        threads: int | None = None) -> dict[str, ConditionReport]:
    out = {
        "fujii_wilson": fujii_wilson(w, family, fujii_ball_budget, threads),
        "log_integral": log_integral(w, family),
        "phi_integral": phi_integral(w, family, phi),
    }
    if c_d is not None:
        out["weak_log_4b"] = weak_log_4b(w, family, c_d)
    return out


# ---------------------------------------------------------------------------
# BMO: norms, pairing, and the log-maximal test function
# ---------------------------------------------------------------------------

def bmo_norm(space: PointCloudSpace, f, family: BallFamily) -> float:
    """sup over the family of avg_B |f - f_B| (exact per-ball evaluation)."""
    return bmo_norm_report(space, f, family).constant


def bmo_norm_report(space: PointCloudSpace, f, family: BallFamily) -> ConditionReport:
    f = np.asarray(f, dtype=float)
    if family.is_empty:
        return _empty_report("bmo_norm", family)
    fm = f * space.masses
    best, wit = 0.0, (-1, 0.0)
    for center, radii in family.per_center():
        ctx = space.center_context(center)
        cum_f = ctx.cum(fm)
        idx = ctx.radius_indices(radii)
        for r, ib in zip(radii, idx):
            members = _member_prefix(ctx, int(ib))
            mu = ctx.cum_mass[ib]
            mean = cum_f[ib] / mu
            val = float(np.sum(np.abs(f[members] - mean) * space.masses[members]) / mu)
            if val > best:
                best, wit = val, (center, float(r))
    return ConditionReport("bmo_norm", family.sigma, {}, best, None,
                           WitnessBall(wit[0], wit[1], best), len(family), 0)


def _kappa_admissible(space: PointCloudSpace, family: BallFamily, kappa: float):
    omega = family.omega
    nonomega = None if omega is None else (~np.asarray(omega, dtype=bool)).astype(float)
    for center, radii in family.per_center():
        ctx = space.center_context(center)
        ok = kappa * radii <= effective_radius(ctx.eccentricity)
        if nonomega is not None:
            bad = ctx.cum(nonomega)
            ok &= bad[ctx.radius_indices(kappa * radii)] == 0
        for r in radii[ok]:
            yield center, float(r)


def bmo_pairing(w: Weight, f, family: BallFamily,
                norm_policy: BallPolicy | None = None) -> ConditionReport:
    """Worst int_B |f - f_B| w dmu / w(sigma B) over kappa-admissible balls,
    kappa = max(sigma, 11), after normalizing f to unit BMO seminorm."""
    space = w.space
    f = np.asarray(f, dtype=float)
    if family.is_empty:
        return _empty_report("bmo_pairing", family)
    norm_fam = inside_family(space, family.omega,
                             norm_policy or BallPolicy(max_radii_per_center=64))
    norm = bmo_norm(space, f, norm_fam)
    if norm == 0.0:
        return ConditionReport("bmo_pairing", family.sigma, {}, 0.0, None, None,
                               0, 0, status="flat function (bmo norm 0)")
    fn = f / norm
    fnm = fn * space.masses
    kappa = max(family.sigma, 11.0)
    best, wit = 0.0, (-1, 0.0)
    evaluated = skipped = considered = 0
    for center, r in _kappa_admissible(space, family, kappa):
        considered += 1
        wc = weighted_context(w, center)
        ctx = wc.ctx
        ib = ctx.radius_index(r)
        isig = ctx.radius_index(family.sigma * r)
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        members = _member_prefix(ctx, ib)
        mean = float(np.sum(fnm[members]) / ctx.cum_mass[ib])
        val = float(np.sum(np.abs(fn[members] - mean) * w.wm[members]) / ws)
        if val > best:
            best, wit = val, (center, r)
    if considered == 0:
        return ConditionReport("bmo_pairing", family.sigma,
                               {"kappa": kappa}, None, None, None, 0, 0,
                               status=NO_ADMISSIBLE_BALLS,
                               extras={"note": "no kappa-admissible balls"})
    return ConditionReport("bmo_pairing", family.sigma, {"kappa": kappa},
                           best, None, WitnessBall(wit[0], wit[1], best),
                           evaluated, skipped,
                           extras={"bmo_norm": norm, "kappa_balls": considered})


def log_maximal_bmo_function(space: PointCloudSpace, f_ids: np.ndarray, ball: Ball,
                             norm_policy: BallPolicy | None = None,
                             threads: int | None = None):
    """Build f = log+( mass(B)/mass(F) * M(1_F) ) and measure its BMO seminorm
    plus the A_1 constant of M(1_F)^(1/2) over the whole space.

    Returns (f values, bmo norm, a1 constant).
    """
    f_ids = np.asarray(f_ids, dtype=np.int64)
    if f_ids.size == 0:
        raise ValueError("F must have positive measure")
    indicator = np.zeros(space.n)
    indicator[f_ids] = 1.0
    field = maximal_function(space, indicator, threads=threads).values
    mu_b = float(np.sum(space.masses[space.member_ids(ball.center, ball.radius)]))
    mu_f = float(np.sum(space.masses[f_ids]))
    scaled = (mu_b / mu_f) * field
    f = np.where(scaled > 1.0, np.log(np.maximum(scaled, 1.0)), 0.0)
    if norm_policy is None:
        norm_policy = BallPolicy() if space.n <= 800 else BallPolicy(max_radii_per_center=48)
    fam = inside_family(space, None, norm_policy)
    norm = bmo_norm(space, f, fam)
    root = np.sqrt(field)
    a1 = muckenhoupt_a1_of_values(space, root, fam)
    return f, norm, a1


def muckenhoupt_a1_of_values(space: PointCloudSpace, values: np.ndarray,
                             family: BallFamily) -> float:
    """A_1 constant of a positive function: sup avg_B / min_B over the family."""
    best = 0.0
    for center, radii in family.per_center():
        ctx = space.center_context(center)
        cum_v = ctx.cum(values * space.masses)
        rmin = ctx.runmin(values)
        idx = ctx.radius_indices(radii)
        avg = cum_v[idx] / ctx.cum_mass[idx]
        with np.errstate(divide="ignore"):
            ratios = np.where(rmin[idx] > 0, avg / rmin[idx], np.inf)
        best = max(best, float(np.max(ratios)))
    return best


def muckenhoupt_constants(w: Weight, family: BallFamily, p_grid=P_GRID) -> dict[str, ConditionReport]:
    """Classical A_p and A_1 constants over a same-ball (inside omega) family.

    A zero of the weight anywhere in a ball makes the dual average infinite;
    such balls witness A_p = +inf, matching the usual convention.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if family.is_empty:
        return {"muckenhoupt_ap": _empty_report("muckenhoupt_ap", family),
                "muckenhoupt_a1": _empty_report("muckenhoupt_a1", family)}
    space = w.space
    ap = np.zeros(len(p_grid))
    ap_wit = [(-1, 0.0)] * len(p_grid)
    a1_best, a1_wit = 0.0, (-1, 0.0)
    for center, radii in family.per_center():
        wc = weighted_context(w, center)
        ctx = wc.ctx
        idx = ctx.radius_indices(radii)
        avg_w = wc.cum_wm[idx] / ctx.cum_mass[idx]
        rmin = wc.runmin[idx]
        with np.errstate(divide="ignore"):
            a1_vals = np.where(rmin > 0, avg_w / rmin, np.inf)
        j = int(np.argmax(a1_vals))
        if a1_vals[j] > a1_best:
            a1_best = float(a1_vals[j])
            a1_wit = (center, float(radii[j]))
        has_zero = rmin == 0
        for k, p in enumerate(p_grid):
            with np.errstate(divide="ignore"):
                dual = np.where(
                    has_zero, np.inf,
                    (wc.cum_power(-1.0 / (p - 1.0))[idx] / ctx.cum_mass[idx]) ** (p - 1.0))
            vals = np.where(has_zero, np.inf, avg_w * dual)
            j = int(np.argmax(vals))
            if vals[j] > ap[k]:
                ap[k] = float(vals[j])
                ap_wit[k] = (center, float(radii[j]))
    env = EnvelopeCurve(p_grid, ap, ap_wit)
    j = int(np.argmax(ap))
    return {
        "muckenhoupt_ap": ConditionReport(
            "muckenhoupt_ap", family.sigma, {"p_grid": p_grid.tolist()},
            float(ap[j]), env,
            WitnessBall(ap_wit[j][0], ap_wit[j][1], float(ap[j]), float(p_grid[j])),
            len(family), 0),
        "muckenhoupt_a1": ConditionReport(
            "muckenhoupt_a1", family.sigma, {}, a1_best, None,
            WitnessBall(a1_wit[0], a1_wit[1], a1_best), len(family), 0),
    }


# ---------------------------------------------------------------------------
# Probes that classical doubling weights satisfy but this class may not
# ---------------------------------------------------------------------------

def exponential_mean(w: Weight, family: BallFamily,
                     collect_per_ball: bool = False) -> ConditionReport:
    """Worst avg_B w / exp(avg_{sigma B} log w); a vanishing weight on the
    dilated ball drives the denominator to zero and flags the ratio +inf."""
    if family.is_empty:
        return _empty_report("exponential_mean", family)
    best, wit = 0.0, (-1, 0.0)
    evaluated = 0
    flagged = 0
    per_ball = [] if collect_per_ball else None
    for center, r, wc, ib, isig in _sweep(w, family):
        evaluated += 1
        avg_b = wc.cum_wm[ib] / wc.ctx.cum_mass[ib]
        log_avg = wc.cum_log[isig] / wc.ctx.cum_mass[isig]
        denom = math.exp(log_avg) if np.isfinite(log_avg) else 0.0
        if denom == 0.0:
            val = np.inf if avg_b > 0 else 0.0
            if val == np.inf:
                flagged += 1
        else:
            val = avg_b / denom
        if per_ball is not None:
            per_ball.append((center, r, float(val)))
        if val > best:
            best, wit = float(val), (center, r)
    return ConditionReport("exponential_mean", family.sigma, {}, best, None,
                           WitnessBall(wit[0], wit[1], best), evaluated, 0,
                           extras={"infinite_ratio_balls": flagged}, per_ball=per_ball)


def sublevel_fraction(w: Weight, family: BallFamily,
                      beta_grid=None, alpha_grid=None) -> ConditionReport:
    """Per beta: worst mass(B n {w <= beta avg_{sigma B} w}) / mass(B); the
    verdict asks whether some (alpha, beta) in (0,1)^2 dominates every ball."""
    beta_grid = np.asarray(beta_grid if beta_grid is not None
                           else np.round(np.arange(0.05, 1.0, 0.05), 2), dtype=float)
    alpha_grid = np.asarray(alpha_grid if alpha_grid is not None
                            else np.round(np.arange(0.05, 1.0, 0.05), 2), dtype=float)
    if family.is_empty:
        return _empty_report("sublevel_fraction", family)
    worst = np.zeros(len(beta_grid))
    wit = [(-1, 0.0)] * len(beta_grid)
    evaluated = skipped = 0
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        avg_s = ws / wc.ctx.cum_mass[isig]
        members = _member_prefix(wc.ctx, ib)
        order = np.argsort(w.values[members], kind="stable")
        sv = w.values[members][order]
        cm = np.cumsum(w.space.masses[members][order])
        mu_b = wc.ctx.cum_mass[ib]
        counts = np.searchsorted(sv, beta_grid * avg_s, side="right")
        fracs = np.where(counts > 0, cm[np.maximum(counts - 1, 0)], 0.0) / mu_b
        improved = fracs > worst
        worst = np.where(improved, fracs, worst)
        for k in np.flatnonzero(improved):
            wit[k] = (center, r)
    verdict = bool(np.any(worst[:, None] <= alpha_grid[None, :]))
    j = int(np.argmin(worst))
    return ConditionReport("sublevel_fraction", family.sigma,
                           {"beta_grid": beta_grid.tolist(), "alpha_grid": alpha_grid.tolist()},
                           float(np.min(worst)), EnvelopeCurve(beta_grid, worst, wit),
                           WitnessBall(wit[j][0], wit[j][1], float(worst[j]), float(beta_grid[j])),
                           evaluated, skipped, extras={"verdict": verdict})


def classical_probes(w: Weight, family: BallFamily, **kw) -> dict[str, ConditionReport]:
    return {"exponential_mean": exponential_mean(w, family),
            "sublevel_fraction": sublevel_fraction(w, family, **kw)}


def dilated_weight_ratios(w: Weight, family: BallFamily):
    """Per-ball w(B) / w(sigma B) over the family (skipping w(sigma B) = 0).

    Returns (balls, ratios) with balls as (center, radius) pairs.
    """
    balls, ratios = [], []
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            continue
        balls.append((center, r))
        ratios.append(float(wc.cum_wm[ib] / ws))
    return balls, np.asarray(ratios)


def exponential_mean_on_ball(w: Weight, ball: Ball, sigma: float) -> float:
    wc = weighted_context(w, ball.center)
    ib = wc.ctx.radius_index(ball.radius)
    isig = wc.ctx.radius_index(sigma * ball.radius)
    avg_b = wc.cum_wm[ib] / wc.ctx.cum_mass[ib]
    log_avg = wc.cum_log[isig] / wc.ctx.cum_mass[isig]
    denom = math.exp(log_avg) if np.isfinite(log_avg) else 0.0
    if denom == 0.0:
        return float("inf") if avg_b > 0 else 0.0
    return float(avg_b / denom)


# ---------------------------------------------------------------------------
# WRH-infinity cross checks (max-average, localized max, weighted tail)
# ---------------------------------------------------------------------------

def wrh_infinity_checks(w: Weight, family: BallFamily, r_grid=(1.5, 2.0, 3.0),
                        ball_budget: int | None = 64,
                        threads: int | None = None) -> ConditionReport:
    """Three routes to the WRH-infinity constant plus the r-norm chain.

    max_average: sup over subsets F of avg_F w against avg_{sigma B} w (the
    extremal average is attained on a top-value atom).  localized_max: the max
    of M(w 1_B) on B against avg_{sigma B} w (computed on a ball budget).
    weighted_tail: esssup of w log(w/avg) on the strict superlevel part.
    The chain check verifies (avg_B w^r)^(1/r) <= max_average * avg_{sigma B} w
    for every r in the grid.
    """
    if family.is_empty:
        return _empty_report("wrh_infinity_checks", family)
    sigma = family.sigma
    space = w.space
    c_max_avg, wit_avg = 0.0, (-1, 0.0)
    c_tail, wit_tail = 0.0, (-1, 0.0)
    chain_ok = True
    chain_worst = 0.0
    evaluated = skipped = 0
    r_grid = tuple(float(r) for r in r_grid)
    for center, r, wc, ib, isig in _sweep(w, family):
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            skipped += 1
            continue
        evaluated += 1
        avg_s = ws / wc.ctx.cum_mass[isig]
        members = _member_prefix(wc.ctx, ib)
        vals = w.values[members]
        top = float(np.max(vals))
        val = top / avg_s
        if val > c_max_avg:
            c_max_avg, wit_avg = val, (center, r)
        above = vals > avg_s
        if np.any(above):
            tail = float(np.max(vals[above] * np.log(vals[above] / avg_s))) / avg_s
            if tail > c_tail:
                c_tail, wit_tail = tail, (center, r)
        mu_b = wc.ctx.cum_mass[ib]
        for rr in r_grid:
            lhs = (wc.cum_power(rr)[ib] / mu_b) ** (1.0 / rr)
            ratio = lhs / (top if top > 0 else 1.0)
            chain_worst = max(chain_worst, ratio)
            if lhs > top * (1 + 1e-9):
                chain_ok = False

    c_local, wit_local = 0.0, (-1, 0.0)
    for i in _subsample_balls(family, ball_budget):
        ball = family.ball(i)
        wc = weighted_context(w, ball.center)
        isig = wc.ctx.radius_index(sigma * ball.radius)
        ws = wc.cum_wm[isig]
        if ws == 0.0:
            continue
        avg_s = ws / wc.ctx.cum_mass[isig]
        field = maximal_function(space, w.values, restriction=ball, threads=threads)
        members = space.member_ids(ball.center, ball.radius)
        val = float(np.max(field.values[members])) / avg_s
        if val > c_local:
            c_local, wit_local = val, (ball.center, ball.radius)

    return ConditionReport(
        "wrh_infinity_checks", sigma, {"r_grid": list(r_grid)}, c_max_avg, None,
        WitnessBall(wit_avg[0], wit_avg[1], c_max_avg), evaluated, skipped,
        extras={
            "max_average": c_max_avg,
            "localized_max": c_local, "localized_witness": list(wit_local),
            "weighted_tail": c_tail, "tail_witness": list(wit_tail),
            "r_chain_holds": chain_ok, "r_chain_worst_ratio": chain_worst,
        })
