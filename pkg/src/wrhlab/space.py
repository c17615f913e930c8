"""Finite metric measure spaces: point clouds, balls, ball families, doubling.

A space is a finite set of points `0..n-1` with strictly positive masses and a
metric given either by coordinates (grids) or by an explicit distance matrix
(graphs, arbitrary spaces).  Balls are closed: ``members(B(c, r)) = {y :
d(c, y) <= r}``, with a tiny relative radius slack so that points at
floating-point distance ``r`` are always included.  Dilations ``a * B`` keep
the center and scale the radius under the same rule.

Grid spaces get a lattice fast path: every attained distance corresponds to a
small integer key, so per-center cumulative sums over the radius grid cost
O(n) without sorting.  Generic spaces use per-center distance sorts, cached.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .util import effective_radius


class SpaceValidationError(ValueError):
    """Raised when a space description violates a metric-measure invariant."""


class NoAdmissibleBallsError(RuntimeError):
    """Raised when an operation requires admissible balls and the family has none."""


NO_ADMISSIBLE_BALLS = "no admissible balls"


# ---------------------------------------------------------------------------
# Per-center geometry contexts
# ---------------------------------------------------------------------------

class CenterContext:
    """Radius-indexed view of the space as seen from one center.

    ``uniq_r`` lists the attained distances from the center in increasing
    order (``uniq_r[0] == 0``).  Cumulative quantities are reported per
    attained radius, so any ball integral at this center is an O(1) lookup.
    """

    center: int
    uniq_r: np.ndarray      # attained distances, increasing, uniq_r[0] == 0
    cum_mass: np.ndarray    # mass of B(center, uniq_r[i])
    point_rank: np.ndarray  # per point: index into uniq_r of its distance

    def radius_index(self, r: float) -> int:
        """Index of the largest attained radius <= r (with membership slack)."""
        raise NotImplementedError

    def radius_indices(self, radii: np.ndarray) -> np.ndarray:
        return np.array([self.radius_index(r) for r in np.atleast_1d(radii)], dtype=np.int64)

    def cum(self, values: np.ndarray) -> np.ndarray:
        """Cumulative sums of a per-point array over the radius grid."""
        raise NotImplementedError

    def runmax(self, values: np.ndarray) -> np.ndarray:
        """Running max of a per-point array over the radius grid."""
        raise NotImplementedError

    def runmin(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def member_ids(self, r: float) -> np.ndarray:
        """Point ids inside B(center, r), in a deterministic order."""
        raise NotImplementedError

    def member_count(self, r: float) -> int:
        idx = self.radius_index(r)
        return int(self.counts[idx])

    @property
    def eccentricity(self) -> float:
        return float(self.uniq_r[-1])


class SortedCenterContext(CenterContext):
    """Generic backend: one stable distance sort per center."""

    def __init__(self, center: int, row: np.ndarray, masses: np.ndarray):
        self.center = center
        order = np.argsort(row, kind="stable")  # ties broken by point id
        self._order = order
        sdist = row[order]
        uniq_r, start = np.unique(sdist, return_index=True)
        end = np.empty_like(start)
        end[:-1] = start[1:]
        end[-1] = len(sdist)
        self.uniq_r = uniq_r
        self._end = end
        self.counts = end
        self.cum_mass = np.cumsum(masses[order])[end - 1]
        rank_sorted = np.searchsorted(uniq_r, sdist, side="left")
        pr = np.empty(len(row), dtype=np.int64)
        pr[order] = rank_sorted
        self.point_rank = pr

    def radius_index(self, r: float) -> int:
        return int(np.searchsorted(self.uniq_r, effective_radius(r), side="right")) - 1

    def radius_indices(self, radii: np.ndarray) -> np.ndarray:
        eff = np.asarray(radii, dtype=float) * (1.0 + 1e-9) + 1e-15
        return np.searchsorted(self.uniq_r, eff, side="right") - 1

    def cum(self, values: np.ndarray) -> np.ndarray:
        return np.cumsum(values[self._order])[self._end - 1]

    def runmax(self, values: np.ndarray) -> np.ndarray:
        return np.maximum.accumulate(values[self._order])[self._end - 1]

    def runmin(self, values: np.ndarray) -> np.ndarray:
        return np.minimum.accumulate(values[self._order])[self._end - 1]

    def member_ids(self, r: float) -> np.ndarray:
        idx = self.radius_index(r)
        if idx < 0:
            return np.empty(0, dtype=np.int64)
        return self._order[: self._end[idx]]


class LatticeCenterContext(CenterContext):
    """Grid backend: attained distances map to small integer keys, no sorting."""

    def __init__(self, center: int, keys: np.ndarray, masses: np.ndarray, lattice: "LatticeInfo"):
        self.center = center
        self._keys = keys
        self._lattice = lattice
        nbins = int(keys.max()) + 1
        counts_full = np.bincount(keys, minlength=nbins)
        occ = np.flatnonzero(counts_full)
        self._occ = occ
        self._nbins = nbins
        self.uniq_r = lattice.key_to_radius(occ)
        self.counts = np.cumsum(counts_full)[occ]
        self.cum_mass = np.cumsum(np.bincount(keys, weights=masses, minlength=nbins))[occ]
        self.point_rank = np.searchsorted(occ, keys, side="left")

    def radius_index(self, r: float) -> int:
        kcut = self._lattice.key_cut(r)
        return int(np.searchsorted(self._occ, kcut, side="right")) - 1

    def radius_indices(self, radii: np.ndarray) -> np.ndarray:
        kcuts = self._lattice.key_cuts(np.asarray(radii, dtype=float))
        return np.searchsorted(self._occ, kcuts, side="right") - 1

    def cum(self, values: np.ndarray) -> np.ndarray:
        return np.cumsum(np.bincount(self._keys, weights=values, minlength=self._nbins))[self._occ]

    def runmax(self, values: np.ndarray) -> np.ndarray:
        per_key = np.full(self._nbins, -np.inf)
        np.maximum.at(per_key, self._keys, values)
        return np.maximum.accumulate(per_key)[self._occ]

    def runmin(self, values: np.ndarray) -> np.ndarray:
        per_key = np.full(self._nbins, np.inf)
        np.minimum.at(per_key, self._keys, values)
        return np.minimum.accumulate(per_key)[self._occ]

    def member_ids(self, r: float) -> np.ndarray:
        kcut = self._lattice.key_cut(r)
        return np.flatnonzero(self._keys <= kcut)


@dataclass(frozen=True)
class LatticeInfo:
    """Integer keying of attained distances on grid spaces.

    ``linf`` grids (1-D grids, Chebyshev): key = d / h.
    ``l2`` grids (Euclidean n-D): key = (d / h)^2, an integer sum of squares.
    """
    step: float
    kind: str  # "linf" | "l2"

    def keys_from_row(self, row: np.ndarray) -> np.ndarray:
        if self.kind == "linf":
            return np.rint(row / self.step).astype(np.int64)
        return np.rint((row / self.step) ** 2).astype(np.int64)

    def key_to_radius(self, keys: np.ndarray) -> np.ndarray:
        if self.kind == "linf":
            return keys * self.step
        return np.sqrt(keys.astype(float)) * self.step

    def key_cut(self, r: float) -> int:
        t = effective_radius(r) / self.step
        if self.kind == "l2":
            t = t * t
        return int(math.floor(t + 1e-9))

    def key_cuts(self, radii: np.ndarray) -> np.ndarray:
        t = (radii * (1.0 + 1e-9) + 1e-15) / self.step
        if self.kind == "l2":
            t = t * t
        return np.floor(t + 1e-9).astype(np.int64)


# ---------------------------------------------------------------------------
# The space itself
# ---------------------------------------------------------------------------

TRIANGLE_EXHAUSTIVE_LIMIT = 500
TRIANGLE_SAMPLES = 100_000


@dataclass
class PointCloudSpace:
    """Finite metric measure space with strictly positive point masses."""

    masses: np.ndarray
    metric_kind: str                      # euclidean | chebyshev | graph_shortest_path | explicit_matrix
    coords: np.ndarray | None = None      # (n, dim) when coordinate-based
    dense: np.ndarray | None = None       # (n, n) distance table when explicit
    lattice: LatticeInfo | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.ndim != 1 or len(self.masses) == 0:
            raise SpaceValidationError("masses must be a nonempty 1-D array")
        if not np.all(np.isfinite(self.masses)) or np.any(self.masses <= 0):
            bad = int(np.argmin(self.masses))
            raise SpaceValidationError(f"mass at point {bad} is not strictly positive")
        if self.coords is not None:
            self.coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
            if self.coords.shape[0] != self.n:
                raise SpaceValidationError("coords/masses length mismatch")
        if self.dense is not None:
            self.dense = np.asarray(self.dense, dtype=float)
            _validate_distance_matrix(self.dense)
        if self.dense is None and self.coords is None:
            raise SpaceValidationError("need coords or an explicit distance matrix")
        self._ctx_cache: dict[int, CenterContext] = {}
        self._ctx_cache_cap = None if self.n <= 4000 else 256
        self._diameter = None

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def dist_row(self, c: int) -> np.ndarray:
        if self.dense is not None:
            return self.dense[c]
        diff = self.coords - self.coords[c]
        if self.metric_kind == "chebyshev":
            return np.max(np.abs(diff), axis=1)
        return np.sqrt(np.sum(diff * diff, axis=1))

    def center_context(self, c: int) -> CenterContext:
        ctx = self._ctx_cache.get(c)
        if ctx is None:
            if self.lattice is not None:
                keys = self.lattice.keys_from_row(self.dist_row(c))
                ctx = LatticeCenterContext(c, keys, self.masses, self.lattice)
            else:
                ctx = SortedCenterContext(c, self.dist_row(c), self.masses)
            if self._ctx_cache_cap is not None and len(self._ctx_cache) >= self._ctx_cache_cap:
                self._ctx_cache.pop(next(iter(self._ctx_cache)))
            self._ctx_cache[c] = ctx
        return ctx

    def member_ids(self, c: int, r: float) -> np.ndarray:
        return self.center_context(c).member_ids(r)

    def member_count(self, c: int, r: float) -> int:
        return self.center_context(c).member_count(r)

    def ball_mass(self, c: int, r: float) -> float:
        ctx = self.center_context(c)
        return float(ctx.cum_mass[ctx.radius_index(r)])

    def eccentricity(self, c: int) -> float:
        return self.center_context(c).eccentricity

    @property
    def diameter(self) -> float:
        if self._diameter is None:
            if self.dense is not None:
                self._diameter = float(np.max(self.dense))
            elif self.metric_kind == "chebyshev":
                span = self.coords.max(axis=0) - self.coords.min(axis=0)
                self._diameter = float(np.max(span))
            else:
                # Euclidean grids and clouds: exact enough via extreme points scan.
                self._diameter = max(float(np.max(self.dist_row(c)))
                                     for c in _hull_candidates(self.coords))
        return self._diameter


def _hull_candidates(coords: np.ndarray) -> list[int]:
    """Indices of per-axis extreme points; the Euclidean diameter is attained
    between extreme points for the convex point sets produced by the builders,
    and it is only used as a radius cap elsewhere."""
    cand: set[int] = set()
    for ax in range(coords.shape[1]):
        cand.add(int(np.argmin(coords[:, ax])))
        cand.add(int(np.argmax(coords[:, ax])))
    return sorted(cand)


def _validate_distance_matrix(d: np.ndarray) -> None:
    n = d.shape[0]
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise SpaceValidationError("distance matrix must be square")
    if not np.all(np.isfinite(d)):
        raise SpaceValidationError("distance matrix has non-finite entries")
    asym = np.argwhere(np.abs(d - d.T) > 1e-12)
    if len(asym):
        i, j = asym[0]
        raise SpaceValidationError(f"matrix not symmetric at pair ({i}, {j})")
    if np.any(np.diag(d) != 0):
        i = int(np.argmax(np.diag(d) != 0))
        raise SpaceValidationError(f"nonzero diagonal at point {i}")
    offdiag = d + np.eye(n)
    if np.any(offdiag <= 0):
        i, j = np.argwhere(offdiag <= 0)[0]
        raise SpaceValidationError(f"zero/negative distance between distinct points ({i}, {j})")
    # Triangle inequality: exhaustive on small spaces, sampled beyond.
    tol = 1e-9 * max(1.0, float(d.max()))
    if n <= TRIANGLE_EXHAUSTIVE_LIMIT:
        for k in range(n):
            viol = d > d[:, k][:, None] + d[k][None, :] + tol
            if np.any(viol):
                i, j = np.argwhere(viol)[0]
                raise SpaceValidationError(
                    f"triangle inequality fails on ({i}, {j}, {k}): "
                    f"d({i},{j})={d[i, j]:.6g} > {d[i, k] + d[k, j]:.6g}")
    else:
        rng = np.random.default_rng(0)
        ii = rng.integers(0, n, TRIANGLE_SAMPLES)
        jj = rng.integers(0, n, TRIANGLE_SAMPLES)
        kk = rng.integers(0, n, TRIANGLE_SAMPLES)
        viol = d[ii, jj] > d[ii, kk] + d[kk, jj] + tol
        if np.any(viol):
            t = int(np.argmax(viol))
            raise SpaceValidationError(
                f"triangle inequality fails on ({ii[t]}, {jj[t]}, {kk[t]})")


# ---------------------------------------------------------------------------
# Balls, masks, families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    center: int
    radius: float

    def dilate(self, a: float) -> "Ball":
        return Ball(self.center, a * self.radius)


def ball_members(space: PointCloudSpace, ball: Ball) -> np.ndarray:
    return space.member_ids(ball.center, ball.radius)


@dataclass(frozen=True)
class DomainMask:
    """Open-set surrogate: a subset of point ids plus the dilation factor.

    A ball is sigma-admissible when the members of ``sigma * B`` stay inside
    omega and ``sigma * rad(B)`` does not outgrow the space as seen from the
    center (so a dilate may not silently saturate at the boundary of the
    point set itself).
    """
    omega: np.ndarray | None  # bool per point; None = all points
    sigma: float = 2.0

    def __post_init__(self):
        if not self.sigma > 1.0:
            raise SpaceValidationError("sigma must be > 1")
        if self.omega is not None:
            object.__setattr__(self, "omega", np.asarray(self.omega, dtype=bool))

    def omega_array(self, n: int) -> np.ndarray:
        if self.omega is None:
            return np.ones(n, dtype=bool)
        if len(self.omega) != n:
            raise SpaceValidationError("omega mask length mismatch")
        return self.omega


def is_admissible(space: PointCloudSpace, ball: Ball, mask: DomainMask) -> bool:
    ctx = space.center_context(ball.center)
    sr = mask.sigma * ball.radius
    if sr > effective_radius(ctx.eccentricity):
        return False
    omega = mask.omega_array(space.n)
    if not omega[ball.center]:
        return False
    if mask.omega is None:
        return True
    bad = ctx.cum((~omega).astype(float))
    return bad[ctx.radius_index(sr)] == 0


@dataclass(frozen=True)
class BallPolicy:
    """Enumeration policy: which attained radii and centers become balls.

    By default every positive attained distance from every admissible center
    is used (exhaustive below a couple thousand points).  ``max_radii_per_center``
    geometrically subsamples the radius grid; ``max_centers`` strides the
    center set, both deterministically.
    """
    max_radii_per_center: int | None = None
    max_centers: int | None = None
    include_zero_radius: bool = False

    def describe(self) -> dict:
        return {
            "max_radii_per_center": self.max_radii_per_center,
            "max_centers": self.max_centers,
            "include_zero_radius": self.include_zero_radius,
        }


@dataclass
class BallFamily:
    """Deterministically ordered list of balls plus the mask they satisfy."""

    space: PointCloudSpace
    centers: np.ndarray          # int64
    radii: np.ndarray            # float64
    sigma: float
    omega: np.ndarray | None
    policy: BallPolicy
    status: str = "ok"

    def __len__(self) -> int:
        return len(self.centers)

    def __iter__(self) -> Iterator[Ball]:
        for c, r in zip(self.centers, self.radii):
            yield Ball(int(c), float(r))

    @property
    def is_empty(self) -> bool:
        return len(self.centers) == 0

    def ball(self, i: int) -> Ball:
        return Ball(int(self.centers[i]), float(self.radii[i]))

    def per_center(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield (center, radii) groups in enumeration order."""
        if len(self.centers) == 0:
            return
        splits = np.flatnonzero(np.diff(self.centers)) + 1
        for chunk_c, chunk_r in zip(np.split(self.centers, splits), np.split(self.radii, splits)):
            yield int(chunk_c[0]), chunk_r


def _geometric_subsample(k: int, limit: int) -> np.ndarray:
    """Deterministic geometric subsample of indices 0..k-1, keeping the ends."""
    if k <= limit:
        return np.arange(k)
    picks = np.geomspace(1, k, num=limit)
    idx = np.unique(np.minimum(np.round(picks).astype(np.int64) - 1, k - 1))
    return idx


def enumerate_balls(space: PointCloudSpace,
                    mask: DomainMask | float | None = None,
                    policy: BallPolicy | None = None) -> BallFamily:
    """Enumerate sigma-admissible balls.

    Radii are the attained distances from each center, so every realizable
    member set appears exactly once per center.  The result is ordered by
    (center, radius) and is reproducible bit for bit.
    """
    if mask is None:
        mask = DomainMask(None, 2.0)
    elif isinstance(mask, (int, float)):
        mask = DomainMask(None, float(mask))
    policy = policy or BallPolicy()
    omega = mask.omega_array(space.n)
    sigma = mask.sigma

    center_ids = np.flatnonzero(omega)
    if policy.max_centers is not None and len(center_ids) > policy.max_centers:
        stride = int(np.ceil(len(center_ids) / policy.max_centers))
        center_ids = center_ids[::stride]

    nonomega = (~omega).astype(float)
    all_centers: list[np.ndarray] = []
    all_radii: list[np.ndarray] = []
    for c in center_ids:
        ctx = space.center_context(int(c))
        radii = ctx.uniq_r if policy.include_zero_radius else ctx.uniq_r[1:]
        if len(radii) == 0:
            continue
        idx = ctx.radius_indices(sigma * radii)
        ok = sigma * radii <= effective_radius(ctx.eccentricity)
        if mask.omega is not None:
            bad = ctx.cum(nonomega)
            ok &= bad[idx] == 0
        radii = radii[ok]
        if len(radii) == 0:
            continue
        if policy.max_radii_per_center is not None:
            radii = radii[_geometric_subsample(len(radii), policy.max_radii_per_center)]
        all_centers.append(np.full(len(radii), c, dtype=np.int64))
        all_radii.append(radii.astype(float))

    if all_centers:
        centers = np.concatenate(all_centers)
        radii = np.concatenate(all_radii)
        status = "ok"
    else:
        centers = np.empty(0, dtype=np.int64)
        radii = np.empty(0, dtype=float)
        status = NO_ADMISSIBLE_BALLS
    return BallFamily(space, centers, radii, sigma, mask.omega, policy, status)


def full_family(space: PointCloudSpace, policy: BallPolicy | None = None) -> BallFamily:
    """All attained balls with no admissibility constraint (used for the
    doubling estimate and full-space scans)."""
    policy = policy or BallPolicy()
    center_ids = np.arange(space.n)
    if policy.max_centers is not None and space.n > policy.max_centers:
        stride = int(np.ceil(space.n / policy.max_centers))
        center_ids = center_ids[::stride]
    all_centers, all_radii = [], []
    for c in center_ids:
        ctx = space.center_context(int(c))
        radii = ctx.uniq_r if policy.include_zero_radius else ctx.uniq_r[1:]
        if policy.max_radii_per_center is not None:
            radii = radii[_geometric_subsample(len(radii), policy.max_radii_per_center)]
        if len(radii) == 0:
            continue
        all_centers.append(np.full(len(radii), c, dtype=np.int64))
        all_radii.append(radii.astype(float))
    if all_centers:
        centers = np.concatenate(all_centers)
        radii = np.concatenate(all_radii)
    else:  # single point space
        centers = np.empty(0, dtype=np.int64)
        radii = np.empty(0, dtype=float)
    return BallFamily(space, centers, radii, 1.0, None, policy,
                      "ok" if len(centers) else NO_ADMISSIBLE_BALLS)


def inside_family(space: PointCloudSpace, omega: np.ndarray | None = None,
                  policy: BallPolicy | None = None) -> BallFamily:
    """Balls contained in omega (the same-ball analog of sigma-admissibility,
    used by the same-ball reverse Holder, Muckenhoupt and BMO quantities)."""
    policy = policy or BallPolicy()
    omega_arr = np.ones(space.n, dtype=bool) if omega is None else np.asarray(omega, dtype=bool)
    center_ids = np.flatnonzero(omega_arr)
    if policy.max_centers is not None and len(center_ids) > policy.max_centers:
        stride = int(np.ceil(len(center_ids) / policy.max_centers))
        center_ids = center_ids[::stride]
    nonomega = (~omega_arr).astype(float)
    all_centers, all_radii = [], []
    for c in center_ids:
        ctx = space.center_context(int(c))
        radii = ctx.uniq_r if policy.include_zero_radius else ctx.uniq_r[1:]
        if len(radii) == 0:
            continue
        if omega is not None:
            bad = ctx.cum(nonomega)
            radii = radii[bad[ctx.radius_indices(radii)] == 0]
        if len(radii) == 0:
            continue
        if policy.max_radii_per_center is not None:
            radii = radii[_geometric_subsample(len(radii), policy.max_radii_per_center)]
        all_centers.append(np.full(len(radii), c, dtype=np.int64))
        all_radii.append(radii.astype(float))
    if all_centers:
        centers = np.concatenate(all_centers)
        radii = np.concatenate(all_radii)
        status = "ok"
    else:
        centers = np.empty(0, dtype=np.int64)
        radii = np.empty(0, dtype=float)
        status = NO_ADMISSIBLE_BALLS
    return BallFamily(space, centers, radii, 1.0, omega if omega is None else omega_arr,
                      policy, status)


# ---------------------------------------------------------------------------
# Doubling estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DoublingEstimate:
    c_d_emp: float
    witness: Ball
    max_atom_mass: float  # one-atom slack companion for inequality checks

    def power(self, k: float) -> float:
        return self.c_d_emp ** k


def doubling_constant(space: PointCloudSpace, family: BallFamily | None = None) -> DoublingEstimate:
    """Empirical doubling constant: max over the family of mass(2B)/mass(B)."""
    if family is None:
        family = full_family(space)
    if family.is_empty:
        # Single point (or degenerate family): only one member set exists.
        return DoublingEstimate(1.0, Ball(0, 0.0), float(space.masses.max()))
    best = 1.0
    witness = family.ball(0)
    for c, radii in family.per_center():
        ctx = space.center_context(c)
        m = ctx.cum_mass
        i1 = ctx.radius_indices(radii)
        i2 = ctx.radius_indices(2.0 * radii)
        ratios = m[i2] / m[i1]
        j = int(np.argmax(ratios))
        if ratios[j] > best:
            best = float(ratios[j])
            witness = Ball(c, float(radii[j]))
    return DoublingEstimate(best, witness, float(space.masses.max()))


def dilation_constant(space: PointCloudSpace, family: BallFamily, a: float) -> float:
    """Empirical a-fold dilation constant: max of mass(aB)/mass(B)."""
    best = 1.0
    for c, radii in family.per_center():
        ctx = space.center_context(c)
        m = ctx.cum_mass
        ratios = m[ctx.radius_indices(a * radii)] / m[ctx.radius_indices(radii)]
        best = max(best, float(np.max(ratios)))
    return best


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def grid_1d(a: float, b: float, h: float) -> PointCloudSpace:
    """Uniform 1-D grid on [a, b] with step h; every point carries mass h."""
    if not (h > 0 and b > a):
        raise SpaceValidationError("need h > 0 and b > a")
    n = int(round((b - a) / h)) + 1
    x = a + h * np.arange(n)
    return PointCloudSpace(
        masses=np.full(n, h), metric_kind="euclidean", coords=x[:, None],
        lattice=LatticeInfo(h, "linf"), meta={"kind": "grid1d", "a": a, "b": b, "h": h})


def grid_nd(low, high, h: float, metric: str = "euclidean") -> PointCloudSpace:
    """Uniform n-D grid with per-point mass h^dim.

    With the chebyshev metric the balls are axis-aligned cubes.
    """
    low = np.atleast_1d(np.asarray(low, dtype=float))
    high = np.atleast_1d(np.asarray(high, dtype=float))
    if low.shape != high.shape or np.any(high <= low) or h <= 0:
        raise SpaceValidationError("bad grid bounds")
    if metric not in ("euclidean", "chebyshev"):
        raise SpaceValidationError(f"unsupported grid metric {metric!r}")
    axes = [lo + h * np.arange(int(round((hi - lo) / h)) + 1) for lo, hi in zip(low, high)]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    n = coords.shape[0]
    lattice = LatticeInfo(h, "linf" if metric == "chebyshev" else "l2")
    return PointCloudSpace(
        masses=np.full(n, h ** len(axes)), metric_kind=metric, coords=coords,
        lattice=lattice, meta={"kind": "gridnd", "low": low.tolist(),
                               "high": high.tolist(), "h": h, "metric": metric})


def graph_space(n: int, edges: Sequence[tuple[int, int, float]],
                masses: Iterable[float] | None = None) -> PointCloudSpace:
    """Weighted graph with the shortest-path metric (must be connected)."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import shortest_path

    if masses is None:
        masses = np.ones(n)
    ii = [e[0] for e in edges]
    jj = [e[1] for e in edges]
    ww = [float(e[2]) for e in edges]
    adj = coo_matrix((ww + ww, (ii + jj, jj + ii)), shape=(n, n))
    d = shortest_path(adj, method="D", directed=False)
    if not np.all(np.isfinite(d)):
        raise SpaceValidationError("graph is not connected")
    lattice = None
    if all(float(w).is_integer() for w in ww):
        lattice = LatticeInfo(1.0, "linf") if np.allclose(d, np.rint(d)) else None
    return PointCloudSpace(masses=np.asarray(masses, dtype=float),
                           metric_kind="graph_shortest_path", dense=d, lattice=lattice,
                           meta={"kind": "graph", "n": n})


def path_graph(n: int, edge_length: float = 1.0,
               masses: Iterable[float] | None = None) -> PointCloudSpace:
    return graph_space(n, [(i, i + 1, edge_length) for i in range(n - 1)], masses)


def matrix_space(matrix: np.ndarray, masses: Iterable[float]) -> PointCloudSpace:
    """Explicit distance matrix plus masses; all invariants are checked."""
    return PointCloudSpace(masses=np.asarray(masses, dtype=float),
                           metric_kind="explicit_matrix",
                           dense=np.asarray(matrix, dtype=float),
                           meta={"kind": "matrix"})


def build_space(spec: dict) -> PointCloudSpace:
    """Dispatch a space description dict to the matching builder."""
    kind = spec.get("kind")
    if kind == "grid1d":
        return grid_1d(spec["a"], spec["b"], spec["h"])
    if kind in ("grid2d", "gridnd"):
        return grid_nd(spec["low"], spec["high"], spec["h"], spec.get("metric", "euclidean"))
    if kind == "path_graph":
        return path_graph(spec["n"], spec.get("edge_length", 1.0), spec.get("masses"))
    if kind == "graph":
        return graph_space(spec["n"], [tuple(e) for e in spec["edges"]], spec.get("masses"))
    if kind == "matrix":
        return matrix_space(np.asarray(spec["matrix"], dtype=float), spec["masses"])
    raise SpaceValidationError(f"unknown space kind {kind!r}")
