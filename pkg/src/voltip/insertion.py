"""Insertion optimisation: find where and how to place a threat in a bag.

A pose is six continuous variables: the crop origin (x, y, z) in the bag
grid and three rotation angles.  Its cost combines

* the weighted projection cost of every threat voxel at that pose,
* a count penalty for voxels whose weighted cost exceeds a step threshold
  (suppresses placements that average well but clip dense objects), and
* a gravity term proportional to the coordinate along the gravity axis,
  so equally empty placements prefer the low end of the bag.

Particle swarm optimisation minimises this cost; the winning pose drives an
additive blend of the weighted threat into the bag.  A normalised quality
score in [0, 100] summarises how plausible the insertion is.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .isolation import ThreatIndicator
from .voids import BagCostMap
from .volume import Volume, rotate_array, rotated_dims

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass
class Pose:
    """Crop origin (continuous voxel coordinates) plus rotation angles (radians)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.alpha, self.beta, self.gamma])

    @classmethod
    def from_array(cls, a) -> "Pose":
        return cls(*(float(v) for v in a))

    @property
    def origin(self) -> tuple[int, int, int]:
        """Crop origin rounded to the voxel grid."""
        return tuple(int(np.rint(v)) for v in (self.x, self.y, self.z))

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass
class ObjectiveParams:
    lambda1: float = 0.01
    lambda2: float = 1.0
    c_prime: float = 10.0
    gravity_axis: str = "y"

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValidationError("lambda weights must be >= 0")
        if self.c_prime <= 0:
            raise ValidationError("c_prime must be positive")
        if self.gravity_axis not in _AXES:
            raise ValidationError("gravity_axis must be 'x', 'y' or 'z'")


@dataclass
class PsoConfig:
    """Swarm parameters; defaults are the standard constriction values.

    ``bounds`` is a (6, 2) array of [lo, hi] per pose dimension; None
    derives position bounds from the bag grid and leaves angles free in
    [-pi, pi].
    """

    w: float = 0.729
    c1: float = 1.494
    c2: float = 1.494
    n_particles: int = 40
    n_iterations: int = 60
    seed: int = 0
    bounds: np.ndarray | None = None

    def __post_init__(self):
        if self.n_particles < 1 or self.n_iterations < 1:
            raise ValidationError("n_particles and n_iterations must be >= 1")
        if self.bounds is not None:
            b = np.asarray(self.bounds, dtype=np.float64)
            if b.shape != (6, 2):
                raise ValidationError(f"bounds must be (6, 2), got {b.shape}")
            if not np.isfinite(b).all():
                raise ValidationError("bounds must be finite")
            if (b[:, 0] > b[:, 1]).any():
                raise ValidationError("bounds are infeasible: lo > hi")
            self.bounds = b


@dataclass
class TipResult:
    """Outcome of one insertion: blended volume, winning pose and its scores."""

    volume: Volume
    pose: Pose
    cost: float
    score: float
    threat_voxels: int
    trace: list[float] = field(default_factory=list)


def default_pose_bounds(bag_dims) -> np.ndarray:
    """Positions span the bag grid; angles span [-pi, pi]."""
    b = np.empty((6, 2))
    for i, d in enumerate(bag_dims):
        b[i] = (0.0, float(d - 1))
    b[3:] = (-math.pi, math.pi)
    return b


def wrap_angle(a):
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


class _PoseEvaluator:
    """Shared machinery for the objective: rotation cache plus penalty.

    Poses whose crop box cannot fit in the bag grid get a large finite
    penalty (c * threat voxels * 10) instead of an error, which keeps a
    swarm exploring near the boundary.
    """

    def __init__(self, ind: ThreatIndicator, cmap: BagCostMap, op: ObjectiveParams):
        self.ind = ind
        self.cmap = cmap
        self.op = op
        self.axis = _AXES[op.gravity_axis]
        self.penalty = cmap.c * max(1, int(np.count_nonzero(ind.w))) * 10.0
        self._cache: dict[tuple[float, float, float], np.ndarray] = {}

    def rotated(self, angles) -> np.ndarray:
        key = tuple(float(a) for a in angles)
        hit = self._cache.get(key)
        if hit is None:
            hit = np.clip(rotate_array(self.ind.w, key, "linear"), 0.0, 1.0)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def __call__(self, pose_vec) -> float:
        x, y, z, alpha, beta, gamma = (float(v) for v in pose_vec)
        origin = tuple(int(np.rint(v)) for v in (x, y, z))
        extent = rotated_dims(self.ind.dims, (alpha, beta, gamma))
        dims = self.cmap.dims
        if any(o < 0 or o + e > d for o, e, d in zip(origin, extent, dims)):
            return self.penalty
        w = self.rotated((alpha, beta, gamma))
        sub = self.cmap.cost[tuple(slice(o, o + e) for o, e in zip(origin, extent))]
        mtip = w * sub
        cost = float(mtip.sum())
        cost += self.op.lambda1 * float(np.count_nonzero(mtip > self.op.c_prime))
        cost += self.op.lambda2 * (x, y, z)[self.axis]
        return cost


def objective_cost(ind: ThreatIndicator, cmap: BagCostMap, pose: Pose,
                   op: ObjectiveParams | None = None) -> float:
    """Insertion cost of one pose; infeasible poses return the fit penalty."""
    return _PoseEvaluator(ind, cmap, op or ObjectiveParams())(pose.as_array())


def pso_minimize(objective, bounds: np.ndarray, cfg: PsoConfig,
                 workers: int = 1,
                 wrap_dims: tuple[int, ...] = ()) -> tuple[np.ndarray, float, list[float]]:
    """Minimise ``objective`` over a box with a particle swarm.

    Each iteration evaluates every particle, updates personal and global
    bests, then applies the inertia / cognitive / social velocity update
    with two fresh uniform draws per particle.  Positions clamp to the
    bounds (the clamped velocity component is zeroed); dimensions listed in
    ``wrap_dims`` are periodic and wrap to [-pi, pi) first, so free
    rotations never stick to a bound.

    All random draws come from one seeded generator in a fixed order, and
    particle costs are gathered in particle order, so the result is
    identical for any ``workers`` count.

    Returns the best position, its cost, and the per-iteration best-cost
    trace.
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.isfinite(bounds).all() or (lo > hi).any():
        raise ValidationError("bounds are infeasible")
    ndim = len(lo)
    wrap_dims = tuple(wrap_dims)

    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_particles
    pos = rng.uniform(lo, hi, size=(n, ndim))
    span = hi - lo
    vel = rng.uniform(-span, span, size=(n, ndim))

    pbest = pos.copy()
    pbest_cost = np.full(n, np.inf)
    trace: list[float] = []

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for _ in range(cfg.n_iterations):
            if pool is not None:
                costs = list(pool.map(objective, pos))
            else:
                costs = [objective(p) for p in pos]
            for i, c in enumerate(costs):
                if c < pbest_cost[i]:
                    pbest_cost[i] = c
                    pbest[i] = pos[i]
            g = int(np.argmin(pbest_cost))
            trace.append(float(pbest_cost[g]))

            r = rng.uniform(size=(n, 2))
            vel = (cfg.w * vel
                   + cfg.c1 * r[:, 0, None] * (pbest - pos)
                   + cfg.c2 * r[:, 1, None] * (pbest[g] - pos))
            pos = pos + vel
            for d in wrap_dims:
                pos[:, d] = wrap_angle(pos[:, d])
            clamped = (pos < lo) | (pos > hi)
            pos = np.clip(pos, lo, hi)
            vel[clamped] = 0.0
    finally:
        if pool is not None:
            pool.shutdown()

    g = int(np.argmin(pbest_cost))
    return pbest[g].copy(), float(pbest_cost[g]), trace


def pso_optimize(ind: ThreatIndicator, cmap: BagCostMap,
                 op: ObjectiveParams | None = None,
                 cfg: PsoConfig | None = None,
                 workers: int = 1) -> tuple[Pose, float, list[float]]:
    """Find the cheapest insertion pose; see :func:`pso_minimize`.

    Returns the best pose, its cost, and the per-iteration best-cost trace.
    """
    op = op or ObjectiveParams()
    cfg = cfg or PsoConfig()
    bounds = cfg.bounds if cfg.bounds is not None else default_pose_bounds(cmap.dims)
    evaluate = _PoseEvaluator(ind, cmap, op)
    best, cost, trace = pso_minimize(evaluate, bounds, cfg, workers=workers,
                                     wrap_dims=(3, 4, 5))
    return Pose.from_array(best), cost, trace


def _fit_slices(origin, extent, dims):
    if any(o < 0 or o + e > d for o, e, d in zip(origin, extent, dims)):
        return None
    return tuple(slice(o, o + e) for o, e in zip(origin, extent))


def blend(threat: Volume, ind: ThreatIndicator, bag: Volume, pose: Pose) -> Volume:
    """Add the weighted, rotated threat into the bag at the pose's crop box.

    The threat is weighted by the indicator first and rotated once; the
    sum clamps at the bag's max intensity.  Voxels outside the crop box are
    untouched.
    """
    if threat.dims != ind.dims:
        raise ValidationError(f"threat dims {threat.dims} != indicator dims {ind.dims}")
    weighted = threat.data.astype(np.float64) * ind.w
    rotated = np.maximum(rotate_array(weighted, pose.angles, "linear"), 0.0)
    slices = _fit_slices(pose.origin, rotated.shape, bag.dims)
    if slices is None:
        raise ValidationError(f"pose {pose} does not fit inside bag dims {bag.dims}")
    out = bag.data.copy()
    mixed = out[slices].astype(np.float64) + rotated
    out[slices] = np.clip(np.rint(mixed), 0, bag.max_intensity).astype(np.uint16)
    return Volume(out, bag.spacing, bag.max_intensity)


def quality_score(cost: float, threat_voxels: int, c: float = 100.0) -> float:
    """Map a per-voxel-normalised insertion cost onto [0, 100].

    The gain 1e4 / c pins the endpoints: zero cost scores 100 and a
    worst-case insertion entirely on outer-cost voxels scores 0.
    """
    if threat_voxels < 1:
        raise ValidationError("threat_voxels must be >= 1")
    if c <= 0:
        raise ValidationError("outer cost c must be positive")
    normalised = cost / float(threat_voxels)
    f = 100.0 - 0.01 * normalised * (1e4 / c)
    return float(min(100.0, max(0.0, f)))


def insert(threat: Volume, ind: ThreatIndicator, bag: Volume, cmap: BagCostMap,
           op: ObjectiveParams | None = None, cfg: PsoConfig | None = None,
           workers: int = 1) -> TipResult:
    """Optimise, blend and score one threat-into-bag insertion.

    If no pose fits (the threat is larger than the bag in every sampled
    orientation) the bag is returned unmodified and the penalty cost yields
    a score near 0, which downstream thresholds reject.
    """
    if bag.dims != cmap.dims:
        raise ValidationError(f"bag dims {bag.dims} != cost map dims {cmap.dims}")
    threat_voxels = int(np.count_nonzero(ind.w))
    if threat_voxels < 1:
        raise ValidationError("indicator has no positive-weight voxel")

    pose, cost, trace = pso_optimize(ind, cmap, op, cfg, workers=workers)

    if _fit_slices(pose.origin, rotated_dims(ind.dims, pose.angles), bag.dims) is None:
        tip = Volume(bag.data.copy(), bag.spacing, bag.max_intensity)
    else:
        tip = blend(threat, ind, bag, pose)

    score = quality_score(cost, threat_voxels, cmap.c)
    return TipResult(tip, pose, cost, score, threat_voxels, trace)
