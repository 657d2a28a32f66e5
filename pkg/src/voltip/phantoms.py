"""Procedural test phantoms with analytic ground truth.

Every generator is deterministic for a given seed and emits a region tag
map (outer / void / content / metal) consistent with the intensities it
writes: void stays at the noise floor, content lies in [300, 2500], bag
shells in [800, 1500] and metal at or above 3200, before additive Gaussian
noise clamped to the 12-bit range.

These bands leave the default segmentation thresholds comfortable margins,
so pipeline behaviour can be checked voxel-for-voxel against ground truth
without real CT data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .voids import REGION_CONTENT, REGION_METAL, REGION_OUTER, REGION_VOID
from .volume import BoundingBox, Volume

KINDS = (
    "hollow-box-bag",
    "cluttered-bag",
    "cube-threat",
    "hollow-sphere-threat",
    "gun-like-threat",
    "metal-insert",
)


@dataclass
class PhantomSpec:
    kind: str
    dims: tuple[int, int, int] = (32, 32, 32)
    seed: int = 0
    clutter_density: float = 0.5
    noise_sigma: float = 20.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown phantom kind {self.kind!r}; choose from {KINDS}")
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or any(d < 8 for d in self.dims):
            raise ValidationError(f"dims must be >= 8 per axis, got {self.dims}")
        if not 0.0 <= self.clutter_density <= 1.0:
            raise ValidationError("clutter_density must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")


@dataclass
class GroundTruth:
    region: np.ndarray
    void_boxes: list[BoundingBox] = field(default_factory=list)
    object_masks: dict[str, np.ndarray] = field(default_factory=dict)


def _box_slices(origin, extent):
    return tuple(slice(o, o + e) for o, e in zip(origin, extent))


def _shell_geometry(dims):
    """Bag shell placement: margin and thickness scale down with tiny grids."""
    short = min(dims)
    margin = max(1, min(4, (short - 5) // 3))
    thickness = 2 if short >= 13 else 1
    outer_origin = (margin,) * 3
    outer_extent = tuple(d - 2 * margin for d in dims)
    inner_origin = tuple(margin + thickness for _ in dims)
    inner_extent = tuple(d - 2 * (margin + thickness) for d in dims)
    if any(e < 1 for e in inner_extent):
        raise ValidationError(f"dims {dims} too small for a hollow bag shell")
    return outer_origin, outer_extent, inner_origin, inner_extent


def _bag_shell(dims, base, region, rng):
    oo, oe, io, ie = _shell_geometry(dims)
    shell = np.zeros(dims, dtype=bool)
    shell[_box_slices(oo, oe)] = True
    shell[_box_slices(io, ie)] = False
    base[shell] = rng.uniform(800.0, 1500.0)
    region[shell] = REGION_CONTENT
    region[_box_slices(io, ie)] = REGION_VOID
    return shell, io, ie


def _finish(spec, base, region, rng, truth):
    if spec.noise_sigma > 0:
        base = base + rng.normal(0.0, spec.noise_sigma, spec.dims)
    data = np.clip(np.rint(base), 0, 4095).astype(np.uint16)
    return Volume(data, (1.0, 1.0, 1.0), 4095), truth


def _gen_hollow_box_bag(spec, base, region, rng):
    shell, io, ie = _bag_shell(spec.dims, base, region, rng)
    truth = GroundTruth(region, [BoundingBox(io, ie)], {"bag": shell})
    return _finish(spec, base, region, rng, truth)


def _gen_cluttered_bag(spec, base, region, rng):
    dims = spec.dims
    shell, io, ie = _bag_shell(dims, base, region, rng)

    # one reserved void block stays empty so an insertion target always exists
    reserved_extent = tuple(max(1, e // 2) for e in ie)
    reserved_origin = tuple(
        o + int(rng.integers(0, e - re + 1))
        for o, e, re in zip(io, ie, reserved_extent)
    )
    reserved = np.zeros(dims, dtype=bool)
    reserved[_box_slices(reserved_origin, reserved_extent)] = True

    interior = np.zeros(dims, dtype=bool)
    interior[_box_slices(io, ie)] = True
    target = spec.clutter_density * (int(interior.sum()) - int(reserved.sum()))

    content = np.zeros(dims, dtype=bool)
    attempts = 0
    while content.sum() < target and attempts < 400:
        attempts += 1
        size = rng.integers(2, 7, size=3)
        size = np.minimum(size, ie)
        origin = [o + int(rng.integers(0, e - s + 1)) for o, e, s in zip(io, ie, size)]
        box = _box_slices(origin, size)
        if reserved[box].any():
            continue
        intensity = rng.uniform(300.0, 2500.0)
        base[box] = intensity
        content[box] = True
    region[content] = REGION_CONTENT

    truth = GroundTruth(region, [BoundingBox(reserved_origin, reserved_extent)],
                        {"bag": shell, "clutter": content})
    return _finish(spec, base, region, rng, truth)


def _gen_cube_threat(spec, base, region, rng):
    dims = spec.dims
    side = max(3, min(dims) // 2 - 2)
    origin = tuple((d - side) // 2 for d in dims)
    cube = np.zeros(dims, dtype=bool)
    cube[_box_slices(origin, (side,) * 3)] = True
    base[cube] = 2000.0
    region[cube] = REGION_CONTENT
    truth = GroundTruth(region, [], {"object": cube})
    return _finish(spec, base, region, rng, truth)


def _gen_hollow_sphere_threat(spec, base, region, rng):
    dims = spec.dims
    radius = max(3.0, (min(dims) - 10) / 2.0)
    centre = [(d - 1) / 2.0 for d in dims]
    grid = np.indices(dims, dtype=np.float64)
    r = np.sqrt(sum((grid[i] - centre[i]) ** 2 for i in range(3)))
    ball = r <= radius
    cavity = r <= radius - 2.0
    shell = ball & ~cavity
    base[shell] = 2000.0
    region[shell] = REGION_CONTENT
    region[cavity] = REGION_VOID
    truth = GroundTruth(region, [], {"object": ball, "shell": shell})
    return _finish(spec, base, region, rng, truth)


def _gen_gun_like_threat(spec, base, region, rng):
    nx, ny, nz = spec.dims
    m = max(3, min(spec.dims) // 8 + 2)
    barrel_len = max(3, int((nx - 2 * m) * 0.7))
    bore = max(2, ny // 8)
    barrel_origin = (m, m, (nz - bore) // 2)
    barrel_extent = (barrel_len, bore, bore)

    grip_len = max(2, int((ny - 2 * m) * 0.5))
    grip_origin = (m, m + bore, (nz - bore) // 2)
    grip_extent = (max(2, barrel_len // 3), grip_len, bore)

    body = np.zeros(spec.dims, dtype=bool)
    body[_box_slices(barrel_origin, barrel_extent)] = True
    body[_box_slices(grip_origin, grip_extent)] = True

    # dense core in the forward half of the barrel
    core_len = max(1, barrel_len // 2)
    core_origin = (barrel_origin[0] + barrel_len - core_len,
                   barrel_origin[1], barrel_origin[2])
    core = np.zeros(spec.dims, dtype=bool)
    core[_box_slices(core_origin, (core_len, bore, bore))] = True
    core &= body

    base[body] = 2000.0
    base[core] = 3500.0
    region[body] = REGION_CONTENT
    region[core] = REGION_METAL
    truth = GroundTruth(region, [], {"object": body, "metal": core})
    return _finish(spec, base, region, rng, truth)


def _gen_metal_insert(spec, base, region, rng):
    dims = spec.dims
    shell, io, ie = _bag_shell(dims, base, region, rng)
    bolt_extent = (min(3, ie[0]), min(3, ie[1]), min(6, ie[2]))
    bolt_origin = io
    bolt = np.zeros(dims, dtype=bool)
    bolt[_box_slices(bolt_origin, bolt_extent)] = True
    base[bolt] = 3500.0
    region[bolt] = REGION_METAL

    void_boxes = []
    if ie[0] - bolt_extent[0] - 1 > 0:
        void_boxes.append(BoundingBox(
            (io[0] + bolt_extent[0] + 1, io[1], io[2]),
            (ie[0] - bolt_extent[0] - 1, ie[1], ie[2])))
    truth = GroundTruth(region, void_boxes, {"bag": shell, "bolt": bolt})
    return _finish(spec, base, region, rng, truth)


_GENERATORS = {
    "hollow-box-bag": _gen_hollow_box_bag,
    "cluttered-bag": _gen_cluttered_bag,
    "cube-threat": _gen_cube_threat,
    "hollow-sphere-threat": _gen_hollow_sphere_threat,
    "gun-like-threat": _gen_gun_like_threat,
    "metal-insert": _gen_metal_insert,
}


def generate(spec: PhantomSpec) -> tuple[Volume, GroundTruth]:
    """Build a phantom volume and its ground truth; deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    base = np.zeros(spec.dims, dtype=np.float64)
    region = np.full(spec.dims, REGION_OUTER, dtype=np.uint8)
    return _GENERATORS[spec.kind](spec, base, region, rng)
