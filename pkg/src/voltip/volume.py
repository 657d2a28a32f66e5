"""Dense 3D volumes and the low-level voxel operations used by every pipeline stage.

A volume is a uint16 array of CT intensities indexed ``data[x, y, z]``.
Binary masks, label maps and distance fields are plain numpy arrays on the
same grid; only ``Volume``, ``LabelMap`` and ``BoundingBox`` carry extra
state worth a class.

All operations are pure: they never mutate their inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ValidationError

DEFAULT_MAX_INTENSITY = 4095

# interpolation orders accepted by rotate()
_SPLINE_ORDERS = {"nearest": 0, "linear": 1, "cubic-spline": 3}

# 6-connectivity: faces only.  26-connectivity: faces, edges and corners.
_STRUCTS = {
    6: ndimage.generate_binary_structure(3, 1),
    26: np.ones((3, 3, 3), dtype=bool),
}


@dataclass
class Volume:
    """A dense scalar volume with voxel spacing metadata.

    ``data`` has shape ``(nx, ny, nz)`` and dtype uint16; every value must
    lie in ``[0, max_intensity]``.  ``spacing`` is millimetres per voxel.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    max_intensity: int = DEFAULT_MAX_INTENSITY

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValidationError(f"volume data must be 3-D, got shape {self.data.shape}")
        if any(d < 1 for d in self.data.shape):
            raise ValidationError(f"volume dims must be positive, got {self.data.shape}")
        if self.data.dtype != np.uint16:
            if not np.issubdtype(self.data.dtype, np.integer):
                raise ValidationError(f"volume data must be integer, got {self.data.dtype}")
            if self.data.min() < 0 or self.data.max() > np.iinfo(np.uint16).max:
                raise ValidationError("volume data out of uint16 range")
            self.data = self.data.astype(np.uint16)
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ValidationError(f"spacing must be three positive values, got {self.spacing}")
        self.max_intensity = int(self.max_intensity)
        if self.max_intensity < 1:
            raise ValidationError("max_intensity must be >= 1")
        if self.data.size and int(self.data.max()) > self.max_intensity:
            raise ValidationError(
                f"voxel value {int(self.data.max())} exceeds max_intensity {self.max_intensity}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass
class LabelMap:
    """Connected-component labels: 0 is background, components are 1..K.

    ``component_sizes[k]`` is the voxel count of label ``k`` (index 0 holds
    the background count).
    """

    labels: np.ndarray
    component_sizes: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.component_sizes is None:
            self.component_sizes = np.bincount(self.labels.ravel())

    @property
    def n_components(self) -> int:
        return len(self.component_sizes) - 1


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned voxel box: ``origin`` index plus ``extent`` counts."""

    origin: tuple[int, int, int]
    extent: tuple[int, int, int]

    def __post_init__(self):
        if any(e < 1 for e in self.extent):
            raise ValidationError(f"box extent must be positive, got {self.extent}")
        if any(o < 0 for o in self.origin):
            raise ValidationError(f"box origin must be non-negative, got {self.origin}")

    def slices(self) -> tuple[slice, slice, slice]:
        return tuple(slice(o, o + e) for o, e in zip(self.origin, self.extent))

    def contains_within(self, dims) -> bool:
        return all(o + e <= d for o, e, d in zip(self.origin, self.extent, dims))


def threshold(v: Volume, t: float) -> np.ndarray:
    """Binarise: True where the voxel value is strictly greater than ``t``."""
    if t < 0:
        raise ValidationError(f"threshold must be >= 0, got {t}")
    return v.data > t


def _structure(connectivity: int) -> np.ndarray:
    if connectivity not in _STRUCTS:
        raise ValidationError(f"connectivity must be 6 or 26, got {connectivity}")
    return _STRUCTS[connectivity]


def connected_components(mask: np.ndarray, connectivity: int = 26) -> LabelMap:
    """Label connected foreground components.

    Labels are assigned 1..K in order of first encounter along the
    x-fastest scan of the grid, so the result is deterministic and
    independent of the underlying labelling library.
    """
    raw, n = ndimage.label(mask, structure=_structure(connectivity))
    if n == 0:
        return LabelMap(raw.astype(np.int32))
    flat = raw.ravel(order="F")
    nonzero = flat[flat != 0]
    first_label, first_pos = np.unique(nonzero, return_index=True)
    order = first_label[np.argsort(first_pos)]
    lut = np.zeros(n + 1, dtype=np.int32)
    lut[order] = np.arange(1, n + 1, dtype=np.int32)
    return LabelMap(lut[raw])


def largest_component(lm: LabelMap) -> np.ndarray:
    """Mask of the largest component; ties go to the smallest label id."""
    if lm.n_components < 1:
        raise ValidationError("label map has no foreground component")
    sizes = lm.component_sizes.copy()
    sizes[0] = -1  # exclude background; argmax picks smallest id on ties
    best = int(np.argmax(sizes))
    return lm.labels == best


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate by a cubic (Chebyshev-ball) structuring element of half-width ``radius``."""
    if int(radius) != radius or radius < 1:
        raise ValidationError(f"dilation radius must be a positive integer, got {radius}")
    size = 2 * int(radius) + 1
    return ndimage.maximum_filter(
        mask.astype(np.uint8), size=size, mode="constant", cval=0
    ).astype(bool)


def region_grow(barrier: np.ndarray, seed: tuple[int, int, int]) -> np.ndarray:
    """6-connected flood fill of non-barrier voxels starting at ``seed``."""
    seed = tuple(int(s) for s in seed)
    if len(seed) != 3 or any(s < 0 or s >= d for s, d in zip(seed, barrier.shape)):
        raise ValidationError(f"seed {seed} outside grid {barrier.shape}")
    if barrier[seed]:
        raise ValidationError(f"seed {seed} lies inside the barrier")
    labels, _ = ndimage.label(~barrier, structure=_STRUCTS[6])
    return labels == labels[seed]


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance (in voxel units) to the nearest True voxel.

    Distances are derived from the nearest-site feature transform so that
    squared distances are exact integers.
    """
    if not mask.any():
        raise ValidationError("distance transform of an empty mask is undefined")
    sites = ndimage.distance_transform_edt(
        ~mask, return_distances=False, return_indices=True
    )
    grid = np.indices(mask.shape, dtype=np.int64)
    d2 = ((grid - sites.astype(np.int64)) ** 2).sum(axis=0)
    return np.sqrt(d2.astype(np.float64))


def rotation_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Compose plane rotations yz (alpha), xz (beta), xy (gamma), in that order."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    r_yz = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    r_xz = np.array([[cb, 0, -sb], [0, 1, 0], [sb, 0, cb]])
    r_xy = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    return r_xy @ r_xz @ r_yz


def rotated_dims(dims, angles) -> tuple[int, int, int]:
    """Output grid size of a rotation: rounded bounding box of the rotated volume."""
    rot = rotation_matrix(*angles)
    corners = np.array(list(itertools.product(*[(0.0, float(d)) for d in dims]))).T
    spans = np.ptp(rot @ corners, axis=1)
    return tuple(int(max(1, np.floor(s + 0.5))) for s in spans)


def rotate_array(data: np.ndarray, angles, order: str = "linear") -> np.ndarray:
    """Rotate a scalar array about its centre; see :func:`rotate` for conventions.

    Returns float64; out-of-support samples are zero.  Zero angles return an
    exact copy.
    """
    if order not in _SPLINE_ORDERS:
        raise ValidationError(f"order must be one of {sorted(_SPLINE_ORDERS)}, got {order!r}")
    alpha, beta, gamma = (float(a) for a in angles)
    if alpha == 0.0 and beta == 0.0 and gamma == 0.0:
        return data.astype(np.float64, copy=True)
    rot = rotation_matrix(alpha, beta, gamma)
    out_dims = rotated_dims(data.shape, (alpha, beta, gamma))
    c_in = (np.asarray(data.shape, dtype=float) - 1) / 2.0
    c_out = (np.asarray(out_dims, dtype=float) - 1) / 2.0
    inv = rot.T  # rotation matrices are orthogonal
    spline = _SPLINE_ORDERS[order]
    return ndimage.affine_transform(
        data.astype(np.float64),
        inv,
        offset=c_in - inv @ c_out,
        output_shape=out_dims,
        order=spline,
        mode="constant",
        cval=0.0,
        prefilter=spline > 1,
    )


def rotate(v: Volume, angles, order: str = "linear") -> Volume:
    """Rotate a volume about its centre.

    Angles are radians in the yz, xz and xy planes, applied in that order.
    The output grid expands to the bounding box of the rotated volume;
    values are clamped to ``[0, max_intensity]``.
    """
    rotated = rotate_array(v.data, angles, order)
    clipped = np.clip(np.rint(rotated), 0, v.max_intensity).astype(np.uint16)
    return Volume(clipped, v.spacing, v.max_intensity)


def crop(v: Volume, box: BoundingBox) -> Volume:
    """Copy the sub-volume covered by ``box``."""
    if not box.contains_within(v.dims):
        raise ValidationError(f"box {box} exceeds volume dims {v.dims}")
    return Volume(v.data[box.slices()].copy(), v.spacing, v.max_intensity)


def bounding_box(mask: np.ndarray) -> BoundingBox:
    """Tightest axis-aligned box containing every True voxel."""
    coords = np.nonzero(mask)
    if coords[0].size == 0:
        raise ValidationError("bounding box of an empty mask is undefined")
    origin = tuple(int(c.min()) for c in coords)
    extent = tuple(int(c.max()) - int(c.min()) + 1 for c in coords)
    return BoundingBox(origin, extent)
