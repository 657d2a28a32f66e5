"""Void determination: segment a baggage scan into outer / void / content.

The result is a per-voxel projection cost: 0 inside empty space, a large
constant ``c`` outside the bag, and an intensity-proportional value
``v * c / m`` on occupied content (``m`` = the volume's maximum intensity).
Low cost marks places where a threat can plausibly sit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from . import volume as vol
from .volume import Volume

REGION_OUTER = 0
REGION_VOID = 1
REGION_CONTENT = 2
REGION_METAL = 3  # used by phantom ground truth only

_CORNER = (0, 0, 0)
_STRUCT_6 = ndimage.generate_binary_structure(3, 1)


@dataclass
class VoidParams:
    """Bag segmentation thresholds.

    ``binarize_threshold`` finds the bag envelope: prefer a generous value,
    since noise absorbed into the bag can open fake voids outside it, which
    is the worse failure mode.  ``content_threshold`` splits the inside into
    void (below) and content (at or above).
    """

    binarize_threshold: float = 200.0
    bag_dilate_radius: int = 2
    content_threshold: float = 150.0
    c: float = 100.0

    def __post_init__(self):
        if self.binarize_threshold < 0 or self.content_threshold < 0:
            raise ValidationError("thresholds must be >= 0")
        if self.bag_dilate_radius < 1:
            raise ValidationError("bag_dilate_radius must be >= 1")
        if self.c <= 0:
            raise ValidationError("outer cost c must be positive")


@dataclass
class BagCostMap:
    """Projection cost plus an explicit region tag per voxel.

    Tags keep content voxels whose normalised cost is ~0 distinguishable
    from true void.
    """

    cost: np.ndarray
    region: np.ndarray
    c: float
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.cost.shape


def determine_voids(bag: Volume, params: VoidParams | None = None) -> BagCostMap:
    """Segment a bag volume and derive its projection cost map.

    Pipeline: binarise, keep the largest component as the bag envelope,
    dilate it so region growing cannot leak through boundary gaps, grow the
    outer region from the corner voxel, then split the inside by intensity.
    The dilation ring is handed back to the outer region where it is
    actually outside the bag, so a clean closed bag segments exactly.
    """
    p = params or VoidParams()

    fg = vol.threshold(bag, p.binarize_threshold)
    if not fg.any():
        raise ValidationError("no voxel above the binarise threshold")

    bag_comp = vol.largest_component(vol.connected_components(fg, 26))
    closed = vol.dilate(bag_comp, p.bag_dilate_radius)
    if closed[_CORNER]:
        raise ValidationError("corner seed lies inside the dilated bag")
    grown = vol.region_grow(closed, _CORNER)

    # re-claim the dilation ring: ring voxels 6-connected to the grown
    # region without crossing the bag envelope are outside the bag
    ring = closed & ~bag_comp
    touch = ndimage.binary_dilation(grown, structure=_STRUCT_6) & ring
    if touch.any():
        ring_labels, _ = ndimage.label(ring, structure=_STRUCT_6)
        keep = np.unique(ring_labels[touch])
        outer = grown | (np.isin(ring_labels, keep) & ring)
    else:
        outer = grown

    inside = ~outer
    content = inside & (bag.data >= p.content_threshold)
    void = inside & ~content

    m = float(bag.data.max())
    cost = np.zeros(bag.dims, dtype=np.float64)
    cost[outer] = p.c
    cost[content] = bag.data[content].astype(np.float64) * p.c / m

    region = np.full(bag.dims, REGION_OUTER, dtype=np.uint8)
    region[void] = REGION_VOID
    region[content] = REGION_CONTENT
    return BagCostMap(cost, region, p.c, bag.spacing)
