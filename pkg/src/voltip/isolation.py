"""Threat isolation: segment a controlled-condition threat scan.

The scan is split into three regions and summarised by a per-voxel weight:

* threat body, weight 1;
* background, weight 0;
* an uncertain shell between them, weight 1/d^2 where d is the Euclidean
  distance (voxel units, clamped to >= 1) to the retained threat body.

The shell keeps voxels that thresholding alone cannot confidently assign:
they may be object surface or residual noise, so they are attenuated rather
than copied or discarded when the threat is later blended into a bag.
Internal cavities fully enclosed by the body count as part of the threat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from . import volume as vol
from .volume import Volume

_CORNER = (0, 0, 0)


@dataclass
class IsolationParams:
    """Knobs of the isolation pipeline.

    ``binarize_threshold`` separates object from air for a controlled scan;
    ``body_dilate_radius`` closes the object boundary so region growing
    cannot leak inside; ``background_dilate_radius`` pushes the background
    inward, carving the uncertain shell; ``connectivity`` applies to the
    component labelling of the thresholded scan.
    """

    binarize_threshold: float = 150.0
    body_dilate_radius: int = 2
    background_dilate_radius: int = 2
    connectivity: int = 26

    def __post_init__(self):
        if self.binarize_threshold < 0:
            raise ValidationError("binarize_threshold must be >= 0")
        if self.body_dilate_radius < 1 or self.background_dilate_radius < 1:
            raise ValidationError("dilation radii must be >= 1")
        if self.connectivity not in (6, 26):
            raise ValidationError("connectivity must be 6 or 26")


@dataclass
class ThreatIndicator:
    """Per-voxel blending weight in [0, 1] on the cropped threat grid."""

    w: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 3:
            raise ValidationError(f"indicator must be 3-D, got shape {self.w.shape}")
        if self.w.size and (self.w.min() < 0.0 or self.w.max() > 1.0):
            raise ValidationError("indicator weights must lie in [0, 1]")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.w.shape


@dataclass
class ThreatSegmentation:
    """Full-grid region masks behind an isolation run.

    ``body``, ``background`` and ``uncertain`` partition the scan grid.
    """

    body: np.ndarray
    background: np.ndarray
    uncertain: np.ndarray


def build_indicator(body: np.ndarray, background: np.ndarray,
                    dist: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> ThreatIndicator:
    """Assemble the weight field from the two masks and the body distance field.

    Voxels in neither mask form the uncertain region and get 1/d^2 with the
    distance clamped to >= 1.
    """
    if body.shape != background.shape or body.shape != dist.shape:
        raise ValidationError("body, background and distance grids must match")
    if np.logical_and(body, background).any():
        raise ValidationError("body and background masks overlap")
    w = 1.0 / np.maximum(dist, 1.0) ** 2
    w[body] = 1.0
    w[background] = 0.0
    return ThreatIndicator(w, spacing)


def segment_threat_regions(scan: Volume, params: IsolationParams | None = None
                           ) -> ThreatSegmentation:
    """Partition a controlled-condition scan into body / uncertain / background.

    Steps: binarise, keep the largest connected component, dilate it to
    close the boundary, flood-fill the exterior from the corner voxel, then
    dilate the exterior inward.  Surface voxels the inward dilation eats
    drop into the uncertain shell instead of background, and cavities the
    exterior cannot reach without crossing the body count as body.
    """
    p = params or IsolationParams()

    fg = vol.threshold(scan, p.binarize_threshold)
    if not fg.any():
        raise ValidationError("no voxel above the binarise threshold")
    if fg[_CORNER]:
        raise ValidationError("corner voxel is foreground; scan is not controlled-condition")

    body0 = vol.largest_component(vol.connected_components(fg, p.connectivity))

    barrier = vol.dilate(body0, p.body_dilate_radius)
    if barrier[_CORNER]:
        raise ValidationError("dilated threat reaches the corner seed; no background margin")
    exterior = vol.region_grow(barrier, _CORNER)

    outside0 = vol.region_grow(body0, _CORNER)
    enclosed = ~(body0 | outside0)

    eaten = vol.dilate(exterior, p.background_dilate_radius)
    body = (body0 | enclosed) & ~eaten
    if not body.any():
        raise ValidationError("background dilation removed the entire threat body")

    return ThreatSegmentation(body, exterior, ~(body | exterior))


def isolate_threat(scan: Volume, params: IsolationParams | None = None
                   ) -> tuple[Volume, ThreatIndicator]:
    """Segment a threat scan and crop it to the region worth inserting.

    Returns the cropped scan and the matching weight field; the crop covers
    the body plus its uncertain shell so attenuated voxels survive blending.
    """
    seg = segment_threat_regions(scan, params)
    dist = vol.distance_transform(seg.body)
    indicator = build_indicator(seg.body, seg.background, dist, scan.spacing)

    box = vol.bounding_box(seg.body | seg.uncertain)
    threat = vol.crop(scan, box)
    return threat, ThreatIndicator(indicator.w[box.slices()].copy(), scan.spacing)
