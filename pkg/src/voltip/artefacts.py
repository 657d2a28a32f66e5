"""Metal artefact synthesis via per-slice sinogram corruption.

Real scanners produce streaks radiating from dense metal because rays
through it arrive photon-starved.  To mimic that, each slice of the bag is
mapped to the Radon domain, every detector bin whose ray crosses metal
(bag metal or the placed threat's metal) is pushed toward the local
sinogram maximum, and the slice is rebuilt with filtered back-projection:

    s' = (1 - q) * s + q * s_max        on marked bins only

with corruption strength q in [0, 1].  Slices without any metal skip the
reconstruction entirely by default so they stay bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.fft import fft, ifft, fftfreq

from .errors import ValidationError
from .insertion import Pose, _fit_slices, blend
from .isolation import ThreatIndicator
from .volume import Volume, rotate_array

_FILTERS = ("ram-lak", "shepp-logan")
_AXES = {"x": 0, "y": 1, "z": 2}

# a sinogram bin is a metal trace iff its metal-only line integral is
# strictly positive (above float noise)
TRACE_EPS = 1e-6


@dataclass
class Sinogram:
    """Line integrals: one row per projection angle over [0, pi)."""

    values: np.ndarray

    @property
    def n_angles(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


@dataclass
class MagParams:
    metal_threshold: float = 3000.0
    q: float = 0.2
    n_angles: int = 180
    recon_filter: str = "ram-lak"
    slice_axis: str = "z"
    bypass_metal_free: bool = True

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError("q must lie in [0, 1]")
        if self.n_angles < 1:
            raise ValidationError("n_angles must be >= 1")
        if self.recon_filter not in _FILTERS:
            raise ValidationError(f"recon_filter must be one of {_FILTERS}")
        if self.slice_axis not in _AXES:
            raise ValidationError("slice_axis must be 'x', 'y' or 'z'")


def _pad_square(slice2d: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Centre a rectangular slice in a square; returns (square, off0, off1)."""
    h, w = slice2d.shape
    side = max(h, w)
    if h == w:
        return slice2d, 0, 0
    sq = np.zeros((side, side), dtype=np.float64)
    o0, o1 = (side - h) // 2, (side - w) // 2
    sq[o0:o0 + h, o1:o1 + w] = slice2d
    return sq, o0, o1


def radon(slice2d: np.ndarray, n_angles: int) -> Sinogram:
    """Line integrals of a slice at angles a*pi/n_angles, a = 0..n_angles-1.

    The slice is centre-padded to a square of side L; the detector has
    ceil(sqrt(2)*L) bins so the whole support is always covered.  Samples
    along each ray are bilinear at unit arc steps.
    """
    if n_angles < 1:
        raise ValidationError("n_angles must be >= 1")
    sq, _, _ = _pad_square(np.asarray(slice2d, dtype=np.float64))
    side = sq.shape[0]
    n_bins = math.ceil(math.sqrt(2.0) * side)
    centre = (side - 1) / 2.0
    t = np.arange(n_bins) - (n_bins - 1) / 2.0   # detector coordinate
    s = np.arange(n_bins) - (n_bins - 1) / 2.0   # arc length along the ray
    out = np.empty((n_angles, n_bins), dtype=np.float64)
    for a in range(n_angles):
        theta = a * math.pi / n_angles
        ct, st = math.cos(theta), math.sin(theta)
        # detector axis (-sin, cos), ray direction (cos, sin)
        u = centre + t[:, None] * (-st) + s[None, :] * ct
        v = centre + t[:, None] * ct + s[None, :] * st
        vals = ndimage.map_coordinates(sq, [u.ravel(), v.ravel()], order=1,
                                       mode="constant", cval=0.0, prefilter=False)
        out[a] = vals.reshape(n_bins, n_bins).sum(axis=1)
    return Sinogram(out)


def _ramp_kernel(m: int) -> np.ndarray:
    """Real-space ram-lak kernel in FFT wrap layout (avoids DC bias)."""
    n = np.concatenate((np.arange(0, m // 2 + 1), np.arange(m // 2 - 1, 0, -1)))
    h = np.zeros(m)
    h[0] = 0.25
    odd = n % 2 == 1
    h[odd] = -1.0 / (np.pi * n[odd]) ** 2
    return h


def iradon(sg: Sinogram, side: int, recon_filter: str = "ram-lak") -> np.ndarray:
    """Filtered back-projection onto a side x side grid, clamped at >= 0."""
    if recon_filter not in _FILTERS:
        raise ValidationError(f"recon_filter must be one of {_FILTERS}")
    if side < 1:
        raise ValidationError("side must be >= 1")
    n_angles, n_bins = sg.values.shape
    m = max(64, 2 ** math.ceil(math.log2(2 * n_bins)))
    response = 2.0 * np.real(fft(_ramp_kernel(m)))
    if recon_filter == "shepp-logan":
        omega = np.pi * fftfreq(m)[1:]
        response[1:] *= np.sin(omega) / omega
    padded = np.zeros((n_angles, m))
    padded[:, :n_bins] = sg.values
    filtered = np.real(ifft(fft(padded, axis=1) * response[None, :], axis=1))[:, :n_bins]

    centre = (side - 1) / 2.0
    ys, xs = np.meshgrid(np.arange(side) - centre, np.arange(side) - centre, indexing="ij")
    t_centre = (n_bins - 1) / 2.0
    bins = np.arange(n_bins, dtype=np.float64)
    recon = np.zeros((side, side))
    for a in range(n_angles):
        theta = a * math.pi / n_angles
        tpos = ys * (-math.sin(theta)) + xs * math.cos(theta) + t_centre
        recon += np.interp(tpos.ravel(), bins, filtered[a], left=0.0, right=0.0
                           ).reshape(side, side)
    recon *= math.pi / (2.0 * n_angles)
    return np.maximum(recon, 0.0)


def segment_metal(v: Volume, metal_threshold: float) -> np.ndarray:
    """Mask of voxels strictly above the metal intensity threshold."""
    return v.data > metal_threshold


def corrupt_sinogram(sg: Sinogram, mask: np.ndarray, q: float) -> Sinogram:
    """Blend marked bins toward the marked-region maximum; others untouched."""
    if mask.shape != sg.values.shape:
        raise ValidationError(f"mask shape {mask.shape} != sinogram shape {sg.values.shape}")
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must lie in [0, 1]")
    out = sg.values.copy()
    if q == 0.0 or not mask.any():
        return Sinogram(out)
    s_max = float(out[mask].max())
    out[mask] = (1.0 - q) * out[mask] + q * s_max
    return Sinogram(out)


def _placed_threat_field(threat: Volume, ind: ThreatIndicator, pose: Pose,
                         bag_dims) -> np.ndarray:
    """Weighted, rotated threat intensities on the bag grid (float, no clamp)."""
    weighted = threat.data.astype(np.float64) * ind.w
    rotated = np.maximum(rotate_array(weighted, pose.angles, "linear"), 0.0)
    slices = _fit_slices(pose.origin, rotated.shape, bag_dims)
    if slices is None:
        raise ValidationError(f"pose {pose} does not fit inside bag dims {bag_dims}")
    field = np.zeros(bag_dims, dtype=np.float64)
    field[slices] += rotated
    return field


def generate_artefacts(bag: Volume, threat: Volume, ind: ThreatIndicator,
                       pose: Pose, params: MagParams | None = None) -> Volume:
    """Build the final TIP volume with synthetic metal streaks.

    Per slice: project the bag and the combined metal-only content (bag
    metal plus placed threat metal) to sinograms, corrupt the bag sinogram
    on the metal trace, reconstruct, and finally blend the artefact-free
    threat over the artefacted bag.
    """
    p = params or MagParams()
    axis = _AXES[p.slice_axis]

    placed = _placed_threat_field(threat, ind, pose, bag.dims)
    bag_f = bag.data.astype(np.float64)
    metal = np.where(bag_f > p.metal_threshold, bag_f, 0.0)
    metal += np.where(placed > p.metal_threshold, placed, 0.0)

    out = bag.data.copy()
    for k in range(bag.dims[axis]):
        index = [slice(None)] * 3
        index[axis] = k
        index = tuple(index)
        metal_slice = metal[index]
        has_metal = bool(metal_slice.max() > 0.0)
        if p.bypass_metal_free and not has_metal:
            continue

        bag_slice = bag_f[index]
        sq, o0, o1 = _pad_square(bag_slice)
        s_bag = radon(sq, p.n_angles)
        if has_metal:
            metal_sq, _, _ = _pad_square(metal_slice)
            trace = radon(metal_sq, p.n_angles).values > TRACE_EPS
        else:
            trace = np.zeros_like(s_bag.values, dtype=bool)
        corrupted = corrupt_sinogram(s_bag, trace, p.q)
        recon = iradon(corrupted, sq.shape[0], p.recon_filter)
        h, w = bag_slice.shape
        recon = recon[o0:o0 + h, o1:o1 + w]
        out[index] = np.clip(np.rint(recon), 0, bag.max_intensity).astype(np.uint16)

    artefacted = Volume(out, bag.spacing, bag.max_intensity)
    return blend(threat, ind, artefacted, pose)
