"""VTIP volume file I/O.

Layout (little-endian, no padding):

====== ======= ==========================================
offset size    field
====== ======= ==========================================
0      6       magic ``VTIP01``
6      1       dtype code: 0 = u16, 1 = f32, 2 = u8
7      1       reserved, must be 0
8      12      dims, 3 x u32 (nx, ny, nz)
20     12      spacing, 3 x f32 (mm per voxel)
32     4       max_intensity, u32
36     ...     nx*ny*nz voxels, x-fastest
====== ======= ==========================================

Loading a file written by :func:`save_volume` reproduces the payload
bit-exactly.  Writes go to a temporary file that is renamed into place on
success, so a failed write never leaves a partial file behind.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import ValidationError, VolumeFormatError
from .volume import Volume

MAGIC = b"VTIP01"
HEADER_SIZE = 36

DTYPE_U16 = 0
DTYPE_F32 = 1
DTYPE_U8 = 2

_NUMPY_DTYPES = {DTYPE_U16: "<u2", DTYPE_F32: "<f4", DTYPE_U8: "u1"}


def _atomic_write(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack_header(code: int, dims, spacing, max_intensity: int) -> bytes:
    return (
        MAGIC
        + struct.pack("<BB", code, 0)
        + struct.pack("<3I", *dims)
        + struct.pack("<3f", *spacing)
        + struct.pack("<I", int(max_intensity))
    )


def save_array(arr: np.ndarray, path: str, spacing=(1.0, 1.0, 1.0),
               dtype_code: int = DTYPE_F32, max_value: int = 1) -> None:
    """Write a raw 3-D scalar field (f32 or u8 payload)."""
    if dtype_code not in _NUMPY_DTYPES:
        raise ValidationError(f"unknown dtype code {dtype_code}")
    if arr.ndim != 3 or any(d < 1 for d in arr.shape):
        raise ValidationError(f"payload must be 3-D with positive dims, got {arr.shape}")
    data = np.ascontiguousarray(arr.astype(_NUMPY_DTYPES[dtype_code]))
    header = _pack_header(dtype_code, arr.shape, spacing, max_value)
    _atomic_write(path, header + data.ravel(order="F").tobytes())


def save_volume(v: Volume, path: str) -> None:
    """Persist a uint16 volume; re-loadable to an identical Volume."""
    header = _pack_header(DTYPE_U16, v.dims, v.spacing, v.max_intensity)
    payload = np.ascontiguousarray(v.data.astype("<u2")).ravel(order="F").tobytes()
    _atomic_write(path, header + payload)


def load_array(path: str) -> tuple[np.ndarray, tuple, int, int]:
    """Read any VTIP file.

    Returns ``(data, spacing, max_intensity, dtype_code)`` with ``data``
    shaped ``(nx, ny, nz)``.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < HEADER_SIZE:
        raise VolumeFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:6] != MAGIC:
        raise VolumeFormatError(f"{path}: bad magic {blob[:6]!r}")
    code, reserved = struct.unpack_from("<BB", blob, 6)
    if code not in _NUMPY_DTYPES:
        raise VolumeFormatError(f"{path}: unknown dtype code {code}")
    if reserved != 0:
        raise VolumeFormatError(f"{path}: reserved byte is {reserved}, expected 0")
    dims = struct.unpack_from("<3I", blob, 8)
    spacing = struct.unpack_from("<3f", blob, 20)
    (max_intensity,) = struct.unpack_from("<I", blob, 32)
    if any(d < 1 for d in dims):
        raise VolumeFormatError(f"{path}: non-positive dims {dims}")
    if any(s <= 0 or not np.isfinite(s) for s in spacing):
        raise VolumeFormatError(f"{path}: invalid spacing {spacing}")
    dtype = np.dtype(_NUMPY_DTYPES[code])
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    got = len(blob) - HEADER_SIZE
    if got != expected:
        raise VolumeFormatError(f"{path}: payload is {got} bytes, header implies {expected}")
    flat = np.frombuffer(blob, dtype=dtype, offset=HEADER_SIZE)
    data = flat.reshape(dims, order="F").copy()
    return data, spacing, int(max_intensity), code


def load_volume(path: str) -> Volume:
    """Read a u16 VTIP volume."""
    data, spacing, max_intensity, code = load_array(path)
    if code != DTYPE_U16:
        raise VolumeFormatError(f"{path}: expected u16 volume, found dtype code {code}")
    if data.size and int(data.max()) > max_intensity:
        raise VolumeFormatError(
            f"{path}: voxel value {int(data.max())} exceeds header max_intensity {max_intensity}"
        )
    return Volume(data, spacing, max_intensity)


def load_raw_u16(path: str, dims, spacing=(1.0, 1.0, 1.0),
                 max_intensity: int = 4095) -> Volume:
    """Import a headerless little-endian u16 payload (x-fastest order)."""
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValidationError(f"dims must be three positive integers, got {dims}")
    with open(path, "rb") as f:
        blob = f.read()
    expected = dims[0] * dims[1] * dims[2] * 2
    if len(blob) != expected:
        raise VolumeFormatError(f"{path}: payload is {len(blob)} bytes, dims imply {expected}")
    data = np.frombuffer(blob, dtype="<u2").reshape(dims, order="F").copy()
    return Volume(data, spacing, max_intensity)
