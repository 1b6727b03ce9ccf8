"""ENGR raster file format and the intrinsics text file.

ENGR layout: magic b"ENGR", then little-endian u32 version (=1), width,
height, channels, followed by float32 data in row-major order with
channels interleaved.
"""

import struct

import numpy as np

from .camera import Intrinsics
from .errors import RasterFormatError

MAGIC = b"ENGR"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def write_raster(path, data):
    """Write a (H, W) or (H, W, C) float array as an ENGR raster."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim != 3:
        raise ValueError("raster must be 2-D or 3-D")
    h, w, c = data.shape
    with open(path, 'wb') as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, w, h, c))
        fh.write(np.ascontiguousarray(data).astype('<f4').tobytes())


def read_raster(path):
    """Read an ENGR raster as a float64 array of shape (H, W, C); a
    single-channel raster is returned as (H, W)."""
    with open(path, 'rb') as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise RasterFormatError(f"{path}: truncated header")
        magic, version, w, h, c = _HEADER.unpack(header)
        if magic != MAGIC:
            raise RasterFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise RasterFormatError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = w * h * c * 4
    if len(payload) != expected:
        raise RasterFormatError(
            f"{path}: expected {expected} data bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype='<f4').reshape(h, w, c).astype(float)
    if c == 1:
        return data[:, :, 0]
    return data


def write_intrinsics(path, K):
    """Write intrinsics as a single line: fx fy cx cy width height."""
    with open(path, 'w') as fh:
        fh.write("%.17g %.17g %.17g %.17g %d %d\n"
                 % (K.fx, K.fy, K.cx, K.cy, K.width, K.height))


def read_intrinsics(path):
    with open(path, 'r') as fh:
        text = fh.read()
    parts = text.split()
    if len(parts) != 6:
        raise RasterFormatError(
            f"{path}: expected 6 intrinsics fields, got {len(parts)}")
    try:
        fx, fy, cx, cy = (float(p) for p in parts[:4])
        width, height = int(parts[4]), int(parts[5])
    except ValueError as exc:
        raise RasterFormatError(f"{path}: {exc}") from exc
    return Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height)
