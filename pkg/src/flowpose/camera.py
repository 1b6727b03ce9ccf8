"""Pinhole camera model, bilinear sampling, warping and pose-induced flow.

Raster convention: arrays are (height, width[, channels]) with pixel (x, y)
addressed as data[y, x]. Pixel centres sit at integer coordinates.

Flow rasters are stored in pixel units; the solver converts to normalised
camera coordinates by dividing by (fx, fy). flow_from_pose returns
normalised flow, with a pixel-unit variant alongside.
"""

from dataclasses import dataclass

import numpy as np

from . import se3
from .errors import CheiralityError

CHEIRALITY_EPS = 1e-12


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width) or not (0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the raster")

    def matrix(self):
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


def project(x):
    """Perspective division: 3-vector camera point -> normalised 2-vector."""
    x = np.asarray(x, dtype=float)
    if x[2] <= CHEIRALITY_EPS:
        raise CheiralityError("point not in front of the camera")
    return x[:2] / x[2]


def backproject(depth, u, K):
    """Lift pixel u with metric depth into the camera frame: D * K^-1 * (u, 1)."""
    if not (np.isfinite(depth) and depth > 0):
        raise ValueError("depth must be positive and finite")
    ux, uy = u
    return depth * np.array([(ux - K.cx) / K.fx, (uy - K.cy) / K.fy, 1.0])


def pixel_to_normalised(u, K):
    u = np.asarray(u, dtype=float)
    return np.stack([(u[..., 0] - K.cx) / K.fx,
                     (u[..., 1] - K.cy) / K.fy], axis=-1)


def normalised_to_pixel(n, K):
    n = np.asarray(n, dtype=float)
    return np.stack([n[..., 0] * K.fx + K.cx,
                     n[..., 1] * K.fy + K.cy], axis=-1)


def depth_valid_mask(depth):
    """Valid where depth is finite and strictly positive."""
    depth = np.asarray(depth)
    return np.isfinite(depth) & (depth > 0)


def _pixel_grid(width, height):
    xs, ys = np.meshgrid(np.arange(width, dtype=float),
                         np.arange(height, dtype=float))
    return xs, ys


def bilinear_sample(img, px, py):
    """Sample img at continuous pixel coordinates with 4-neighbour bilinear
    interpolation.

    Returns (values, valid) where valid is False for out-of-bounds queries.
    Accepts scalars or arrays; values get a trailing channel axis when the
    image has one.
    """
    img = np.asarray(img, dtype=float)
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    h, w = img.shape[:2]
    valid = (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    pxc = np.clip(px, 0, w - 1)
    pyc = np.clip(py, 0, h - 1)
    x0 = np.clip(np.floor(pxc).astype(int), 0, w - 2) if w > 1 else np.zeros_like(pxc, int)
    y0 = np.clip(np.floor(pyc).astype(int), 0, h - 2) if h > 1 else np.zeros_like(pyc, int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = pxc - x0
    ay = pyc - y0
    if img.ndim == 3:
        ax = ax[..., None]
        ay = ay[..., None]
    out = ((1 - ax) * (1 - ay) * img[y0, x0]
           + ax * (1 - ay) * img[y0, x1]
           + (1 - ax) * ay * img[y1, x0]
           + ax * ay * img[y1, x1])
    return out, valid


def _transform_grid(depth, T, K):
    """Transform every valid pixel's camera point by T.

    Returns (points (H,W,3) in the target frame, source validity mask).
    """
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    xs, ys = _pixel_grid(w, h)
    valid = depth_valid_mask(depth)
    d = np.where(valid, depth, 1.0)
    X = np.stack([d * (xs - K.cx) / K.fx,
                  d * (ys - K.cy) / K.fy,
                  d], axis=-1)
    R = T[:3, :3]
    t = T[:3, 3]
    Y = X @ R.T + t
    return Y, valid


def warp_image(src, depth, T, K):
    """Warp src into the depth map's frame: backproject, transform, project,
    sample bilinearly.

    Returns (warped image, validity mask). Pixels failing cheirality or
    sampling out of bounds are invalid; invalid pixels hold 0.
    """
    Y, valid = _transform_grid(depth, T, K)
    z = Y[..., 2]
    cheir = z > CHEIRALITY_EPS
    zsafe = np.where(cheir, z, 1.0)
    px = Y[..., 0] / zsafe * K.fx + K.cx
    py = Y[..., 1] / zsafe * K.fy + K.cy
    values, in_bounds = bilinear_sample(src, px, py)
    mask = valid & cheir & in_bounds
    if values.ndim == 3:
        values = np.where(mask[..., None], values, 0.0)
    else:
        values = np.where(mask, values, 0.0)
    return values, mask


def flow_from_pose(depth, T, K):
    """Pose-induced dense flow in normalised camera coordinates.

    Returns (flow (H,W,2), validity mask). flow = project(T * backproject)
    minus the original normalised coordinate; invalid pixels hold 0.
    """
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    xs, ys = _pixel_grid(w, h)
    Y, valid = _transform_grid(depth, T, K)
    z = Y[..., 2]
    cheir = z > CHEIRALITY_EPS
    zsafe = np.where(cheir, z, 1.0)
    u0 = (xs - K.cx) / K.fx
    v0 = (ys - K.cy) / K.fy
    flow = np.stack([Y[..., 0] / zsafe - u0,
                     Y[..., 1] / zsafe - v0], axis=-1)
    mask = valid & cheir
    flow = np.where(mask[..., None], flow, 0.0)
    return flow, mask


def flow_normalised_to_pixels(flow, K):
    """Scale a normalised-coordinate flow field to pixel units."""
    return flow * np.array([K.fx, K.fy])


def flow_pixels_to_normalised(flow, K):
    """Scale a pixel-unit flow field to normalised camera coordinates."""
    return flow / np.array([K.fx, K.fy])
