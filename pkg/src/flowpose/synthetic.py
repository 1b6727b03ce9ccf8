"""Deterministic synthetic-scene generation: ground-truth depth, exact
pose-induced flow, analytic image pairs, and optional noise/outliers.

All randomness comes from a counter-based SplitMix64-style stream, so a
given SceneSpec renders bitwise identically across runs and platforms.
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import camera, rasters, se3
from .camera import Intrinsics
from .solver import FlowField

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


_MASK64 = (1 << 64) - 1


def _mix64(x):
    """SplitMix64 finaliser over a uint64 array."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _stream_base(seed, tag):
    """Substream seed as a uint64 scalar, computed in exact Python ints."""
    return np.uint64((seed + 0x9E3779B97F4A7C15 * tag) & _MASK64)


def stream_uniform(seed, tag, count):
    """count floats in [0, 1) from substream `tag` of `seed`."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = _mix64(_stream_base(seed, tag) + idx * _GOLDEN)
    return (z >> np.uint64(11)).astype(float) * (2.0 ** -53)


def stream_normal(seed, tag, count):
    """count standard-normal samples via Box-Muller."""
    u1 = stream_uniform(seed, tag * 2 + 101, count)
    u2 = stream_uniform(seed, tag * 2 + 102, count)
    r = np.sqrt(-2.0 * np.log(1.0 - u1))
    return r * np.cos(2.0 * np.pi * u2)


# --- depth and texture models ---------------------------------------------

@dataclass(frozen=True)
class ConstantDepth:
    value: float

    def __call__(self, a, b):
        return np.full_like(np.asarray(a, dtype=float), self.value)


@dataclass(frozen=True)
class PlaneDepth:
    """Plane n . X = offset in the first camera frame; depth along the ray
    through normalised coordinates (a, b) is offset / (n . (a, b, 1))."""
    normal: tuple
    offset: float

    def __call__(self, a, b):
        n = np.asarray(self.normal, dtype=float)
        denom = n[0] * a + n[1] * b + n[2]
        return self.offset / denom


@dataclass(frozen=True)
class SmoothRandomDepth:
    seed: int
    amplitude: float
    base: float = 2.0

    def __call__(self, a, b):
        c = stream_uniform(self.seed, 7, 5) * 2.0 - 1.0
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        bump = (c[0] * a + c[1] * b + c[2] * a * b
                + c[3] * a * a + c[4] * b * b)
        return self.base + self.amplitude * bump


@dataclass(frozen=True)
class CheckerTexture:
    period: float = 8.0

    def intensity(self, a, b, K):
        px = a * K.fx + K.cx
        py = b * K.fy + K.cy
        cell = np.floor(px / self.period) + np.floor(py / self.period)
        return np.where(np.mod(cell, 2.0) == 0.0, 0.25, 0.75)


@dataclass(frozen=True)
class SmoothRandomTexture:
    """Low-order polynomial in normalised scene coordinates; curvature kept
    small so bilinear resampling stays accurate."""
    seed: int

    def intensity(self, a, b, K):
        c = stream_uniform(self.seed, 11, 5) * 2.0 - 1.0
        val = (0.5 + 0.25 * (c[0] * a + c[1] * b)
               + 0.02 * (c[2] * a * b + c[3] * a * a + c[4] * b * b))
        return np.clip(val, 0.0, 1.0)


def default_intrinsics(width, height):
    return Intrinsics(fx=100.0, fy=100.0, cx=width / 2.0, cy=height / 2.0,
                      width=width, height=height)


@dataclass
class SceneSpec:
    width: int
    height: int
    motion: np.ndarray
    intrinsics: Intrinsics = None
    depth_model: object = ConstantDepth(2.0)
    texture_model: object = SmoothRandomTexture(seed=1)
    outlier_fraction: float = 0.0
    outlier_magnitude: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.motion = np.asarray(self.motion, dtype=float)
        if self.intrinsics is None:
            self.intrinsics = default_intrinsics(self.width, self.height)
        if not (0.0 <= self.outlier_fraction < 1.0):
            raise ValueError("outlier_fraction must be in [0, 1)")


@dataclass
class SceneRender:
    depth: np.ndarray
    flow_field: FlowField
    image_1: np.ndarray
    image_2: np.ndarray
    transform: np.ndarray
    xi: np.ndarray
    outlier_mask: np.ndarray


def _second_view_scene_coords(spec, T):
    """Camera-1 normalised coordinates of the surface point seen by every
    pixel of the second camera.

    Solves lambda * ray2 = T X1 with X1 on the depth surface; closed form
    for constant/plane depths, fixed-point iteration otherwise.
    Returns (a1, b1, valid).
    """
    K = spec.intrinsics
    xs, ys = np.meshgrid(np.arange(spec.width, dtype=float),
                         np.arange(spec.height, dtype=float))
    r2 = np.stack([(xs - K.cx) / K.fx, (ys - K.cy) / K.fy,
                   np.ones_like(xs)], axis=-1)
    R = T[:3, :3]
    t = T[:3, 3]
    ray1 = r2 @ R                       # R^T r2
    t1 = R.T @ t

    model = spec.depth_model
    if isinstance(model, ConstantDepth):
        lam = (model.value + t1[2]) / ray1[..., 2]
    elif isinstance(model, PlaneDepth):
        n = np.asarray(model.normal, dtype=float)
        lam = (model.offset + n @ t1) / (ray1 @ n)
    else:
        # X1 = lam * ray1 - t1; iterate lam so X1_z matches the depth model
        # evaluated at the projected coordinates.
        a0 = (xs - K.cx) / K.fx
        b0 = (ys - K.cy) / K.fy
        lam = np.asarray(model(a0, b0), dtype=float)
        for _ in range(50):
            X1 = lam[..., None] * ray1 - t1
            z = np.where(X1[..., 2] > 1e-12, X1[..., 2], 1.0)
            a = X1[..., 0] / z
            b = X1[..., 1] / z
            lam = (np.asarray(model(a, b), dtype=float) + t1[2]) / ray1[..., 2]
    X1 = lam[..., None] * ray1 - t1
    z = X1[..., 2]
    valid = (lam > 0) & (z > 1e-12)
    zsafe = np.where(valid, z, 1.0)
    return X1[..., 0] / zsafe, X1[..., 1] / zsafe, valid


def render(spec):
    """Render a scene: depth, flow field with information parameters,
    an analytic image pair and the ground-truth transform."""
    K = spec.intrinsics
    xs, ys = np.meshgrid(np.arange(spec.width, dtype=float),
                         np.arange(spec.height, dtype=float))
    a = (xs - K.cx) / K.fx
    b = (ys - K.cy) / K.fy

    depth = np.asarray(spec.depth_model(a, b), dtype=float)
    if np.any(~np.isfinite(depth)) or np.any(depth <= 0):
        raise ValueError("depth model produced nonpositive depth")

    T = se3.exp(spec.motion)
    norm_flow, valid = camera.flow_from_pose(depth, T, K)
    flow_px = camera.flow_normalised_to_pixels(norm_flow, K)

    image_1 = np.asarray(spec.texture_model.intensity(a, b, K), dtype=float)
    a2, b2, valid2 = _second_view_scene_coords(spec, T)
    image_2 = np.asarray(spec.texture_model.intensity(a2, b2, K), dtype=float)
    image_2 = np.where(valid2, image_2, 0.0)

    info = np.zeros((spec.height, spec.width, 3))
    if spec.noise_sigma > 0:
        n = spec.height * spec.width
        noise = np.stack([
            stream_normal(spec.seed, 21, n).reshape(spec.height, spec.width),
            stream_normal(spec.seed, 22, n).reshape(spec.height, spec.width),
        ], axis=-1) * spec.noise_sigma
        flow_px = flow_px + noise
        conf = -2.0 * np.log(spec.noise_sigma)
        info[..., 0] = conf
        info[..., 2] = conf

    outlier_mask = np.zeros((spec.height, spec.width), dtype=bool)
    n_outliers = int(round(spec.outlier_fraction * int(valid.sum())))
    if n_outliers > 0:
        flat_valid = np.flatnonzero(valid.ravel())
        ranks = _mix64(_stream_base(spec.seed, 31)
                       + (flat_valid.astype(np.uint64) + np.uint64(1)) * _GOLDEN)
        chosen = flat_valid[np.argsort(ranks, kind='stable')[:n_outliers]]
        outlier_mask.ravel()[chosen] = True
        signs = np.where(
            stream_uniform(spec.seed, 33, 2 * n_outliers) < 0.5, -1.0, 1.0
        ).reshape(n_outliers, 2)
        flow_flat = flow_px.reshape(-1, 2)
        flow_flat[chosen] = flow_flat[chosen] + signs * spec.outlier_magnitude
        flow_px = flow_flat.reshape(spec.height, spec.width, 2)
        info_flat = info.reshape(-1, 3)
        info_flat[chosen] = (-6.0, 0.0, -6.0)
        info = info_flat.reshape(spec.height, spec.width, 3)

    flow_field = FlowField(flow=flow_px, info=info, valid=valid)
    return SceneRender(depth=depth, flow_field=flow_field,
                       image_1=image_1, image_2=image_2,
                       transform=T, xi=spec.motion.copy(),
                       outlier_mask=outlier_mask)


# --- scene directories ----------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, 'rb') as fh:
        for block in iter(lambda: fh.read(65536), b''):
            h.update(block)
    return h.hexdigest()


def write_scene(spec, directory):
    """Write a rendered scene to `directory` and return the manifest path.

    Artifacts: depth raster, 5-channel flow+info raster, 2-channel image
    pair raster, intrinsics file, ground-truth motion file, plus a
    manifest of `filename sha256` lines. Byte-identical across runs for
    the same spec.
    """
    os.makedirs(directory, exist_ok=True)
    scene = render(spec)
    K = spec.intrinsics

    artifacts = []

    def emit(name, writer):
        path = os.path.join(directory, name)
        writer(path)
        artifacts.append(name)

    emit("depth.engr", lambda p: rasters.write_raster(p, scene.depth))
    flow5 = np.concatenate([scene.flow_field.flow, scene.flow_field.info],
                           axis=-1)
    emit("flow.engr", lambda p: rasters.write_raster(p, flow5))
    pair = np.stack([scene.image_1, scene.image_2], axis=-1)
    emit("images.engr", lambda p: rasters.write_raster(p, pair))
    emit("intrinsics.txt", lambda p: rasters.write_intrinsics(p, K))

    def write_xi(path):
        with open(path, 'w') as fh:
            fh.write(" ".join("%.17g" % x for x in scene.xi) + "\n")
    emit("pose_gt.txt", write_xi)

    manifest_path = os.path.join(directory, "manifest.txt")
    with open(manifest_path, 'w') as fh:
        for name in artifacts:
            fh.write("%s %s\n" % (name, _sha256(os.path.join(directory, name))))
    return manifest_path
