"""Scalar loss functions: berHu depth loss, stereo photometric consistency,
depth smoothness, the combined semi-supervised loss, the unsupervised pose
photometric loss and the pose-vector loss.

Masks: a pixel invalid in any participating raster is excluded; means are
over the valid count. Accumulation is plain row-major numpy reduction, so
results are bit-repeatable.
"""

from dataclasses import dataclass

import numpy as np

from . import camera, se3
from .camera import depth_valid_mask
from .errors import InsufficientDataError


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 2.0
    lambda2: float = 1.0
    lambda3: float = float(np.exp(-4.0))

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda3 < 0:
            raise ValueError("loss weights must be nonnegative")


def berhu(pred, gt, valid=None):
    """Reverse Huber loss: L1 below the cutoff c, quadratic above it.

    c = (1/5) * max |pred - gt| over valid pixels; the quadratic branch
    (d^2 + c^2) / (2c) meets the linear branch at |d| = c exactly.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError("depth map shapes differ")
    if valid is None:
        valid = depth_valid_mask(gt)
    if not np.any(valid):
        raise InsufficientDataError("empty validity mask")
    d = np.abs(pred[valid] - gt[valid])
    c = d.max() / 5.0
    if c == 0.0:
        return 0.0
    loss = np.where(d <= c, d, (d * d + c * c) / (2.0 * c))
    return float(loss.mean())


def smoothness(depth):
    """Mean |forward x-gradient| + |forward y-gradient| over the interior."""
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    if h < 2 or w < 2:
        raise ValueError("depth map must be at least 2x2")
    gx = np.abs(depth[:, 1:] - depth[:, :-1])[: h - 1, :]
    gy = np.abs(depth[1:, :] - depth[:-1, :])[:, : w - 1]
    return float(np.mean(gx + gy))


def stereo_transforms(baseline):
    """Left->right and right->left frame transforms for a rectified pair.

    Pure x-translations with identity rotation; the right camera sits at
    +baseline along x, so left-frame points shift by -baseline in the
    right frame.
    """
    t_rl = np.eye(4)
    t_rl[0, 3] = -baseline
    t_lr = np.eye(4)
    t_lr[0, 3] = baseline
    return t_rl, t_lr


def photometric_lr(img_l, img_r, depth_l, depth_r, baseline, K):
    """Left-right photometric consistency: sum of the two directional mean
    absolute intensity differences after depth-based warping."""
    if baseline < 0:
        raise ValueError("baseline must be nonnegative")
    t_rl, t_lr = stereo_transforms(baseline)
    total = 0.0
    for img_a, img_b, depth_a, T in ((img_l, img_r, depth_l, t_rl),
                                     (img_r, img_l, depth_r, t_lr)):
        warped, mask = camera.warp_image(img_b, depth_a, T, K)
        if not np.any(mask):
            raise InsufficientDataError("no jointly valid pixels")
        diff = np.abs(np.asarray(img_a, dtype=float) - warped)
        if diff.ndim == 3:
            diff = diff.mean(axis=-1)
        total += float(diff[mask].mean())
    return total


def combined_semisupervised(pred_l, pred_r, gt_l, gt_r, img_l, img_r,
                            baseline, K, weights=LossWeights()):
    """lambda1*(berHu_L + berHu_R) + lambda2*photometric + lambda3*(smooth_L + smooth_R)."""
    lb = berhu(pred_l, gt_l) + berhu(pred_r, gt_r)
    lc = photometric_lr(img_l, img_r, pred_l, pred_r, baseline, K)
    ls = smoothness(pred_l) + smoothness(pred_r)
    return weights.lambda1 * lb + weights.lambda2 * lc + weights.lambda3 * ls


def pose_photometric(img_1, img_2, depth_1, xi, K):
    """Mean absolute intensity difference between img_1 and img_2 warped by
    exp(xi) through depth_1."""
    T = se3.exp(xi)
    warped, mask = camera.warp_image(img_2, depth_1, T, K)
    if not np.any(mask):
        raise InsufficientDataError("no valid pixels after warping")
    diff = np.abs(np.asarray(img_1, dtype=float) - warped)
    if diff.ndim == 3:
        diff = diff.mean(axis=-1)
    return float(diff[mask].mean())


def pose_loss(xi, T_gt):
    """Euclidean distance between xi and log(T_gt)."""
    xi = np.asarray(xi, dtype=float)
    return float(np.linalg.norm(xi - se3.log(T_gt)))
