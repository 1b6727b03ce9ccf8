"""Confidence-weighted iteratively reweighted Gauss-Newton pose estimation
from a depth map and a dense flow field.

Conventions:
  * estimated flow F+ = (T x)_[u,v] - x_[u,v] on inverse-depth points
    x = (u, v, 1, q), residual r = F+ - F, all in normalised camera
    coordinates (flow rasters are pixel-valued and converted on entry);
  * per-pixel Jacobian of F+ w.r.t. the motion vector at the identity is

        [[ q, 0, -u q, -u v,   u^2+1, -v ],
         [ 0, q, -v q, -v^2-1, u v,    u ]];

  * diagonal robust weight per pixel:
        diag(C_x m^2 / (m^2 + r_x^2), C_y m^2 / (m^2 + r_y^2))
    with m the mean residual magnitude of the image, recomputed each
    iteration;
  * update solves (J^T W J) beta = -J^T W r and applies xi <- xi + beta.
"""

from dataclasses import dataclass, field

import numpy as np

from . import infomat
from .camera import depth_valid_mask
from .errors import DegenerateGeometryError, InsufficientDataError

# Inverse depths outside this band destabilise the Jacobian and are masked.
Q_MIN = 1e-4
Q_MAX = 1e4

CONDITION_LIMIT = 1e12


@dataclass
class FlowField:
    """Dense flow plus raw information parameters.

    flow: (H, W, 2) in pixel units; info: (H, W, 3) raw (a_hat, b_hat,
    g_hat); valid: (H, W) bool.
    """
    flow: np.ndarray
    info: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        self.flow = np.asarray(self.flow, dtype=float)
        self.info = np.asarray(self.info, dtype=float)
        if self.flow.shape[:2] != self.info.shape[:2]:
            raise ValueError("flow and info shapes differ")
        finite = np.all(np.isfinite(self.flow), axis=-1) \
            & np.all(np.isfinite(self.info), axis=-1)
        if self.valid is None:
            self.valid = finite
        else:
            self.valid = np.asarray(self.valid, dtype=bool) & finite


@dataclass
class SolverConfig:
    max_iterations: int = 20
    convergence_tol: float = 1e-9
    min_valid_pixels: int = 64
    use_confidence: bool = True
    single_iteration: bool = False
    damping: float = 0.0
    full_block_weight: bool = False
    seed_xi: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        self.seed_xi = np.asarray(self.seed_xi, dtype=float)


@dataclass
class ResidualReport:
    residuals: np.ndarray       # (H, W, 2), normalised units; 0 where invalid
    m: float                    # mean residual magnitude over valid pixels
    weighted_cost: float
    valid: np.ndarray           # (H, W) bool
    valid_count: int
    # flattened per-valid-pixel quantities used by the normal equations
    points: np.ndarray = None   # (N, 3) of (u, v, q)
    r: np.ndarray = None        # (N, 2)


@dataclass
class SolveResult:
    xi: np.ndarray
    iterations: int
    converged: bool
    final_cost: float
    per_iteration_costs: list


def _valid_geometry(depth, flow_field):
    depth = np.asarray(depth, dtype=float)
    mask = depth_valid_mask(depth) & flow_field.valid
    q = np.zeros_like(depth)
    np.divide(1.0, depth, out=q, where=mask)
    mask &= (q >= Q_MIN) & (q <= Q_MAX)
    return mask, q


def compute_residuals(depth, flow_field, xi, K, min_valid_pixels=64):
    """Residual flow r = F+ - F in normalised camera coordinates.

    F+ is the flow induced by exp(xi) on the inverse-depth points of the
    depth map; F is the measured flow converted from pixel units.
    """
    from . import se3

    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape
    mask, q = _valid_geometry(depth, flow_field)

    xs, ys = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    u = (xs - K.cx) / K.fx
    v = (ys - K.cy) / K.fy

    T = se3.exp(xi)
    # T acting on (u, v, 1, q): rows 0..2 give R (u,v,1)^T + t q
    pts = np.stack([u, v, np.ones_like(u), q], axis=-1)
    y = pts @ T[:3].T                       # (H, W, 3)
    z = y[..., 2]
    cheir = z > 1e-12
    mask = mask & cheir
    zsafe = np.where(cheir, z, 1.0)
    est_flow = np.stack([y[..., 0] / zsafe - u,
                         y[..., 1] / zsafe - v], axis=-1)

    meas = flow_field.flow / np.array([K.fx, K.fy])
    r = est_flow - meas
    r = np.where(mask[..., None], r, 0.0)

    valid_count = int(mask.sum())
    if valid_count < min_valid_pixels:
        raise InsufficientDataError(
            f"{valid_count} valid pixels < required {min_valid_pixels}")

    norms = np.linalg.norm(r[mask], axis=-1)
    m = float(norms.mean()) if valid_count else 0.0
    report = ResidualReport(
        residuals=r, m=m, weighted_cost=float((norms ** 2).sum()),
        valid=mask, valid_count=valid_count,
        points=np.stack([u[mask], v[mask], q[mask]], axis=-1),
        r=r[mask])
    return report


def jacobian_row(u, v, q):
    """2x6 Jacobian of the estimated flow w.r.t. the motion vector at the
    identity, for an inverse-depth point (u, v, 1, q)."""
    return np.array([
        [q, 0.0, -u * q, -u * v, u * u + 1.0, -v],
        [0.0, q, -v * q, -v * v - 1.0, u * v, u],
    ])


def _jacobians(points):
    """Stacked (N, 2, 6) Jacobians for (N, 3) points of (u, v, q)."""
    u, v, q = points[:, 0], points[:, 1], points[:, 2]
    zero = np.zeros_like(u)
    one = np.ones_like(u)
    row0 = np.stack([q, zero, -u * q, -u * v, u * u + one, -v], axis=-1)
    row1 = np.stack([zero, q, -v * q, -v * v - one, u * v, u], axis=-1)
    return np.stack([row0, row1], axis=1)


def build_weight(c_x, c_y, rx, ry, m):
    """Diagonal entries of the per-pixel robust weight matrix.

    When m = 0 (all residuals exactly zero) the weights collapse to the
    confidences.
    """
    c_x = np.asarray(c_x, dtype=float)
    c_y = np.asarray(c_y, dtype=float)
    rx = np.asarray(rx, dtype=float)
    ry = np.asarray(ry, dtype=float)
    if m == 0.0:
        wx, _ = np.broadcast_arrays(c_x, rx)
        wy, _ = np.broadcast_arrays(c_y, ry)
        return wx.copy(), wy.copy()
    m2 = m * m
    return c_x * m2 / (m2 + rx * rx), c_y * m2 / (m2 + ry * ry)


def _pixel_confidences(flow_field, mask, config):
    if not config.use_confidence:
        n = int(mask.sum())
        return np.ones(n), np.ones(n)
    c_x, c_y = infomat.confidences(flow_field.info)
    return c_x[mask], c_y[mask]


def gauss_newton_step(depth, flow_field, xi, K, config):
    """One weighted Gauss-Newton update.

    Returns (beta, report); the caller applies xi <- xi + beta.
    """
    report = compute_residuals(depth, flow_field, xi, K,
                               config.min_valid_pixels)
    J = _jacobians(report.points)          # (N, 2, 6)
    r = report.r                           # (N, 2)
    c_x, c_y = _pixel_confidences(flow_field, report.valid, config)
    wx, wy = build_weight(c_x, c_y, r[:, 0], r[:, 1], report.m)
    w = np.stack([wx, wy], axis=-1)        # (N, 2)

    Jw = J * w[:, :, None]
    A = np.einsum('nij,nik->jk', Jw, J)
    b = np.einsum('nij,ni->j', Jw, r)
    if config.damping > 0:
        A = A + config.damping * np.eye(6)

    eigs = np.linalg.eigvalsh(A)
    if eigs[0] <= 0 or eigs[-1] / eigs[0] > CONDITION_LIMIT:
        raise DegenerateGeometryError(
            "normal equations singular or ill-conditioned")
    beta = np.linalg.solve(A, -b)

    report.weighted_cost = float(np.sum(w * r * r))
    return beta, report


def solve(depth, flow_field, K, config=None):
    """Iterate gauss_newton_step until the update norm drops below the
    convergence tolerance or the iteration budget is exhausted.

    Residuals, m and the weights are recomputed every iteration (true
    IRLS). With single_iteration set, stops after one step.
    """
    if config is None:
        config = SolverConfig()
    xi = np.array(config.seed_xi, dtype=float)
    costs = []
    converged = False
    iterations = 0
    final_cost = float('nan')
    max_iter = 1 if config.single_iteration else config.max_iterations
    for _ in range(max_iter):
        beta, report = gauss_newton_step(depth, flow_field, xi, K, config)
        xi = xi + beta
        iterations += 1
        costs.append(report.weighted_cost)
        final_cost = report.weighted_cost
        if np.linalg.norm(beta) < config.convergence_tol:
            converged = True
            break
    return SolveResult(xi=xi, iterations=iterations, converged=converged,
                       final_cost=final_cost, per_iteration_costs=costs)
