"""
Trajectory chaining and TUM-style evaluation
============================================

Chains per-frame motion estimates into a world trajectory, writes both
it and a ground truth to TUM text files, and scores ATE and RPE after
scaled rigid alignment.
"""

import tempfile
from pathlib import Path

import numpy as np

from flowpose import se3, trajectory

rng = np.random.default_rng(3)

# ground truth: a smooth random walk of 60 poses at 10 Hz
timestamps = np.arange(60) * 0.1
poses = []
current = np.eye(4)
for _ in range(60):
    current = current @ se3.exp(rng.uniform(-0.04, 0.04, 6))
    poses.append(current)
gt = trajectory.Trajectory(timestamps, np.array(poses))

# per-frame estimates: the true relative motions plus a little noise
rels = []
for k in range(1, len(gt)):
    rel = se3.inverse(se3.inverse(gt.poses[k - 1]) @ gt.poses[k])
    xi = se3.log(rel) + rng.normal(0, 2e-3, 6)
    rels.append((float(timestamps[k]), xi))
est = trajectory.chain(rels)

with tempfile.TemporaryDirectory() as tmp:
    est_path = Path(tmp) / "est.txt"
    gt_path = Path(tmp) / "gt.txt"
    trajectory.write_tum(est, est_path)
    trajectory.write_tum(gt, gt_path)
    report = trajectory.evaluate(trajectory.read_tum(est_path),
                                 trajectory.read_tum(gt_path))

print("matched poses:", report.matched_count)
print("ATE RMSE (m):       ", report.ate_rmse)
print("RPE trans RMSE (m): ", report.rpe_trans)
print("RPE rot RMSE (deg): ", report.rpe_rot_deg)
print("median per-pose scale:", float(np.median(report.per_pose_scales)))
