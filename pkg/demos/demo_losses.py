"""
Training losses on synthetic imagery
====================================

Evaluates the berHu depth loss, the edge smoothness prior, the Gaussian
flow negative log-likelihood, and the photometric warping losses on a
rendered scene where the ground truth is known exactly.
"""

import numpy as np

from flowpose import infomat, losses, synthetic

spec = synthetic.SceneSpec(
    width=96, height=72,
    motion=[0.02, -0.01, 0.015, 0.003, -0.005, 0.008],
    depth_model=synthetic.PlaneDepth(normal=(0.05, 0.02, 1.0), offset=2.0),
    texture_model=synthetic.SmoothRandomTexture(seed=5),
    seed=5)
scene = synthetic.render(spec)
K = spec.intrinsics

# berHu: quadratic near zero, linear in the tails
pred = scene.depth + 0.1 * np.sin(np.arange(scene.depth.size)
                                  ).reshape(scene.depth.shape)
print("berhu(perturbed, gt):", losses.berhu(pred, scene.depth))
print("berhu(gt, gt):       ", losses.berhu(scene.depth, scene.depth))

print("smoothness of the rendered depth:", losses.smoothness(scene.depth))

# flow NLL at the true flow is just the entropy-like -log det term
residuals = np.zeros(scene.flow_field.flow.shape)
nll = infomat.flow_nll_map(residuals, scene.flow_field.info,
                           scene.flow_field.valid)
print("flow NLL at zero residual:", nll)

# photometric warping losses vanish at the true geometry
value = losses.pose_photometric(scene.image_1, scene.image_2,
                                scene.depth, spec.motion, K)
print("pose photometric at ground truth:", value)

wrong = np.asarray(spec.motion) + 0.02
value = losses.pose_photometric(scene.image_1, scene.image_2,
                                scene.depth, wrong, K)
print("pose photometric at a wrong pose:", value)
