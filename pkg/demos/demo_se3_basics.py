"""
Rigid-body transforms on the SE(3) manifold
===========================================

Round trips between twist coordinates and 4x4 transforms, composition,
and the action on inverse-depth points.
"""

import numpy as np

from flowpose import se3

# a twist: translation (x, y, z) then rotation (x, y, z)
xi = np.array([0.1, -0.05, 0.2, 0.02, 0.3, -0.1])
T = se3.exp(xi)
print("exp(xi) =\n", T)
print("is_rigid:", se3.is_rigid(T))

# log inverts exp
back = se3.log(T)
print("log(exp(xi)) - xi:", np.max(np.abs(back - xi)))

# composition multiplies, inversion flips the sign in the algebra
T2 = se3.exp(-xi)
print("T * exp(-xi) == I:", np.allclose(se3.compose(T, T2), np.eye(4)))
print("inverse(T) == exp(-xi):", np.allclose(se3.inverse(T), T2, atol=1e-12))

# inverse-depth points (u, v, 1, q) stay on the image plane after apply
p = np.array([0.1, -0.2, 1.0, 0.5])
moved = se3.apply(T, p)
print("apply keeps the third component at one:", moved[2])

# small motions behave linearly: exp(eps xi) ~ I + eps sum_j xi_j G_j
tiny = 1e-8 * xi
lin = np.eye(4) + np.einsum('j,jkl->kl', tiny, se3.generators())
print("small-angle error:", np.max(np.abs(se3.exp(tiny) - lin)))
