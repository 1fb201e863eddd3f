"""Self-supervised monocular depth geometry engine.

Dense image grids, pinhole camera algebra, affine augmentation with rectified
poses, photometric and depth-consistency losses with analytic gradients, flow
based frame/feature fusion, a synthetic ray-cast scene oracle and a direct
depth optimizer.
"""

__version__ = "0.1.0"
