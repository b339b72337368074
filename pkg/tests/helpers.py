"""测试用的合成数据构造"""

import numpy as np

from features.models import Keypoint
from pnp.models import Correspondence


def points_in_front(pose, rng, n, depth=(1.0, 3.0), spread=0.8):
    """相机前方的随机世界点"""
    z = rng.uniform(depth[0], depth[1], size=n)
    xy = rng.uniform(-spread, spread, size=(n, 2)) * z[:, None] * 0.5
    return pose.transform(np.c_[xy, z])


def exact_correspondences(pose, intr, points):
    pc = pose.inverse_transform(points)
    u = intr.fx * pc[:, 0] / pc[:, 2] + intr.cx
    v = intr.fy * pc[:, 1] / pc[:, 2] + intr.cy
    return Correspondence.from_arrays(np.c_[u, v], points)


def random_descriptors(rng, n, dim=32):
    d = rng.normal(size=(n, dim))
    return d / np.linalg.norm(d, axis=1)[:, None]


def keypoints_from(pixels, descriptors):
    return [Keypoint((float(p[0]), float(p[1])), d) for p, d in zip(pixels, descriptors)]
