#!/usr/bin/env python3
"""
地图数据模型
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from geometry.transforms import Pose

DEPTH_LOOKUP_RADIUS_PX = 1.0


@dataclass
class Landmark:
    """路标点：世界坐标 + 描述子"""

    id: int
    position: np.ndarray
    descriptor: np.ndarray
    observation_count: int = 1


@dataclass
class Keyframe:
    """关键帧：位姿 + 关键点 + 关键点到路标的链接"""

    id: int
    pose: Pose
    keypoints: list
    landmark_links: dict = field(default_factory=dict)
    # 文件中的 7 数表示，原样写回
    pose_vector: list = None


@dataclass(frozen=True, eq=False)
class GridGeometry:
    """体素网格几何：origin 为体素 (0,0,0) 的最小角"""

    origin: np.ndarray
    resolution: float
    dims: tuple

    def __post_init__(self):
        origin = np.array(self.origin, dtype=float).reshape(3)
        dims = tuple(int(n) for n in self.dims)
        if not self.resolution > 0:
            raise ValueError(f"分辨率必须为正: {self.resolution}")
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"网格尺寸必须为3个正整数: {self.dims}")
        origin.setflags(write=False)
        object.__setattr__(self, 'origin', origin)
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'resolution', float(self.resolution))

    @staticmethod
    def from_bounds(bounds_min, bounds_max, resolution):
        """由包围盒构造，尺寸向上取整"""
        bmin = np.asarray(bounds_min, dtype=float)
        bmax = np.asarray(bounds_max, dtype=float)
        dims = np.maximum(1, np.ceil((bmax - bmin) / resolution - 1e-9).astype(int))
        return GridGeometry(bmin, resolution, tuple(int(n) for n in dims))

    @property
    def upper(self):
        return self.origin + np.array(self.dims) * self.resolution

    def voxel_of(self, p):
        """包含 p 的体素下标；网格外返回 None"""
        f = (np.asarray(p, dtype=float) - self.origin) / self.resolution
        idx = np.floor(f).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.dims)):
            return None
        return tuple(int(i) for i in idx)

    def center(self, index):
        return self.origin + (np.asarray(index, dtype=float) + 0.5) * self.resolution

    def centers(self):
        """所有体素中心，形状 (nx, ny, nz, 3)"""
        axes = [self.origin[i] + (np.arange(self.dims[i]) + 0.5) * self.resolution for i in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing='ij')
        return np.stack([gx, gy, gz], axis=-1)

    def contains_index(self, index):
        return all(0 <= index[i] < self.dims[i] for i in range(3))

    def slab_interval(self, origin, direction):
        """射线与网格包围盒的参数区间 (t_enter, t_exit)；不相交时 t_enter > t_exit"""
        lo = self.origin
        hi = self.upper
        t_enter, t_exit = -np.inf, np.inf
        for i in range(3):
            if direction[i] == 0.0:
                if origin[i] < lo[i] or origin[i] > hi[i]:
                    return np.inf, -np.inf
                continue
            t1 = (lo[i] - origin[i]) / direction[i]
            t2 = (hi[i] - origin[i]) / direction[i]
            t_enter = max(t_enter, min(t1, t2))
            t_exit = min(t_exit, max(t1, t2))
        return t_enter, t_exit


class DepthFrame:
    """RGB-D 帧：稀疏深度样本 (u, v, depth) + 关键点"""

    def __init__(self, frame_index, samples, keypoints=None, timestamp=0):
        self.frame_index = int(frame_index)
        self.timestamp = timestamp
        samples = np.asarray(samples, dtype=float).reshape(-1, 3)
        self.samples = samples
        self.keypoints = list(keypoints or [])
        self._tree = None

    def __len__(self):
        return len(self.samples)

    def _kdtree(self):
        if self._tree is None and len(self.samples):
            self._tree = cKDTree(self.samples[:, :2])
        return self._tree

    def depth_at(self, pixel, radius=DEPTH_LOOKUP_RADIUS_PX):
        """半径内最近深度样本的深度，没有则返回 None"""
        tree = self._kdtree()
        if tree is None:
            return None
        dist, idx = tree.query(np.asarray(pixel, dtype=float), k=1)
        if not np.isfinite(dist) or dist > radius:
            return None
        return float(self.samples[idx, 2])

    def keypoint_depths(self, radius=DEPTH_LOOKUP_RADIUS_PX):
        """每个关键点的深度（无则 None）"""
        return [self.depth_at(kp.pixel, radius) for kp in self.keypoints]
