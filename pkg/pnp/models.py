#!/usr/bin/env python3
"""
位姿估计数据模型
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from geometry.transforms import Pose


@dataclass(frozen=True)
class Correspondence:
    """2D-3D 对应：像素 + 世界点"""

    pixel: tuple
    point: tuple
    landmark_id: Optional[int] = None

    @staticmethod
    def from_arrays(pixels, points, landmark_ids=None):
        pixels = np.asarray(pixels, dtype=float).reshape(-1, 2)
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        ids = landmark_ids if landmark_ids is not None else [None] * len(pixels)
        return [
            Correspondence((float(px[0]), float(px[1])), (float(p[0]), float(p[1]), float(p[2])), lid)
            for px, p, lid in zip(pixels, points, ids)
        ]


def correspondence_arrays(corrs):
    """对应列表 -> (pixels (N,2), points (N,3))"""
    if not corrs:
        return np.zeros((0, 2)), np.zeros((0, 3))
    pixels = np.array([c.pixel for c in corrs], dtype=float)
    points = np.array([c.point for c in corrs], dtype=float)
    return pixels, points


@dataclass(frozen=True)
class PnPConfig:
    """PnP/RANSAC/LM 参数"""

    ransac_iterations: int = 200
    inlier_threshold_px: float = 2.0
    min_inliers: int = 10
    refine_max_iterations: int = 50
    refine_convergence_px: float = 1e-6
    seed: int = 0
    confidence: float = 0.999
    workers: int = 1

    def __post_init__(self):
        if self.ransac_iterations < 1:
            raise ValueError(f"ransac_iterations 必须 >= 1: {self.ransac_iterations}")
        if not self.inlier_threshold_px > 0:
            raise ValueError(f"inlier_threshold_px 必须为正: {self.inlier_threshold_px}")
        if self.min_inliers < 4:
            raise ValueError(f"min_inliers 必须 >= 4: {self.min_inliers}")

    @staticmethod
    def from_dict(data):
        data = data or {}
        defaults = PnPConfig()
        return PnPConfig(
            ransac_iterations=int(data.get('ransac_iterations', defaults.ransac_iterations)),
            inlier_threshold_px=float(data.get('inlier_threshold_px', defaults.inlier_threshold_px)),
            min_inliers=int(data.get('min_inliers', defaults.min_inliers)),
            refine_max_iterations=int(data.get('refine_max_iterations', defaults.refine_max_iterations)),
            refine_convergence_px=float(data.get('refine_convergence_px', defaults.refine_convergence_px)),
            seed=int(data.get('seed', defaults.seed)),
            confidence=float(data.get('confidence', defaults.confidence)),
            workers=int(data.get('workers', defaults.workers)),
        )


@dataclass
class RefineOutcome:
    """
    LM 优化结果；converged=False 时结果仍可用

    status: converged / max_iterations / damping_saturated（阻尼增大到上限仍无法下降）
    """

    pose: Pose
    rmse_px: float
    converged: bool
    iterations: int
    rmse_trace: list = field(default_factory=list)
    status: str = 'converged'


@dataclass
class PnPResult:
    """RANSAC PnP 结果，rmse 只在内点上统计"""

    pose: Pose
    inlier_mask: np.ndarray
    rmse_px: float
    correspondences: list = field(default_factory=list)
    keypoint_indices: list = field(default_factory=list)

    @property
    def inlier_count(self):
        return int(np.count_nonzero(self.inlier_mask))

    @property
    def inlier_ratio(self):
        n = len(self.inlier_mask)
        return self.inlier_count / n if n else 0.0
