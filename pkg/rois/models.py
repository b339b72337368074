#!/usr/bin/env python3
"""
语义 ROI 数据模型
"""

from dataclasses import dataclass

import numpy as np

MIN_REFERENCE_KEYPOINTS = 8


@dataclass(frozen=True, eq=False)
class ReferenceAppearance:
    """参考外观（logo、包装面）：参考图像坐标下的关键点"""

    roi_label: str
    keypoints: list
    reference_size: tuple

    def __post_init__(self):
        if len(self.keypoints) < MIN_REFERENCE_KEYPOINTS:
            raise ValueError(
                f"参考外观 {self.roi_label} 至少需要 {MIN_REFERENCE_KEYPOINTS} 个关键点，实际 {len(self.keypoints)}"
            )

    def corners(self):
        """参考矩形四角：左上、右上、右下、左下"""
        w, h = self.reference_size
        return np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])


@dataclass(frozen=True, eq=False)
class RoiDetection:
    roi_label: str
    frame_index: int
    homography: np.ndarray
    corner_quad: np.ndarray
    inlier_count: int


@dataclass(frozen=True, eq=False)
class ROI3D:
    """世界坐标下的平面四边形 ROI"""

    roi_label: str
    polygon: np.ndarray
    normal: np.ndarray
    support_count: int = 1

    def __post_init__(self):
        polygon = np.array(self.polygon, dtype=float).reshape(4, 3)
        normal = np.array(self.normal, dtype=float).reshape(3)
        normal = normal / np.linalg.norm(normal)
        object.__setattr__(self, 'polygon', polygon)
        object.__setattr__(self, 'normal', normal)

    @property
    def centroid(self):
        return self.polygon.mean(axis=0)

    def to_dict(self):
        return {
            'roi_label': self.roi_label,
            'polygon': self.polygon.tolist(),
            'normal': self.normal.tolist(),
            'support_count': int(self.support_count),
        }

    @staticmethod
    def from_dict(data):
        return ROI3D(
            roi_label=str(data['roi_label']),
            polygon=np.asarray(data['polygon'], dtype=float),
            normal=np.asarray(data['normal'], dtype=float),
            support_count=int(data.get('support_count', 1)),
        )
