#!/usr/bin/env python3
"""
特征数据模型
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

DEFAULT_DESCRIPTOR_DIM = 32


@dataclass(frozen=True, eq=False)
class Keypoint:
    """关键点：像素 + 描述子；landmark_id 只在仿真数据中存在"""

    pixel: tuple
    descriptor: np.ndarray
    landmark_id: Optional[int] = None

    def __post_init__(self):
        d = np.array(self.descriptor, dtype=float).reshape(-1)
        d.setflags(write=False)
        object.__setattr__(self, 'descriptor', d)
        object.__setattr__(self, 'pixel', (float(self.pixel[0]), float(self.pixel[1])))

    @property
    def dimension(self):
        return len(self.descriptor)


@dataclass(frozen=True)
class Match:
    """描述子匹配：query -> train"""

    query_index: int
    train_index: int
    distance: float
    ratio: float


def descriptor_matrix(keypoints):
    """关键点列表 -> (N, D) 描述子矩阵"""
    if not keypoints:
        return np.zeros((0, 0))
    return np.vstack([kp.descriptor for kp in keypoints])


def pixel_matrix(keypoints):
    if not keypoints:
        return np.zeros((0, 2))
    return np.array([kp.pixel for kp in keypoints], dtype=float)
