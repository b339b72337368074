#!/usr/bin/env python3
"""
视线恢复数据模型
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from geometry.camera import Ray
from geometry.transforms import Pose


class FrameStatus(str, Enum):
    LOCALIZED = 'Localized'
    LOST = 'Lost'


class GazeStatus(str, Enum):
    HIT = 'Hit'
    MISS = 'Miss'
    FRAME_LOST = 'FrameLost'
    INVALID = 'Invalid'


@dataclass(frozen=True)
class GazeSample:
    """眼动仪场景相机中的一个注视点样本"""

    timestamp: int
    frame_index: int
    gaze_px: tuple
    valid: bool = True

    @staticmethod
    def from_record(record):
        return GazeSample(
            timestamp=int(record['t_ms']),
            frame_index=int(record['frame']),
            gaze_px=(float(record['gaze_px'][0]), float(record['gaze_px'][1])),
            valid=bool(record['valid']),
        )

    def to_record(self):
        return {
            't_ms': self.timestamp,
            'frame': self.frame_index,
            'gaze_px': [self.gaze_px[0], self.gaze_px[1]],
            'valid': self.valid,
        }


@dataclass
class LocalizedFrame:
    frame_index: int
    pose: Optional[Pose]
    inlier_count: int
    rmse_px: float
    status: FrameStatus

    @property
    def localized(self):
        return self.status == FrameStatus.LOCALIZED


@dataclass(frozen=True, eq=False)
class GazePoint3D:
    """恢复出的 3D 注视点；只有 Hit 时 point 存在"""

    timestamp: int
    status: GazeStatus
    point: Optional[np.ndarray] = None
    ray: Optional[Ray] = None
    frame_pose: Optional[Pose] = None

    @property
    def is_hit(self):
        return self.status == GazeStatus.HIT
