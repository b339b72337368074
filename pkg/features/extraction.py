#!/usr/bin/env python3
"""
特征提取接口
像素级检测不在本项目范围内；默认实现直接读取预计算的关键点与描述子
"""

import logging

import numpy as np

from features.models import Keypoint
from utils.exceptions import DimensionMismatch, FormatError

logger = logging.getLogger(__name__)


class FeatureExtractor:
    """提取器基类，子类实现 extract(frame) -> list[Keypoint]"""

    def __init__(self, dimension=None):
        self.dimension = dimension

    def extract(self, frame):
        raise NotImplementedError


class PrecomputedExtractor(FeatureExtractor):
    """特征文件直通：校验维度后构造 Keypoint"""

    def extract(self, frame):
        keypoints = frame.get('keypoints', [])
        descriptors = frame.get('descriptors', [])
        landmark_ids = frame.get('landmark_ids')

        if len(keypoints) != len(descriptors):
            raise FormatError(
                f"帧 {frame.get('frame')}: 关键点数 {len(keypoints)} 与描述子数 {len(descriptors)} 不一致"
            )
        if landmark_ids is not None and len(landmark_ids) != len(keypoints):
            raise FormatError(f"帧 {frame.get('frame')}: landmark_ids 长度与关键点数不一致")

        result = []
        for i, (px, desc) in enumerate(zip(keypoints, descriptors)):
            if self.dimension is not None and len(desc) != self.dimension:
                raise DimensionMismatch(
                    f"帧 {frame.get('frame')} 关键点 {i}: 描述子维度 {len(desc)}，会话维度 {self.dimension}"
                )
            if len(px) != 2 or not np.all(np.isfinite(px)):
                raise FormatError(f"帧 {frame.get('frame')} 关键点 {i}: 像素无效 {px}")
            lid = None if landmark_ids is None else landmark_ids[i]
            result.append(Keypoint((px[0], px[1]), np.asarray(desc, dtype=float), lid))
        return result


def extract_features(frame, dimension=None, extractor=None):
    """
    从特征帧得到关键点

    Args:
        frame: 特征文件内容（dict）
        dimension: 会话描述子维度 D
        extractor: 自定义 FeatureExtractor，默认为直通实现
    """
    extractor = extractor or PrecomputedExtractor(dimension)
    return extractor.extract(frame)
