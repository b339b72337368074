#!/usr/bin/env python3
"""
三维注视检测（离散度阈值法）
离散度用视线射线方向之间的最大两两夹角衡量，与头部位姿无关
"""

import logging

import numpy as np

from analytics.models import Fixation

logger = logging.getLogger(__name__)

DEFAULT_DISPERSION_DEG = 2.5
DEFAULT_MIN_DURATION_MS = 100


def _angles_deg(d, dirs):
    """单位向量 d 与 dirs 各行之间的夹角（度）"""
    cross = np.linalg.norm(np.cross(dirs, d), axis=1)
    dot = np.clip(dirs @ d, -1.0, 1.0)
    return np.degrees(np.arctan2(cross, dot))


def mean_dispersion(dirs):
    """各方向到平均方向的平均夹角"""
    mean = dirs.sum(axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        return 180.0
    return float(_angles_deg(mean / norm, dirs).mean())


def detect_fixations(points, dispersion_threshold=DEFAULT_DISPERSION_DEG, min_duration=DEFAULT_MIN_DURATION_MS):
    """
    I-DT：窗口从左侧贪心增长，只要新样本与窗口内所有射线夹角不超过阈值

    Args:
        points: 按时间排序的 GazePoint3D；非 Hit 样本终止窗口
        dispersion_threshold: 最大两两夹角（度）
        min_duration: 最短注视时长（ms，末样本时间 - 首样本时间）

    Returns:
        Fixation 列表，样本区间互不重叠
    """
    n = len(points)
    fixations = []
    i = 0
    while i < n:
        if not points[i].is_hit:
            i += 1
            continue
        dirs = [points[i].ray.direction]
        j = i
        while j + 1 < n and points[j + 1].is_hit:
            d = points[j + 1].ray.direction
            if np.max(_angles_deg(d, np.array(dirs))) > dispersion_threshold:
                break
            dirs.append(d)
            j += 1

        duration = points[j].timestamp - points[i].timestamp
        if duration >= min_duration:
            hits = np.array([p.point for p in points[i:j + 1]])
            fixations.append(Fixation(
                start=points[i].timestamp,
                duration=duration,
                centroid_3d=hits.mean(axis=0),
                sample_indices=range(i, j + 1),
                mean_dispersion=mean_dispersion(np.array(dirs)),
            ))
            i = j + 1
        else:
            i += 1

    logger.debug(f"检测到 {len(fixations)} 次注视 (阈值 {dispersion_threshold}°, 最短 {min_duration} ms)")
    return fixations
