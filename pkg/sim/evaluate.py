#!/usr/bin/env python3
"""
恢复结果与真值对比
"""

import logging

import numpy as np

from geometry.camera import angular_error
from utils.exceptions import LengthMismatch

logger = logging.getLogger(__name__)


def _stats(values):
    """排序后归约，结果与累加顺序无关；空集合返回空字典（不输出 NaN）"""
    if not values:
        return {}
    ordered = np.sort(np.asarray(values, dtype=float))
    return {
        'median': float(np.median(ordered)),
        'mean': float(np.sum(ordered) / len(ordered)),
        'count': int(len(ordered)),
    }


def evaluate(recovered, truth):
    """
    Args:
        recovered: GazePoint3D 列表
        truth: TruthSample 列表（与 recovered 按下标对齐）

    Returns:
        指标字典：角度误差（度）、三维误差（米）、定位率、命中率；非 Hit 样本只计入比率
    """
    if len(recovered) != len(truth):
        raise LengthMismatch(f"恢复样本 {len(recovered)} 个，真值 {len(truth)} 个")
    angular = []
    positional = []
    with_ray = 0
    hits = 0
    for point, expected in zip(recovered, truth):
        if point.ray is not None:
            with_ray += 1
        if not point.is_hit:
            continue
        hits += 1
        angular.append(angular_error(point.ray, expected.direction))
        if expected.point is not None:
            positional.append(float(np.linalg.norm(point.point - expected.point)))

    n = len(recovered)
    metrics = {'samples': n}
    angular_stats = _stats(angular)
    positional_stats = _stats(positional)
    if angular_stats:
        metrics['median_angular_error_deg'] = angular_stats['median']
        metrics['mean_angular_error_deg'] = angular_stats['mean']
    if positional_stats:
        metrics['median_3d_error_m'] = positional_stats['median']
        metrics['mean_3d_error_m'] = positional_stats['mean']
    metrics['localized_pct'] = 100.0 * with_ray / n if n else 0.0
    metrics['hit_pct'] = 100.0 * hits / n if n else 0.0
    logger.info(
        f"评估: 命中 {hits}/{n}, 角度误差中位数 {metrics.get('median_angular_error_deg', float('nan')):.3f}°, "
        f"三维误差中位数 {metrics.get('median_3d_error_m', float('nan')) * 100:.2f} cm"
    )
    return metrics
