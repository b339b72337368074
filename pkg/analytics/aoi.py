#!/usr/bin/env python3
"""
AOI 命中判定
点到 ROI 平面距离不超过容差且投影落在四边形内（边界包含）
"""

import numpy as np

from rois.lifting import plane_basis

DEFAULT_TOLERANCE_M = 0.02
_EDGE_EPS = 1e-12


def roi_hit_test(points, roi, tolerance=DEFAULT_TOLERANCE_M):
    """
    Args:
        points: (N, 3)

    Returns:
        (inside mask, 到平面的绝对距离)
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    origin = roi.centroid
    dist = np.abs((points - origin) @ roi.normal)
    e1, e2 = plane_basis(roi.normal)
    rel_poly = roi.polygon - origin
    poly = np.c_[rel_poly @ e1, rel_poly @ e2]
    rel = points - origin
    q = np.c_[rel @ e1, rel @ e2]

    scale = max(float(np.ptp(poly, axis=0).max()), 1.0)
    crosses = []
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        edge = b - a
        w = q - a
        crosses.append(edge[0] * w[:, 1] - edge[1] * w[:, 0])
    crosses = np.array(crosses)
    eps = _EDGE_EPS * scale * scale
    inside = np.all(crosses >= -eps, axis=0) | np.all(crosses <= eps, axis=0)
    return inside & (dist <= tolerance), dist


def aoi_hits(points, rois, tolerance=DEFAULT_TOLERANCE_M):
    """
    每个样本命中的 ROI 标签；未命中或非 Hit 样本为 None

    多个 ROI 重叠时取平面距离最小者，距离相同按标签排序
    """
    labels = [None] * len(points)
    hit_index = [i for i, p in enumerate(points) if p.is_hit]
    if not hit_index or not rois:
        return labels
    coords = np.array([points[i].point for i in hit_index])
    best_dist = np.full(len(hit_index), np.inf)
    best_label = [None] * len(hit_index)
    for roi in sorted(rois, key=lambda r: r.roi_label):
        inside, dist = roi_hit_test(coords, roi, tolerance)
        better = inside & (dist < best_dist)
        for k in np.flatnonzero(better):
            best_dist[k] = dist[k]
            best_label[k] = roi.roi_label
    for k, i in enumerate(hit_index):
        labels[i] = best_label[k]
    return labels


def label_for_point(point, rois, tolerance=DEFAULT_TOLERANCE_M):
    """单个三维点的命中标签（用于注视质心）"""
    best = None
    for roi in sorted(rois, key=lambda r: r.roi_label):
        inside, dist = roi_hit_test(point, roi, tolerance)
        if inside[0] and (best is None or dist[0] < best[0]):
            best = (dist[0], roi.roi_label)
    return best[1] if best else None
