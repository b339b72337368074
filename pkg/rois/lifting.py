#!/usr/bin/env python3
"""
ROI 三维化与合并
检测四边形内部射线投射到占据栅格拟合平面，角射线与平面求交得到 ROI3D；同标签的多次观测按质心距离聚类合并
"""

import logging
from collections import OrderedDict

import numpy as np

from geometry.camera import Ray
from rois.detection import is_convex
from rois.homography import apply_homography
from rois.models import ROI3D

logger = logging.getLogger(__name__)

PLANARITY_TOLERANCE_M = 0.02
MERGE_RADIUS_M = 0.15
DEFAULT_MAX_RANGE_M = 10.0
INTERIOR_INSET = 0.15


def _pixel_ray(intr, pose, px):
    """像素可能落在图像外（目标部分出画），直接构造射线不做范围检查"""
    d = np.array([(px[0] - intr.cx) / intr.fx, (px[1] - intr.cy) / intr.fy, 1.0])
    return Ray(pose.translation, pose.rotation @ d)


def fit_plane(points):
    """
    最小二乘平面

    Returns:
        (centroid, unit normal, 各点到平面的有符号距离)
    """
    c = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - c)
    n = vt[-1] / np.linalg.norm(vt[-1])
    return c, n, (points - c) @ n


def plane_basis(normal):
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def polygon_in_plane(polygon, normal):
    """多边形在自身平面内的二维坐标"""
    e1, e2 = plane_basis(normal)
    rel = polygon - polygon.mean(axis=0)
    return np.c_[rel @ e1, rel @ e2]


def _interior_pixels(detection):
    """参考图内距边缘 INTERIOR_INSET 的 3x3 网格点，经单应映射到帧中"""
    try:
        ref = apply_homography(np.linalg.inv(detection.homography), detection.corner_quad)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(ref)):
        return None
    steps = (INTERIOR_INSET, 0.5, 1.0 - INTERIOR_INSET)
    grid = [
        (1 - s) * (1 - t) * ref[0] + s * (1 - t) * ref[1] + s * t * ref[2] + (1 - s) * t * ref[3]
        for t in steps for s in steps
    ]
    return apply_homography(detection.homography, np.array(grid))


def lift_roi(detection, frame_pose, intr, grid, max_range=DEFAULT_MAX_RANGE_M,
             tolerance=PLANARITY_TOLERANCE_M):
    """
    检测 -> ROI3D

    平面由四边形内部 3x3 采样射线的命中点拟合；角点取角射线与该平面的交点。
    角射线仍须命中栅格，命中点可以落在平面后方（射线擦过目标边缘打到背景），
    但不能比平面更靠近相机（角点被遮挡）

    Returns:
        ROI3D；射线未命中、内部点非共面、角点深度矛盾或多边形非凸时返回 None
    """
    label, frame_index = detection.roi_label, detection.frame_index
    corner_rays = [_pixel_ray(intr, frame_pose, px) for px in detection.corner_quad]
    corner_hits = []
    for ray in corner_rays:
        hit = grid.cast_ray(ray, max_range)
        if hit is None:
            logger.debug(f"帧 {frame_index}: {label} 角射线未命中")
            return None
        corner_hits.append(hit[0])

    interior = _interior_pixels(detection)
    if interior is None:
        logger.debug(f"帧 {frame_index}: {label} 单应矩阵不可逆")
        return None
    samples = []
    for px in interior:
        hit = grid.cast_ray(_pixel_ray(intr, frame_pose, px), max_range)
        if hit is None:
            logger.debug(f"帧 {frame_index}: {label} 内部采样射线未命中")
            return None
        samples.append(hit[0])

    centroid, normal, dist = fit_plane(np.array(samples))
    if np.max(np.abs(dist)) > tolerance:
        logger.debug(f"帧 {frame_index}: {label} 非共面 (最大偏差 {np.max(np.abs(dist)):.3f} m)")
        return None
    if normal @ (frame_pose.translation - centroid) < 0:
        normal = -normal

    polygon = []
    for ray, hit in zip(corner_rays, corner_hits):
        if (hit - centroid) @ normal > tolerance:
            logger.debug(f"帧 {frame_index}: {label} 角点被平面前方的物体遮挡")
            return None
        denom = float(normal @ ray.direction)
        if abs(denom) < 1e-9:
            return None
        t = float(normal @ (centroid - ray.origin)) / denom
        if not 0.0 < t <= max_range:
            return None
        polygon.append(ray.origin + t * ray.direction)
    polygon = np.array(polygon)

    if not is_convex(polygon_in_plane(polygon, normal)):
        return None
    return ROI3D(label, polygon, normal, 1)


def _align_corners(polygon, reference):
    """循环移位使角点与参考多边形最接近"""
    best, best_cost = polygon, np.inf
    for shift in range(len(polygon)):
        candidate = np.roll(polygon, -shift, axis=0)
        cost = float(((candidate - reference) ** 2).sum())
        if cost < best_cost:
            best, best_cost = candidate, cost
    return best


def _merge_cluster(members):
    if len(members) == 1:
        return members[0]
    reference = members[0]
    weights = np.array([m.support_count for m in members], dtype=float)
    polygons = np.array([_align_corners(m.polygon, reference.polygon) for m in members])
    normals = np.array([m.normal if m.normal @ reference.normal >= 0 else -m.normal for m in members])
    polygon = np.tensordot(weights, polygons, axes=1) / weights.sum()
    normal = weights @ normals
    return ROI3D(reference.roi_label, polygon, normal, int(weights.sum()))


def _cluster_once(rois, radius):
    clusters = []
    for roi in rois:
        for cluster in clusters:
            w = np.array([m.support_count for m in cluster], dtype=float)
            center = w @ np.array([m.centroid for m in cluster]) / w.sum()
            if np.linalg.norm(roi.centroid - center) < radius:
                cluster.append(roi)
                break
        else:
            clusters.append([roi])
    return clusters


def merge_rois(detections_3d, radius=MERGE_RADIUS_M):
    """
    同标签 ROI 合并，重复聚类直到没有可合并的簇（结果为不动点）

    Returns:
        按标签首次出现顺序排列的 ROI3D 列表
    """
    by_label = OrderedDict()
    for roi in detections_3d:
        by_label.setdefault(roi.roi_label, []).append(roi)

    merged = []
    for label, rois in by_label.items():
        current = rois
        while True:
            clusters = _cluster_once(current, radius)
            if all(len(c) == 1 for c in clusters):
                break
            current = [_merge_cluster(c) for c in clusters]
        logger.debug(f"ROI {label}: {len(rois)} 次观测合并为 {len(current)} 个实例")
        merged.extend(current)
    return merged
