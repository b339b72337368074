#!/usr/bin/env python3
"""
合成场景生成
平面片上均匀撒路标，每个路标一个相互分离的描述子；ROI 平面片同时生成参考外观
"""

import logging

import numpy as np
from scipy.spatial import cKDTree

from features.models import Keypoint
from rois.models import MIN_REFERENCE_KEYPOINTS, ReferenceAppearance
from sim.models import GroundTruth, Scene
from utils.exceptions import InvalidSpec

logger = logging.getLogger(__name__)

DEFAULT_DESCRIPTOR_SIGMA = 0.02
SEPARATION_FACTOR = 10.0
MAX_REDRAW_ROUNDS = 100

# 随机流标签，保证各部分互不影响
STREAM_POSITIONS = 1
STREAM_DESCRIPTORS = 2


def descriptor_separation_floor(descriptor_sigma, dimension):
    """描述子两两最小距离：匹配噪声向量典型长度的 10 倍"""
    return SEPARATION_FACTOR * descriptor_sigma * np.sqrt(dimension)


def separated_descriptors(count, dimension, floor, rng):
    """
    N(0, 1) 描述子，两两距离不小于 floor

    过近的点对中重抽较后的那个，直到没有过近点对
    """
    desc = rng.normal(size=(count, dimension))
    if count < 2 or floor <= 0:
        return desc
    for _ in range(MAX_REDRAW_ROUNDS):
        pairs = cKDTree(desc).query_pairs(floor, output_type='ndarray')
        if len(pairs) == 0:
            return desc
        redraw = np.unique(pairs[:, 1])
        desc[redraw] = rng.normal(size=(len(redraw), dimension))
    raise InvalidSpec(f"无法生成 {count} 个间距 ≥ {floor:.3f} 的 {dimension} 维描述子")


def generate_scene(spec, descriptor_sigma=DEFAULT_DESCRIPTOR_SIGMA):
    """
    Args:
        spec: SceneSpec
        descriptor_sigma: 仿真匹配噪声 σ，决定描述子间距下限

    Returns:
        (Scene, GroundTruth 的路标与 ROI 部分)
    """
    positions = []
    patch_index = []
    params = []
    for i, patch in enumerate(spec.patches):
        rng = np.random.default_rng([spec.seed, STREAM_POSITIONS, i])
        n = int(round(patch.density * patch.area))
        s = rng.uniform(0.0, 1.0, size=n)
        t = rng.uniform(0.0, 1.0, size=n)
        positions.append(patch.point_at(s, t).reshape(-1, 3))
        patch_index.append(np.full(n, i, dtype=int))
        params.append(np.c_[s, t])
    positions = np.vstack(positions)
    patch_index = np.concatenate(patch_index)

    floor = descriptor_separation_floor(descriptor_sigma, spec.descriptor_dim)
    rng = np.random.default_rng([spec.seed, STREAM_DESCRIPTORS])
    descriptors = separated_descriptors(len(positions), spec.descriptor_dim, floor, rng)

    scene = Scene(spec, positions, descriptors, patch_index)
    truth = GroundTruth(landmark_positions=positions.copy())
    offset = 0
    for i, patch in enumerate(spec.patches):
        n = len(params[i])
        if patch.roi_label is not None:
            if n < MIN_REFERENCE_KEYPOINTS:
                raise InvalidSpec(
                    f"patches[{i}]: ROI {patch.roi_label} 只有 {n} 个路标，参考外观至少需要 {MIN_REFERENCE_KEYPOINTS}"
                )
            w, h = patch.reference_size()
            ids = list(range(offset, offset + n))
            keypoints = [
                Keypoint((st[0] * w, st[1] * h), descriptors[lid], lid)
                for st, lid in zip(params[i], ids)
            ]
            scene.references.append(ReferenceAppearance(patch.roi_label, keypoints, (w, h)))
            scene.reference_landmarks[patch.roi_label] = ids
            truth.roi_polygons[patch.roi_label] = patch.corners()
        offset += n

    logger.info(f"场景生成: {len(spec.patches)} 个平面片, {len(positions)} 个路标, {len(scene.references)} 个 ROI")
    return scene, truth


def first_hits(scene, origin, directions):
    """
    多条射线与场景平面片的最近交点（向量化）

    Returns:
        (t (N,), patch_index (N,))；未相交为 (inf, -1)
    """
    directions = np.asarray(directions, dtype=float).reshape(-1, 3)
    best_t = np.full(len(directions), np.inf)
    best_patch = np.full(len(directions), -1, dtype=int)
    for i, patch in enumerate(scene.spec.patches):
        u, v = patch.edge_u, patch.edge_v
        n = np.cross(u, v)
        denom = directions @ n
        with np.errstate(divide='ignore', invalid='ignore'):
            t = ((patch.corner - origin) @ n) / denom
        rel = origin + t[:, None] * directions - patch.corner
        g_inv = np.linalg.inv(np.array([[u @ u, u @ v], [u @ v, v @ v]]))
        st = np.c_[rel @ u, rel @ v] @ g_inv.T
        ok = (np.abs(denom) > 1e-12) & (t > 0) & np.all((st >= -1e-12) & (st <= 1 + 1e-12), axis=1)
        better = ok & (t < best_t)
        best_t[better] = t[better]
        best_patch[better] = i
    return best_t, best_patch
