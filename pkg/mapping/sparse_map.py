#!/usr/bin/env python3
"""
稀疏路标地图
RGB-D 初始化、基于关键点匹配 + RANSAC PnP 的位姿跟踪、关键帧插入与地图文件读写
"""

import logging

import numpy as np
from scipy.spatial import cKDTree

from features.matching import match_descriptors
from features.models import descriptor_matrix, pixel_matrix
from geometry.camera import backproject, project_points
from geometry.transforms import Pose, pose_from_vector, pose_to_vector, rotation_difference_deg
from mapping.models import Keyframe, Landmark
from pnp.models import Correspondence, PnPConfig
from pnp.ransac import ransac_pnp
from utils.exceptions import DimensionMismatch, FormatError, MappingError, TooFewKeypoints, TooFewMatches
from utils.file_formats import atomic_write_text, canonical_json, read_json, verify_checksum, with_checksum

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_KEYPOINTS = 10
TRACKING_RATIO = 0.8
GATE_RADIUS_PX = 50.0
KEYFRAME_TRANSLATION_M = 0.25
KEYFRAME_ROTATION_DEG = 10.0
KEYFRAME_INLIER_RATIO = 0.5


class SparseMap:
    """路标 + 关键帧集合，单写多读"""

    def __init__(self, descriptor_dimension):
        self.descriptor_dimension = int(descriptor_dimension)
        self.landmarks = {}
        self.keyframes = []
        self._cache = None

    def __len__(self):
        return len(self.landmarks)

    @property
    def next_landmark_id(self):
        return max(self.landmarks) + 1 if self.landmarks else 0

    @property
    def next_keyframe_id(self):
        return self.keyframes[-1].id + 1 if self.keyframes else 0

    def add_landmark(self, position, descriptor):
        descriptor = np.asarray(descriptor, dtype=float).reshape(-1)
        if len(descriptor) != self.descriptor_dimension:
            raise DimensionMismatch(f"路标描述子维度 {len(descriptor)} != {self.descriptor_dimension}")
        lid = self.next_landmark_id
        self.landmarks[lid] = Landmark(lid, np.asarray(position, dtype=float).reshape(3), descriptor)
        self._cache = None
        return lid

    def add_keyframe(self, pose, keypoints, links):
        if any(lid not in self.landmarks for lid in links.values()):
            raise MappingError("关键帧链接到不存在的路标")
        kf = Keyframe(self.next_keyframe_id, pose, list(keypoints), dict(links), pose_to_vector(pose))
        self.keyframes.append(kf)
        return kf

    def arrays(self):
        """(ids, positions (N,3), descriptors (N,D))，按 id 升序，缓存到下一次写入"""
        if self._cache is None:
            ids = np.array(sorted(self.landmarks), dtype=int)
            if len(ids):
                positions = np.array([self.landmarks[i].position for i in ids])
                descriptors = np.array([self.landmarks[i].descriptor for i in ids])
            else:
                positions = np.zeros((0, 3))
                descriptors = np.zeros((0, self.descriptor_dimension))
            self._cache = (ids, positions, descriptors)
        return self._cache

    def nearest_keyframe(self, pose):
        """平移距离最近的关键帧"""
        if not self.keyframes:
            return None
        dists = [np.linalg.norm(kf.pose.translation - pose.translation) for kf in self.keyframes]
        return self.keyframes[int(np.argmin(dists))]

    def check_consistency(self):
        """所有关键帧链接都指向存在的路标"""
        return all(lid in self.landmarks for kf in self.keyframes for lid in kf.landmark_links.values())


def bootstrap_map(frame, intr):
    """
    由第一帧 RGB-D 数据建立地图

    第一个关键帧位于单位位姿，每个有深度的关键点生成一个路标
    """
    depths = frame.keypoint_depths()
    with_depth = [i for i, d in enumerate(depths) if d is not None and d > 0]
    if len(with_depth) < MIN_BOOTSTRAP_KEYPOINTS:
        raise TooFewKeypoints(
            f"帧 {frame.frame_index}: 有深度的关键点 {len(with_depth)} 个，至少需要 {MIN_BOOTSTRAP_KEYPOINTS}"
        )
    dimension = frame.keypoints[with_depth[0]].dimension
    smap = SparseMap(dimension)
    links = {}
    for i in with_depth:
        kp = frame.keypoints[i]
        links[i] = smap.add_landmark(backproject(intr, kp.pixel, depths[i]), kp.descriptor)
    smap.add_keyframe(Pose.identity(), frame.keypoints, links)
    logger.info(f"地图初始化: {len(smap)} 个路标")
    return smap


def _gated_matches(query, pixels, lm_desc, projected, valid, ratio, radius=GATE_RADIUS_PX):
    """
    只在先验投影 radius 像素范围内的路标中做比值检验

    门限内只有一个候选时，次近距离取地图中其余路标的最近距离
    """
    valid_idx = np.flatnonzero(valid)
    if len(valid_idx) == 0 or len(lm_desc) < 2:
        return []
    tree = cKDTree(projected[valid_idx])
    matches = []
    for qi, px in enumerate(pixels):
        cand = sorted(tree.query_ball_point(px, radius))
        if not cand:
            continue
        cand_idx = valid_idx[cand]
        if len(cand_idx) >= 2:
            found = match_descriptors(query[qi:qi + 1], lm_desc[cand_idx], ratio)
            if found:
                matches.append((qi, int(cand_idx[found[0].train_index])))
            continue
        dists = np.linalg.norm(lm_desc - query[qi], axis=1)
        only = int(cand_idx[0])
        second = np.min(np.delete(dists, only))
        if second > 0 and dists[only] / second < ratio:
            matches.append((qi, only))
    return matches


def track_pose(smap, keypoints, intr, prior=None, cfg=None, ratio=TRACKING_RATIO, gate_radius_px=GATE_RADIUS_PX):
    """
    当前帧相对地图定位

    Args:
        smap: SparseMap
        keypoints: 当前帧关键点
        intr: 当前相机内参
        prior: 先验位姿；给定时先在投影门限内匹配，不足时退回全局匹配
        cfg: PnPConfig
        ratio: 描述子比值检验阈值
        gate_radius_px: 先验投影门限半径

    Returns:
        PnPResult，keypoint_indices 与 correspondences 一一对应
    """
    cfg = cfg or PnPConfig()
    needed = max(6, cfg.min_inliers)
    if len(smap) == 0:
        raise TooFewMatches("地图为空")
    if len(keypoints) < cfg.min_inliers:
        raise TooFewMatches(f"关键点 {len(keypoints)} 个，少于 {cfg.min_inliers}")

    ids, positions, lm_desc = smap.arrays()
    query = descriptor_matrix(keypoints)
    if query.shape[1] != smap.descriptor_dimension:
        raise DimensionMismatch(f"关键点描述子维度 {query.shape[1]} != 地图维度 {smap.descriptor_dimension}")
    pixels = pixel_matrix(keypoints)

    pairs = []
    if prior is not None:
        projected, depth = project_points(intr, prior, positions)
        valid = np.isfinite(projected[:, 0]) & (depth > 0)
        pairs = _gated_matches(query, pixels, lm_desc, projected, valid, ratio, gate_radius_px)
        logger.debug(f"门限匹配: {len(pairs)} 对")
    if len(pairs) < cfg.min_inliers:
        pairs = [(m.query_index, m.train_index) for m in match_descriptors(query, lm_desc, ratio)]

    if len(pairs) < needed:
        raise TooFewMatches(f"匹配 {len(pairs)} 对，至少需要 {needed}")

    corrs = [
        Correspondence(keypoints[qi].pixel, tuple(positions[li]), int(ids[li]))
        for qi, li in pairs
    ]
    result = ransac_pnp(corrs, intr, cfg)
    result.keypoint_indices = [qi for qi, _ in pairs]
    return result


def should_insert_keyframe(smap, result, translation_m=KEYFRAME_TRANSLATION_M,
                           rotation_deg=KEYFRAME_ROTATION_DEG, inlier_ratio=KEYFRAME_INLIER_RATIO):
    nearest = smap.nearest_keyframe(result.pose)
    if nearest is None:
        return True
    translation = float(np.linalg.norm(nearest.pose.translation - result.pose.translation))
    rotation = rotation_difference_deg(nearest.pose, result.pose)
    return (translation >= translation_m
            or rotation >= rotation_deg
            or result.inlier_ratio < inlier_ratio)


def maybe_insert_keyframe(smap, keypoints, result, depth, intr, **thresholds):
    """
    满足平移/旋转/内点率任一条件时插入关键帧，并用未匹配且有深度的关键点新增路标

    Returns:
        是否插入
    """
    if not should_insert_keyframe(smap, result, **thresholds):
        return False

    links = {}
    for qi, corr, inlier in zip(result.keypoint_indices, result.correspondences, result.inlier_mask):
        if inlier and corr.landmark_id is not None:
            links[qi] = corr.landmark_id
            smap.landmarks[corr.landmark_id].observation_count += 1

    matched = set(result.keypoint_indices)
    if depth is not None:
        depths = [depth.depth_at(kp.pixel) for kp in keypoints]
    else:
        depths = [None] * len(keypoints)
    added = 0
    for i, kp in enumerate(keypoints):
        if i in matched or depths[i] is None or depths[i] <= 0:
            continue
        world = result.pose.transform(backproject(intr, kp.pixel, depths[i]))
        links[i] = smap.add_landmark(world, kp.descriptor)
        added += 1

    kf = smap.add_keyframe(result.pose, keypoints, links)
    logger.debug(f"插入关键帧 {kf.id}: 新增 {added} 个路标，共 {len(smap)} 个")
    return True


def map_to_document(smap):
    landmarks = [
        {'id': int(lid), 'xyz': smap.landmarks[lid].position, 'desc': smap.landmarks[lid].descriptor}
        for lid in sorted(smap.landmarks)
    ]
    keyframes = [
        {
            'id': kf.id,
            'pose': kf.pose_vector or pose_to_vector(kf.pose),
            'links': [[int(k), int(v)] for k, v in sorted(kf.landmark_links.items())],
        }
        for kf in smap.keyframes
    ]
    return with_checksum({'d': smap.descriptor_dimension, 'landmarks': landmarks, 'keyframes': keyframes})


def save_map(smap, path):
    """写地图文件（末尾带 CRC32）"""
    atomic_write_text(path, canonical_json(map_to_document(smap)) + '\n')
    logger.info(f"地图已保存: {path} ({len(smap)} 个路标, {len(smap.keyframes)} 个关键帧)")


def load_map(path):
    """读地图文件，校验 CRC32"""
    payload = verify_checksum(read_json(path), path)
    try:
        smap = SparseMap(payload['d'])
        for item in payload['landmarks']:
            lid = int(item['id'])
            desc = np.asarray(item['desc'], dtype=float)
            if len(desc) != smap.descriptor_dimension:
                raise FormatError(f"路标 {lid} 描述子维度 {len(desc)} != {smap.descriptor_dimension}", path=path)
            smap.landmarks[lid] = Landmark(lid, np.asarray(item['xyz'], dtype=float), desc)
        for item in payload['keyframes']:
            kf_id = int(item['id'])
            if smap.keyframes and kf_id <= smap.keyframes[-1].id:
                raise FormatError(f"关键帧 id 必须严格递增: {kf_id}", path=path)
            links = {int(k): int(v) for k, v in item['links']}
            if any(v not in smap.landmarks for v in links.values()):
                raise FormatError(f"关键帧 {kf_id} 链接到不存在的路标", path=path)
            vector = [float(x) for x in item['pose']]
            smap.keyframes.append(Keyframe(kf_id, pose_from_vector(vector), [], links, vector))
            for v in links.values():
                smap.landmarks[v].observation_count += 1
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"地图文件结构错误: {e}", path=path)
    smap._cache = None
    return smap
