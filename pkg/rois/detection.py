#!/usr/bin/env python3
"""
参考外观检测
词汇树检索候选参考 -> 比值检验匹配 -> RANSAC 单应性几何验证
"""

import logging
from dataclasses import dataclass

import numpy as np

from features.matching import match_descriptors
from features.models import descriptor_matrix, pixel_matrix
from features.vocabulary_tree import VocabularyTree
from rois.homography import apply_homography, homography_dlt_ransac
from rois.models import RoiDetection
from utils.exceptions import InsufficientPairs, NoConsensus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionThresholds:
    ratio: float = 0.8
    reprojection_px: float = 3.0
    min_inliers: int = 12
    min_area_px2: float = 400.0
    homography_iterations: int = 500
    seed: int = 0

    @staticmethod
    def from_dict(data):
        data = data or {}
        d = DetectionThresholds()
        return DetectionThresholds(
            ratio=float(data.get('ratio', d.ratio)),
            reprojection_px=float(data.get('homography_threshold_px', d.reprojection_px)),
            min_inliers=int(data.get('min_inliers', d.min_inliers)),
            min_area_px2=float(data.get('min_area_px2', d.min_area_px2)),
            homography_iterations=int(data.get('homography_iterations', d.homography_iterations)),
            seed=int(data.get('seed', d.seed)),
        )


def polygon_area(quad):
    """鞋带公式，带符号"""
    x, y = quad[:, 0], quad[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_convex(quad):
    """严格凸（所有相邻边叉积同号且非零）"""
    crosses = []
    n = len(quad)
    for i in range(n):
        a = quad[(i + 1) % n] - quad[i]
        b = quad[(i + 2) % n] - quad[(i + 1) % n]
        crosses.append(a[0] * b[1] - a[1] * b[0])
    crosses = np.array(crosses)
    if not np.all(np.isfinite(crosses)):
        return False
    return bool(np.all(crosses > 0) or np.all(crosses < 0))


class RoiDetector:
    """在扫描视频帧中检测参考外观"""

    def __init__(self, references, tree=None, k=3, depth=2, top_n=5, thresholds=None, tree_seed=0):
        """
        Args:
            references: ReferenceAppearance 列表，下标即数据库 image_id
            tree: 已训练的 VocabularyTree；None 时用参考描述子训练
        """
        self.references = list(references)
        self.top_n = top_n
        self.thresholds = thresholds or DetectionThresholds()
        self._ref_desc = [descriptor_matrix(r.keypoints) for r in self.references]
        self._ref_px = [pixel_matrix(r.keypoints) for r in self.references]
        if tree is None:
            tree = VocabularyTree(k, depth).train(np.vstack(self._ref_desc), seed=tree_seed)
        if tree.image_count == 0:
            for i, desc in enumerate(self._ref_desc):
                tree.add_image(i, desc)
        self.tree = tree
        self.rejected = 0

    def _verify(self, ref_index, frame_desc, frame_px, frame_index):
        ref = self.references[ref_index]
        th = self.thresholds
        matches = match_descriptors(self._ref_desc[ref_index], frame_desc, th.ratio)
        if len(matches) < th.min_inliers:
            return None
        src = np.array([self._ref_px[ref_index][m.query_index] for m in matches])
        dst = np.array([frame_px[m.train_index] for m in matches])
        try:
            h, mask = homography_dlt_ransac((src, dst), th.reprojection_px, th.seed + frame_index,
                                            iterations=th.homography_iterations)
        except (NoConsensus, InsufficientPairs):
            return None
        inliers = int(np.count_nonzero(mask))
        quad = apply_homography(h, ref.corners())
        if inliers < th.min_inliers or not is_convex(quad) or abs(polygon_area(quad)) < th.min_area_px2:
            self.rejected += 1
            logger.debug(f"帧 {frame_index}: 参考 {ref.roi_label} 验证失败 (内点 {inliers})")
            return None
        return RoiDetection(ref.roi_label, frame_index, h, quad, inliers)

    def detect(self, keypoints, frame_index=0):
        """返回本帧的检测结果，按参考下标排序"""
        if len(keypoints) < self.thresholds.min_inliers:
            return []
        frame_desc = descriptor_matrix(keypoints)
        frame_px = pixel_matrix(keypoints)
        shortlist = self.tree.query_image(frame_desc, self.top_n)
        detections = []
        for ref_index in sorted(image_id for image_id, _ in shortlist):
            det = self._verify(ref_index, frame_desc, frame_px, frame_index)
            if det is not None:
                detections.append(det)
        return detections


def detect_roi(references, tree, keypoints, top_n=5, thresholds=None, frame_index=0):
    """函数式入口：tree 需已训练并以参考下标登记为数据库图像"""
    return RoiDetector(references, tree=tree, top_n=top_n, thresholds=thresholds).detect(keypoints, frame_index)
