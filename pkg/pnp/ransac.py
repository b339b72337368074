#!/usr/bin/env python3
"""
RANSAC PnP
假设从种子预先生成，分批打分；结果与线程数无关，平局取最小假设编号
"""

import logging
import math

import numpy as np

from pnp.epnp import epnp_solve_arrays
from pnp.models import PnPConfig, PnPResult, correspondence_arrays
from pnp.refine import refine_pose_arrays, reprojection_errors, reprojection_rmse_arrays
from utils.exceptions import (
    GeometryError,
    InsufficientCorrespondences,
    NoConsensus,
    PoseEstimationError,
)
from utils.parallel import run_ordered

logger = logging.getLogger(__name__)

SAMPLE_SIZE = 6
BATCH_SIZE = 16


def required_iterations(inlier_ratio, confidence, sample_size=SAMPLE_SIZE):
    """达到置信度所需的迭代数"""
    if inlier_ratio <= 0.0:
        return math.inf
    if inlier_ratio >= 1.0:
        return 1
    denom = math.log(1.0 - inlier_ratio ** sample_size)
    if denom == 0.0:
        return math.inf
    return math.ceil(math.log(1.0 - confidence) / denom)


def generate_samples(n, iterations, seed, sample_size=SAMPLE_SIZE):
    """由种子预生成全部最小样本"""
    rng = np.random.default_rng(seed)
    return [np.sort(rng.choice(n, size=sample_size, replace=False)) for _ in range(iterations)]


def _score(sample, pixels, points, intr, threshold):
    try:
        pose = epnp_solve_arrays(pixels[sample], points[sample], intr)
    except (PoseEstimationError, GeometryError, np.linalg.LinAlgError):
        return None, 0
    errors, _ = reprojection_errors(pose, pixels, points, intr)
    return pose, int(np.count_nonzero(errors < threshold))


def ransac_pnp(corrs, intr, cfg=None):
    """
    鲁棒 PnP：6点 EPnP 假设 + 内点计数，最佳一致集上做 LM 优化

    Returns:
        PnPResult；inlier_mask 在优化后重新计算一次
    """
    cfg = cfg or PnPConfig()
    n = len(corrs)
    needed = max(SAMPLE_SIZE, cfg.min_inliers)
    if n < needed:
        raise InsufficientCorrespondences(f"RANSAC PnP 需要至少 {needed} 个对应，实际 {n}")

    pixels, points = correspondence_arrays(corrs)
    samples = generate_samples(n, cfg.ransac_iterations, cfg.seed)

    best_index, best_count, best_pose = -1, 0, None
    processed = 0
    limit = cfg.ransac_iterations
    while processed < limit:
        batch = list(range(processed, min(processed + BATCH_SIZE, cfg.ransac_iterations)))
        scores = run_ordered(
            lambda i: _score(samples[i], pixels, points, intr, cfg.inlier_threshold_px),
            batch,
            workers=cfg.workers,
        )
        for i, (pose, count) in zip(batch, scores):
            if pose is not None and count > best_count:
                best_index, best_count, best_pose = i, count, pose
        processed = batch[-1] + 1
        if best_count > 0:
            limit = min(cfg.ransac_iterations, required_iterations(best_count / n, cfg.confidence))

    logger.debug(f"RANSAC: {processed} 个假设, 最佳 #{best_index} 内点 {best_count}/{n}")
    if best_pose is None or best_count < cfg.min_inliers:
        raise NoConsensus(f"一致集不足: {best_count} < {cfg.min_inliers}")

    errors, _ = reprojection_errors(best_pose, pixels, points, intr)
    mask = errors < cfg.inlier_threshold_px
    outcome = refine_pose_arrays(best_pose, pixels[mask], points[mask], intr, cfg)

    errors, _ = reprojection_errors(outcome.pose, pixels, points, intr)
    mask = errors < cfg.inlier_threshold_px
    count = int(np.count_nonzero(mask))
    if count < cfg.min_inliers:
        raise NoConsensus(f"优化后一致集不足: {count} < {cfg.min_inliers}")

    rmse = reprojection_rmse_arrays(outcome.pose, pixels[mask], points[mask], intr)
    return PnPResult(pose=outcome.pose, inlier_mask=mask, rmse_px=rmse, correspondences=list(corrs))
