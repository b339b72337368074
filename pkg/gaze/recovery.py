#!/usr/bin/env python3
"""
3D 视线恢复
逐帧定位场景相机（先验链式传递），再把注视像素射线投射到占据栅格
"""

import logging

from gaze.models import FrameStatus, GazePoint3D, GazeStatus, LocalizedFrame
from geometry.camera import make_frustum, pixel_to_ray
from mapping.sparse_map import track_pose
from pnp.models import PnPConfig
from utils.exceptions import EmptySession, MappingError, OutOfImage, PoseEstimationError
from utils.parallel import progress, run_ordered

logger = logging.getLogger(__name__)

DEFAULT_MAX_RANGE_M = 10.0


def localize_frame(smap, keypoints, intr, prev=None, cfg=None, frame_index=0, matching=None):
    """
    定位一帧；匹配不足或无一致集时返回 Lost 状态而不抛异常

    先验只取上一帧（且该帧已定位）的位姿；matching 为 track_pose 的 ratio / gate_radius_px
    """
    prior = prev.pose if prev is not None and prev.localized else None
    try:
        result = track_pose(smap, keypoints, intr, prior=prior, cfg=cfg or PnPConfig(), **(matching or {}))
    except (MappingError, PoseEstimationError) as e:
        logger.debug(f"帧 {frame_index} 丢失: {e}")
        return LocalizedFrame(frame_index, None, 0, float('nan'), FrameStatus.LOST)
    return LocalizedFrame(frame_index, result.pose, result.inlier_count, result.rmse_px, FrameStatus.LOCALIZED)


def recover_gaze(sample, frame, intr, grid, max_range=DEFAULT_MAX_RANGE_M):
    """单个注视样本 -> GazePoint3D"""
    if not sample.valid:
        return GazePoint3D(sample.timestamp, GazeStatus.INVALID)
    if frame is None or not frame.localized:
        return GazePoint3D(sample.timestamp, GazeStatus.FRAME_LOST)
    try:
        ray = pixel_to_ray(intr, frame.pose, sample.gaze_px)
    except OutOfImage:
        logger.warning(f"t={sample.timestamp}: 注视点超出图像 {sample.gaze_px}，按无效处理")
        return GazePoint3D(sample.timestamp, GazeStatus.INVALID)
    hit = grid.cast_ray(ray, max_range)
    if hit is None:
        return GazePoint3D(sample.timestamp, GazeStatus.MISS, ray=ray, frame_pose=frame.pose)
    return GazePoint3D(sample.timestamp, GazeStatus.HIT, point=hit[0], ray=ray, frame_pose=frame.pose)


def localize_session(frame_keypoints, smap, intr, cfg=None, frame_indices=None, matching=None):
    """按帧号顺序定位，先验链式传递"""
    indices = sorted(set(frame_keypoints) | set(frame_indices or []))
    frames = []
    prev = None
    for index in progress(indices, desc="定位帧"):
        frame = localize_frame(smap, frame_keypoints.get(index, []), intr, prev, cfg, frame_index=index,
                               matching=matching)
        frames.append(frame)
        prev = frame
    return frames


def recover_session(samples, frame_keypoints, smap, grid, intr, cfg=None,
                    max_range=DEFAULT_MAX_RANGE_M, workers=1, matching=None):
    """
    整个会话的视线恢复

    Args:
        samples: GazeSample 列表
        frame_keypoints: {frame_index: [Keypoint]}
        smap: SparseMap
        grid: OccupancyGrid
        intr: 场景相机内参
        workers: 射线投射线程数（栅格此时只读）

    Returns:
        (points 按时间戳排序, frames 按帧号排序)
    """
    if not samples:
        raise EmptySession("会话中没有注视样本")
    frames = localize_session(frame_keypoints, smap, intr, cfg, [s.frame_index for s in samples], matching)
    by_index = {f.frame_index: f for f in frames}

    ordered = sorted(samples, key=lambda s: (s.timestamp, s.frame_index))
    points = run_ordered(
        lambda s: recover_gaze(s, by_index.get(s.frame_index), intr, grid, max_range),
        ordered,
        workers=workers,
        desc="投射视线",
    )
    summary = session_summary(points, frames)
    logger.info(
        f"视线恢复: 定位 {summary['localized_frames']}/{summary['frames']} 帧 "
        f"({summary['localized_pct']:.1f}%), 命中 {summary['hits']}/{summary['samples']} "
        f"({summary['hit_pct']:.1f}%)"
    )
    return points, frames


def session_summary(points, frames):
    """定位率与命中率"""
    localized = sum(1 for f in frames if f.localized)
    hits = sum(1 for p in points if p.is_hit)
    return {
        'frames': len(frames),
        'localized_frames': localized,
        'localized_pct': 100.0 * localized / len(frames) if frames else 0.0,
        'samples': len(points),
        'hits': hits,
        'hit_pct': 100.0 * hits / len(points) if points else 0.0,
    }


def frustum_track(frames, intr, near, far):
    """每个已定位帧一个视锥，丢失帧跳过"""
    return [make_frustum(f.pose, intr, near, far) for f in frames if f.localized]
