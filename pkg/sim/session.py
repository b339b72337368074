#!/usr/bin/env python3
"""
轨迹插值、注视会话生成与完整仿真
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from gaze.models import GazeSample
from geometry.camera import project
from geometry.transforms import Pose, compose, rotation_exp, rotation_log
from mapping.models import GridGeometry
from sim.models import GroundTruth, NoiseProfile, TruthSample
from sim.render import STREAM_RGBD, STREAM_SCENE_CAMERA, render_frame
from sim.scene import generate_scene
from utils.exceptions import BehindCamera, InvalidSpec, TargetNotVisible
from utils.parallel import run_ordered

logger = logging.getLogger(__name__)

STREAM_GAZE = 13


def interpolate_pose(a, b, f):
    """平移线性插值，旋转球面线性插值"""
    delta = rotation_log(a.rotation.T @ b.rotation)
    rotation = a.rotation @ rotation_exp(f * delta)
    return Pose(rotation, (1.0 - f) * a.translation + f * b.translation)


def interpolate_trajectory(spec):
    """
    TrajectorySpec -> 每帧位姿

    帧在关键位姿参数上均匀分布，首末帧与首末关键位姿重合
    """
    waypoints = spec.waypoints
    segments = len(waypoints) - 1
    poses = []
    for k in range(spec.frame_count):
        s = 0.0 if spec.frame_count == 1 else k * segments / (spec.frame_count - 1)
        i = min(int(math.floor(s)), segments - 1)
        poses.append(interpolate_pose(waypoints[i], waypoints[i + 1], s - i))
    return poses


def sample_timestamps(duration_ms, rate_hz):
    """[0, duration) 内按采样率取整的时间戳"""
    period = 1000.0 / rate_hz
    count = int(math.ceil(duration_ms / period - 1e-9))
    return [int(round(k * period)) for k in range(count)]


def _fixation_targets(script):
    return [(e.start_ms, e.end_ms, e.target) for e in script if not e.is_saccade]


def scripted_target(script, t):
    """
    t 时刻的注视目标点

    注视段内为其目标；扫视段及空档在前后两个注视目标之间线性移动
    """
    fixations = _fixation_targets(script)
    if not fixations:
        raise InvalidSpec("gaze_script: 至少需要一个带 target 的注视段")
    previous = None
    for start, end, target in fixations:
        if start <= t < end:
            return target
        if end <= t:
            previous = (end, target)
        elif previous is None:
            return target
        else:
            f = (t - previous[0]) / float(start - previous[0])
            return (1.0 - f) * previous[1] + f * target
    return previous[1]


def gaze_pixel_sigma(intr, gaze_deg_sigma):
    """角度噪声 -> 像素噪声：fx·tan(σ)，σ 是注视方向总偏差的均方根"""
    return intr.fx * math.tan(math.radians(gaze_deg_sigma))


def generate_gaze_session(scene, poses, script, intr, noise=None, rate_hz=30.0, frame_rate=30.0, seed=0):
    """
    按注视脚本生成眼动样本

    Args:
        scene: Scene
        poses: 场景相机每帧真实位姿
        script: GazeScriptEntry 列表
        intr: 场景相机内参

    Returns:
        (GazeSample 列表, GroundTruth 含每样本真实射线与解析交点)
    """
    noise = noise or NoiseProfile()
    rng = np.random.default_rng([seed, STREAM_GAZE])
    sigma_px = gaze_pixel_sigma(intr, noise.gaze_deg_sigma)
    labels = [p.roi_label for p in scene.spec.patches]

    samples = []
    truth = GroundTruth(frame_poses=list(poses))
    for t in sample_timestamps(script[-1].end_ms, rate_hz):
        frame_index = min(int(t * frame_rate / 1000.0), len(poses) - 1)
        pose = poses[frame_index]
        target = scripted_target(script, t)
        try:
            px = project(intr, pose, target)
        except BehindCamera:
            raise TargetNotVisible(f"t={t} ms: 目标 {np.round(target, 3).tolist()} 在相机后方")
        if not intr.contains(px[0], px[1]):
            raise TargetNotVisible(f"t={t} ms: 目标投影 {np.round(px, 1).tolist()} 在图像外")

        direction = target - pose.translation
        direction /= np.linalg.norm(direction)
        hit = scene.intersect(pose.translation, direction)
        point = None if hit is None else pose.translation + hit[0] * direction
        label = None if hit is None else labels[hit[1]]
        truth.gaze.append(TruthSample(t, pose.translation.copy(), direction, point, label))

        # sigma_px 是二维偏移的均方根，每轴取 sigma_px / √2
        noisy = np.asarray(px, dtype=float) + rng.normal(0.0, 1.0, size=2) * (sigma_px / math.sqrt(2.0))
        noisy = np.clip(noisy, [0.0, 0.0], [intr.width, intr.height])
        samples.append(GazeSample(t, frame_index, (float(noisy[0]), float(noisy[1])), True))
    logger.info(f"注视会话: {len(samples)} 个样本, {len(poses)} 帧")
    return samples, truth


@dataclass(eq=False)
class SimulationResult:
    """
    完整仿真结果；真值已换算到地图坐标系（第一帧 RGB-D 相机坐标系）
    """

    spec: object
    scene: object
    rgbd_frames: List = field(default_factory=list)
    scene_frames: List = field(default_factory=list)
    samples: List = field(default_factory=list)
    truth: GroundTruth = None
    grid_geometry: GridGeometry = None


def _to_map_frame(truth, anchor):
    to_map = anchor.inverse()
    gaze = [
        TruthSample(
            s.timestamp,
            to_map.transform(s.origin),
            to_map.rotation @ s.direction,
            None if s.point is None else to_map.transform(s.point),
            s.target_label,
        )
        for s in truth.gaze
    ]
    return GroundTruth(
        frame_poses=[compose(to_map, p) for p in truth.frame_poses],
        rgbd_poses=[compose(to_map, p) for p in truth.rgbd_poses],
        gaze=gaze,
        landmark_positions=to_map.transform(truth.landmark_positions),
        roi_polygons={k: to_map.transform(v) for k, v in truth.roi_polygons.items()},
    )


def map_grid_geometry(scene_spec, anchor, resolution):
    """场景包围盒在地图坐标系下的轴对齐包围盒"""
    lo, hi = scene_spec.bounds_min, scene_spec.bounds_max
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    mapped = anchor.inverse().transform(corners)
    return GridGeometry.from_bounds(mapped.min(axis=0), mapped.max(axis=0), resolution)


def run_simulation(spec, seed=None, workers=1):
    """
    由 SimulationSpec 生成建图帧、场景相机帧、注视样本与真值

    Args:
        seed: 覆盖场景种子；渲染与注视噪声的随机流也由它派生
    """
    scene_spec = spec.scene
    if seed is not None:
        scene_spec = replace(scene_spec, seed=int(seed))
    seed = scene_spec.seed
    scene, truth = generate_scene(scene_spec, spec.noise.descriptor_sigma)

    rgbd_poses = interpolate_trajectory(spec.mapping_trajectory)
    scene_poses = interpolate_trajectory(spec.gaze_trajectory)
    period_rgbd = 1000.0 / spec.mapping_trajectory.frame_rate
    period_scene = 1000.0 / spec.gaze_trajectory.frame_rate

    rgbd_frames = run_ordered(
        lambda k: render_frame(scene, rgbd_poses[k], spec.rgbd_intrinsics, spec.noise, k, seed,
                               clutter=spec.clutter_keypoints, depth_stride=spec.depth_stride_px,
                               timestamp=int(round(k * period_rgbd)), stream=STREAM_RGBD),
        range(len(rgbd_poses)), workers=workers, desc="渲染 RGB-D 帧",
    )
    scene_frames = run_ordered(
        lambda k: render_frame(scene, scene_poses[k], spec.scene_intrinsics, spec.noise, k, seed,
                               clutter=spec.clutter_keypoints, depth_stride=0,
                               timestamp=int(round(k * period_scene)), stream=STREAM_SCENE_CAMERA),
        range(len(scene_poses)), workers=workers, desc="渲染场景相机帧",
    )
    samples, gaze_truth = generate_gaze_session(
        scene, scene_poses, spec.gaze_script, spec.scene_intrinsics, spec.noise,
        rate_hz=spec.gaze_rate_hz, frame_rate=spec.gaze_trajectory.frame_rate, seed=seed,
    )
    truth.frame_poses = gaze_truth.frame_poses
    truth.gaze = gaze_truth.gaze
    truth.rgbd_poses = rgbd_poses

    anchor = rgbd_poses[0]
    return SimulationResult(
        spec=spec,
        scene=scene,
        rgbd_frames=rgbd_frames,
        scene_frames=scene_frames,
        samples=samples,
        truth=_to_map_frame(truth, anchor),
        grid_geometry=map_grid_geometry(scene_spec, anchor, spec.grid_resolution),
    )
