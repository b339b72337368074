#!/usr/bin/env python3
"""
合成 RGB-D / 场景相机帧
可见路标投影 + 像素/深度/描述子噪声 + 丢失，深度样本包括关键点处和可见平面片上的稠密网格
"""

import numpy as np

from features.models import Keypoint
from geometry.camera import MIN_DEPTH, project_points
from mapping.models import DepthFrame
from sim.models import NoiseProfile
from sim.scene import first_hits

OCCLUSION_EPS = 1e-6
STREAM_RGBD = 11
STREAM_SCENE_CAMERA = 12


def visible_landmarks(scene, pose, intr):
    """
    当前位姿下可见的路标（图像内、正深度、平面片朝向相机、未被遮挡）

    Returns:
        (landmark ids, 像素 (N,2), 相机坐标深度 (N,))
    """
    positions = scene.landmark_positions
    if len(positions) == 0:
        return np.zeros(0, dtype=int), np.zeros((0, 2)), np.zeros(0)
    px, z = project_points(intr, pose, positions)
    in_image = (z > MIN_DEPTH) & (px[:, 0] >= 0) & (px[:, 0] <= intr.width) \
        & (px[:, 1] >= 0) & (px[:, 1] <= intr.height)

    center = pose.translation
    normals = np.array([p.normal for p in scene.spec.patches])[scene.landmark_patch]
    facing = np.einsum('ij,ij->i', normals, center - positions) > 0

    ids = np.flatnonzero(in_image & facing)
    if len(ids) == 0:
        return ids, np.zeros((0, 2)), np.zeros(0)
    rays = positions[ids] - center
    dist = np.linalg.norm(rays, axis=1)
    t, patch = first_hits(scene, center, rays / dist[:, None])
    unoccluded = (patch == scene.landmark_patch[ids]) | (t >= dist - OCCLUSION_EPS)
    ids = ids[unoccluded]
    return ids, px[ids], z[ids]


def dense_depth(scene, pose, intr, stride):
    """按 stride 像素网格采样可见平面片的深度"""
    us = np.arange(stride / 2.0, intr.width, stride)
    vs = np.arange(stride / 2.0, intr.height, stride)
    uu, vv = np.meshgrid(us, vs)
    uu, vv = uu.ravel(), vv.ravel()
    d_cam = np.c_[(uu - intr.cx) / intr.fx, (vv - intr.cy) / intr.fy, np.ones(len(uu))]
    d_cam /= np.linalg.norm(d_cam, axis=1)[:, None]
    t, patch = first_hits(scene, pose.translation, d_cam @ pose.rotation.T)
    hit = patch >= 0
    return np.c_[uu[hit], vv[hit], t[hit] * d_cam[hit, 2]]


def render_frame(scene, pose, intr, noise=None, frame_index=0, seed=0, clutter=0,
                 depth_stride=16, timestamp=0, stream=STREAM_RGBD):
    """
    渲染一帧

    Args:
        scene: Scene
        pose: 相机位姿（相机 -> 世界）
        intr: 相机内参
        noise: NoiseProfile，None 时用默认噪声
        frame_index: 帧号，参与随机流种子
        clutter: 额外的随机杂点关键点数（无深度）
        depth_stride: 稠密深度网格间距（像素）；0 表示只在关键点处有深度
        stream: 随机流标签，区分 RGB-D 与场景相机

    Returns:
        DepthFrame；keypoints 的 landmark_id 为仿真路标下标，杂点为 None
    """
    noise = noise or NoiseProfile()
    rng = np.random.default_rng([seed, stream, frame_index])
    ids, px, z = visible_landmarks(scene, pose, intr)
    n = len(ids)
    dim = scene.descriptors.shape[1]

    px_noise = rng.normal(0.0, 1.0, size=(n, 2)) * noise.keypoint_px_sigma
    depth_noise = rng.normal(0.0, 1.0, size=n) * noise.depth_sigma_m
    desc_noise = rng.normal(0.0, 1.0, size=(n, dim)) * noise.descriptor_sigma
    kept = rng.random(n) >= noise.detection_dropout

    noisy_px = px + px_noise
    inside = (noisy_px[:, 0] >= 0) & (noisy_px[:, 0] <= intr.width) \
        & (noisy_px[:, 1] >= 0) & (noisy_px[:, 1] <= intr.height)
    kept &= inside

    keypoints = []
    samples = []
    for k in np.flatnonzero(kept):
        lid = int(ids[k])
        keypoints.append(Keypoint(tuple(noisy_px[k]), scene.descriptors[lid] + desc_noise[k], lid))
        depth = z[k] + depth_noise[k]
        if depth > 0:
            samples.append((noisy_px[k, 0], noisy_px[k, 1], depth))

    if clutter > 0:
        cu = rng.uniform(0.0, intr.width, size=clutter)
        cv = rng.uniform(0.0, intr.height, size=clutter)
        cd = rng.normal(size=(clutter, dim))
        keypoints.extend(Keypoint((cu[i], cv[i]), cd[i]) for i in range(clutter))

    samples = np.array(samples, dtype=float).reshape(-1, 3)
    if depth_stride > 0:
        grid = dense_depth(scene, pose, intr, depth_stride)
        grid[:, 2] += rng.normal(0.0, 1.0, size=len(grid)) * noise.depth_sigma_m
        samples = np.vstack([samples, grid[grid[:, 2] > 0]])
    return DepthFrame(frame_index, samples, keypoints, timestamp)
