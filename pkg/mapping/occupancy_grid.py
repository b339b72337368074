#!/usr/bin/env python3
"""
对数几率占据栅格
深度积分（Amanatides-Woo 体素遍历）、占据查询、射线投射与导出
"""

import logging
from collections import Counter

import numpy as np

from geometry.camera import backproject
from mapping.models import GridGeometry
from utils.exceptions import EndpointOutsideGrid
from utils.file_formats import read_voxel_file, write_voxel_file

logger = logging.getLogger(__name__)

FACE_EPS = 1e-9


def _start_index(f, d):
    """射线起点所在体素（沿 d 方向紧随起点的那个体素）"""
    fr = round(f)
    if abs(f - fr) < FACE_EPS:
        return int(fr) if d >= 0 else int(fr) - 1
    return int(np.floor(f))


def _end_index(f, d):
    """射线终点所在体素（终点恰在面上时取射线穿行中的体素）"""
    fr = round(f)
    if abs(f - fr) < FACE_EPS:
        return int(fr) - 1 if d > 0 else int(fr)
    return int(np.floor(f))


def _next_boundaries(origin, res, idx, step, start, d):
    """各轴下一个体素边界对应的射线参数，由当前下标直接计算，不做累加"""
    return [
        (origin[i] + (idx[i] + (1 if step[i] > 0 else 0)) * res - start[i]) / d[i] if step[i] else np.inf
        for i in range(3)
    ]


class OccupancyGrid:
    """体素对数几率栅格，单写多读"""

    def __init__(self, geometry, l_occ=0.85, l_free=-0.4, l_min=-2.0, l_max=3.5, occupied_threshold=0.0):
        if not l_min < l_max:
            raise ValueError(f"需要 l_min < l_max: {l_min}, {l_max}")
        self.geometry = geometry
        self.l_occ = float(l_occ)
        self.l_free = float(l_free)
        self.l_min = float(l_min)
        self.l_max = float(l_max)
        self.occupied_threshold = float(occupied_threshold)
        self.logodds = np.zeros(geometry.dims, dtype=np.float64)
        self.skipped_samples = 0

    @staticmethod
    def from_params(origin, resolution, dims, **constants):
        return OccupancyGrid(GridGeometry(origin, resolution, dims), **constants)

    @property
    def origin(self):
        return self.geometry.origin

    @property
    def resolution(self):
        return self.geometry.resolution

    @property
    def dims(self):
        return self.geometry.dims

    def traverse(self, start, end):
        """
        从 start 到 end 经过的体素（网格内部分），最后一个元素是终点体素

        终点必须在网格内
        """
        geo = self.geometry
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        d = end - start
        end_f = (end - geo.origin) / geo.resolution
        end_idx = [_end_index(end_f[i], d[i]) for i in range(3)]
        if not geo.contains_index(end_idx):
            raise EndpointOutsideGrid(f"终点 {end.tolist()} 在网格外")

        t_enter, t_exit = geo.slab_interval(start, d)
        t0 = max(0.0, t_enter)
        entry = start + t0 * d
        entry_f = (entry - geo.origin) / geo.resolution
        idx = [min(max(_start_index(entry_f[i], d[i]), 0), geo.dims[i] - 1) for i in range(3)]
        step = [1 if d[i] > 0 else (-1 if d[i] < 0 else 0) for i in range(3)]

        origin = geo.origin.tolist()
        res = float(geo.resolution)
        dims = list(geo.dims)
        start_l = start.tolist()
        d_l = d.tolist()
        visited = [tuple(idx)]
        limit = sum(dims) + 3
        while idx != end_idx and len(visited) <= limit:
            t_max = _next_boundaries(origin, res, idx, step, start_l, d_l)
            axis = min(range(3), key=t_max.__getitem__)
            if step[axis] * (idx[axis] - end_idx[axis]) >= 0:
                # 该轴已到终点，改走尚未到达的轴
                remaining = [i for i in range(3) if step[i] * (idx[i] - end_idx[i]) < 0]
                if not remaining:
                    break
                axis = min(remaining, key=lambda i: t_max[i])
            idx[axis] += step[axis]
            if not 0 <= idx[axis] < dims[axis]:
                break
            visited.append(tuple(idx))
        if visited[-1] != tuple(end_idx):
            visited.append(tuple(end_idx))
        return visited

    def integrate_depth(self, frame, pose, intr):
        """
        积分一帧深度样本

        每条射线上的体素最多更新一次；一帧的命中/穿过计数汇总后一次性加到栅格上再截断

        Returns:
            本帧跳过的样本数（终点在网格外）
        """
        hits = Counter()
        misses = Counter()
        skipped = 0
        camera_center = pose.translation
        for u, v, depth in frame.samples:
            if not depth > 0:
                skipped += 1
                continue
            endpoint = pose.transform(backproject(intr, (u, v), depth))
            try:
                voxels = self.traverse(camera_center, endpoint)
            except EndpointOutsideGrid:
                skipped += 1
                continue
            end_voxel = voxels[-1]
            hits[end_voxel] += 1
            for vox in set(voxels[:-1]):
                if vox != end_voxel:
                    misses[vox] += 1

        delta = np.zeros_like(self.logodds)
        for vox, n in misses.items():
            delta[vox] += n * self.l_free
        for vox, n in hits.items():
            delta[vox] += n * self.l_occ
        self.logodds = np.clip(self.logodds + delta, self.l_min, self.l_max)
        self.skipped_samples += skipped
        if skipped:
            logger.debug(f"帧 {frame.frame_index}: 跳过 {skipped} 个网格外样本")
        return skipped

    def is_occupied(self, p):
        idx = self.geometry.voxel_of(p)
        return idx is not None and self.logodds[idx] > self.occupied_threshold

    def occupied_mask(self):
        return self.logodds > self.occupied_threshold

    def cast_ray(self, ray, max_range):
        """
        沿射线找第一个占据体素

        Returns:
            (hit_point, voxel_index) 或 None；起点在占据体素内时命中点为起点
        """
        if not max_range > 0:
            raise ValueError(f"max_range 必须为正: {max_range}")
        geo = self.geometry
        o = ray.origin
        d = ray.direction
        t_enter, t_exit = geo.slab_interval(o, d)
        t_start = max(0.0, t_enter)
        t_end = min(t_exit, max_range)
        if t_start > t_end:
            return None

        f = (o + t_start * d - geo.origin) / geo.resolution
        idx = [min(max(_start_index(f[i], d[i]), 0), geo.dims[i] - 1) for i in range(3)]
        step = [1 if d[i] > 0 else (-1 if d[i] < 0 else 0) for i in range(3)]
        t_current = t_start
        origin = geo.origin.tolist()
        res = float(geo.resolution)
        dims = list(geo.dims)
        o_l = [float(x) for x in o]
        d_l = [float(x) for x in d]
        logodds = self.logodds
        threshold = self.occupied_threshold

        while True:
            if logodds[idx[0], idx[1], idx[2]] > threshold:
                return o + t_current * d, tuple(idx)
            t_max = _next_boundaries(origin, res, idx, step, o_l, d_l)
            axis = min(range(3), key=t_max.__getitem__)
            t_current = t_max[axis]
            if t_current > t_end:
                return None
            idx[axis] += step[axis]
            if not 0 <= idx[axis] < dims[axis]:
                return None

    def export_occupied_voxels(self):
        """占据体素中心与对数几率，按 (z, y, x) 升序"""
        idx = np.argwhere(self.occupied_mask())
        if len(idx) == 0:
            return []
        order = np.lexsort((idx[:, 0], idx[:, 1], idx[:, 2]))
        idx = idx[order]
        return [(self.geometry.center(i), float(self.logodds[tuple(i)])) for i in idx]


def integrate_depth(grid, frame, pose, intr):
    return grid.integrate_depth(frame, pose, intr)


def is_occupied(grid, p):
    return grid.is_occupied(p)


def cast_ray(grid, ray, max_range):
    return grid.cast_ray(ray, max_range)


def export_occupied_voxels(grid):
    return grid.export_occupied_voxels()


def save_grid(grid, path):
    geo = grid.geometry
    write_voxel_file(path, geo.origin, geo.resolution, geo.dims, grid.logodds)
    logger.info(f"栅格已保存: {path} (尺寸 {geo.dims}, 占据 {int(np.count_nonzero(grid.occupied_mask()))})")


def load_grid(path, **constants):
    """读栅格文件；对数几率常量不在文件中，可由参数给出"""
    origin, resolution, dims, values = read_voxel_file(path)
    grid = OccupancyGrid(GridGeometry(origin, resolution, dims), **constants)
    grid.logodds = values
    return grid
