#!/usr/bin/env python3
"""
针孔相机模型
内参、投影/反投影、像素射线与视锥

坐标约定：相机沿 +z 观察，x 向右，y 向下（像素 v 向下增长）
"""

import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import (
    BadRange,
    BehindCamera,
    GeometryError,
    NonPositiveDepth,
    OutOfImage,
    ZeroDirection,
)

MIN_DEPTH = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """相机内参（像素单位）"""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise GeometryError(f"焦距必须为正: fx={self.fx}, fy={self.fy}")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise GeometryError(
                f"主点必须在图像内: c=({self.cx}, {self.cy}), size=({self.width}, {self.height})"
            )

    @property
    def matrix(self):
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])

    def contains(self, u, v):
        """像素是否在图像范围内（边界包含）"""
        return 0.0 <= u <= self.width and 0.0 <= v <= self.height

    def horizontal_fov_deg(self):
        return math.degrees(math.atan(self.cx / self.fx) + math.atan((self.width - self.cx) / self.fx))

    def vertical_fov_deg(self):
        return math.degrees(math.atan(self.cy / self.fy) + math.atan((self.height - self.cy) / self.fy))

    def to_dict(self):
        return {
            'fx': self.fx, 'fy': self.fy, 'cx': self.cx, 'cy': self.cy,
            'width': self.width, 'height': self.height,
        }

    @staticmethod
    def from_dict(data):
        return CameraIntrinsics(
            fx=float(data['fx']), fy=float(data['fy']),
            cx=float(data['cx']), cy=float(data['cy']),
            width=int(data['width']), height=int(data['height']),
        )


@dataclass(frozen=True, eq=False)
class Ray:
    """射线：原点 + 单位方向"""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.array(self.origin, dtype=float).reshape(3)
        d = np.array(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if not np.isfinite(n) or n < 1e-12:
            raise ZeroDirection(f"射线方向为零: {d.tolist()}")
        d = d / n
        o.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, 'origin', o)
        object.__setattr__(self, 'direction', d)

    def at(self, t):
        return self.origin + t * self.direction


@dataclass(frozen=True, eq=False)
class Frustum:
    """视锥：顶点、四条角射线（左上、右上、右下、左下）与近/远平面"""

    apex: np.ndarray
    corners: tuple
    near: float
    far: float

    def corner_points(self, distance):
        """指定距离处四个角点的世界坐标"""
        return [self.apex + distance * np.asarray(d) for d in self.corners]

    def _side_normals(self):
        # 指向视锥内部的侧面法向：上、右、下、左
        c = [np.asarray(d) for d in self.corners]
        normals = []
        for i in range(4):
            n = np.cross(c[i], c[(i + 1) % 4])
            n /= np.linalg.norm(n)
            normals.append(n)
        return normals

    def horizontal_angle_deg(self):
        """左右两侧面之间的夹角"""
        normals = self._side_normals()
        return _opposite_plane_angle(normals[1], normals[3])

    def vertical_angle_deg(self):
        normals = self._side_normals()
        return _opposite_plane_angle(normals[0], normals[2])


def _opposite_plane_angle(n1, n2):
    dihedral = math.atan2(np.linalg.norm(np.cross(n1, n2)), float(n1 @ n2))
    return math.degrees(math.pi - dihedral)


def project(intr, pose, p):
    """
    世界点投影到像素

    Returns:
        (u, v)，可能在图像范围外，由调用方过滤
    """
    pc = pose.inverse_transform(np.asarray(p, dtype=float).reshape(3))
    if pc[2] <= MIN_DEPTH:
        raise BehindCamera(f"点在相机后方: z={pc[2]:.3e}")
    return (intr.fx * pc[0] / pc[2] + intr.cx, intr.fy * pc[1] / pc[2] + intr.cy)


def project_points(intr, pose, points):
    """
    批量投影

    Returns:
        (pixels (N,2), depth (N,))；深度不为正的点像素为 nan
    """
    pc = pose.inverse_transform(np.asarray(points, dtype=float).reshape(-1, 3))
    z = pc[:, 2]
    with np.errstate(divide='ignore', invalid='ignore'):
        u = intr.fx * pc[:, 0] / z + intr.cx
        v = intr.fy * pc[:, 1] / z + intr.cy
    px = np.column_stack([u, v])
    px[z <= MIN_DEPTH] = np.nan
    return px, z


def backproject(intr, px, depth):
    """像素 + 深度 -> 相机坐标点"""
    if not depth > 0:
        raise NonPositiveDepth(f"深度必须为正: {depth}")
    u, v = float(px[0]), float(px[1])
    return np.array([(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, float(depth)])


def pixel_to_ray(intr, pose, px):
    """像素 -> 世界坐标射线，原点为相机中心"""
    u, v = float(px[0]), float(px[1])
    if not intr.contains(u, v):
        raise OutOfImage(f"像素超出图像范围: ({u}, {v})")
    d = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
    d /= np.linalg.norm(d)
    return Ray(pose.translation, pose.rotation @ d)


def _direction(x):
    if isinstance(x, Ray):
        return x.direction
    d = np.asarray(x, dtype=float).reshape(3)
    n = np.linalg.norm(d)
    if n < 1e-12:
        raise ZeroDirection(f"方向为零: {d.tolist()}")
    return d / n


def angular_error(a, b):
    """两条射线/方向之间的夹角（度），范围 [0, 180]"""
    da = _direction(a)
    db = _direction(b)
    return math.degrees(math.atan2(np.linalg.norm(np.cross(da, db)), float(np.clip(da @ db, -1.0, 1.0))))


def make_frustum(pose, intr, near, far):
    """由位姿与内参构造视锥，角射线穿过图像四角"""
    if not (0 < near < far):
        raise BadRange(f"需要 0 < near < far，实际 near={near}, far={far}")
    corner_px = [(0.0, 0.0), (intr.width, 0.0), (intr.width, intr.height), (0.0, intr.height)]
    corners = tuple(pixel_to_ray(intr, pose, px).direction for px in corner_px)
    return Frustum(np.array(pose.translation), corners, float(near), float(far))
