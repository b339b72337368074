#!/usr/bin/env python3
"""
刚体变换
旋转矩阵、轴角指数/对数映射、四元数转换与 6DOF 位姿

约定：Pose 把相机坐标映射到世界坐标，p_world = R·p_cam + t
"""

import math
from dataclasses import dataclass

import numpy as np

from utils.exceptions import InvalidRotation

SMALL_ANGLE = 1e-8
ROTATION_TOLERANCE = 1e-9
# 接近 π 时改用对称部分提取旋转轴
_NEAR_PI_SIN = 1e-2


def hat(w):
    """向量 -> 反对称矩阵"""
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def vee(m):
    """反对称矩阵 -> 向量"""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def is_rotation(r, tol=ROTATION_TOLERANCE):
    """检查正交且行列式为 +1"""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(r) - 1.0) <= tol


def rotation_exp(axis_angle):
    """
    轴角 -> 旋转矩阵（Rodrigues）

    Args:
        axis_angle: 长度3的向量，弧度

    Returns:
        3x3 旋转矩阵；‖ω‖ < 1e-8 时用一阶近似
    """
    w = np.asarray(axis_angle, dtype=float).reshape(3)
    theta = float(np.linalg.norm(w))
    if theta < SMALL_ANGLE:
        return np.eye(3) + hat(w)
    k = hat(w / theta)
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def rotation_log(r):
    """
    旋转矩阵 -> 轴角

    θ 由 atan2(|v|, (tr-1)/2) 求得；θ≈0 用一阶近似，
    θ≈π 时从对称部分最大对角元所在列提取旋转轴
    """
    r = np.asarray(r, dtype=float)
    v = vee(r - r.T) * 0.5
    s = float(np.linalg.norm(v))
    c = (float(np.trace(r)) - 1.0) * 0.5
    theta = math.atan2(s, c)

    if theta < SMALL_ANGLE:
        return v
    if c < 0.0 and s < _NEAR_PI_SIN:
        sym = (r + r.T) * 0.5 - c * np.eye(3)
        col = int(np.argmax(np.diag(sym)))
        axis = sym[:, col]
        axis = axis / np.linalg.norm(axis)
        if float(axis @ v) < 0.0:
            axis = -axis
        return theta * axis
    return v * (theta / s)


def rotation_angle(r):
    """旋转角（弧度）"""
    return float(np.linalg.norm(rotation_log(r)))


def quaternion_to_rotation(q):
    """单位四元数 (qw, qx, qy, qz) -> 旋转矩阵，输入会先归一化"""
    q = np.asarray(q, dtype=float).reshape(4)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise InvalidRotation(f"四元数范数为零: {q.tolist()}")
    w, x, y, z = q / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def rotation_to_quaternion(r):
    """旋转矩阵 -> 单位四元数 (qw, qx, qy, qz)，规范化为 qw >= 0"""
    r = np.asarray(r, dtype=float)
    tr = float(np.trace(r))
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (r[2, 1] - r[1, 2]) / s,
            (r[0, 2] - r[2, 0]) / s,
            (r[1, 0] - r[0, 1]) / s,
        ])
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array([
            (r[2, 1] - r[1, 2]) / s,
            0.25 * s,
            (r[0, 1] + r[1, 0]) / s,
            (r[0, 2] + r[2, 0]) / s,
        ])
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array([
            (r[0, 2] - r[2, 0]) / s,
            (r[0, 1] + r[1, 0]) / s,
            0.25 * s,
            (r[1, 2] + r[2, 1]) / s,
        ])
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array([
            (r[1, 0] - r[0, 1]) / s,
            (r[0, 2] + r[2, 0]) / s,
            (r[1, 2] + r[2, 1]) / s,
            0.25 * s,
        ])
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


@dataclass(frozen=True, eq=False)
class Pose:
    """6DOF 位姿：相机坐标 -> 世界坐标"""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not is_rotation(r):
            raise InvalidRotation(f"不是合法旋转矩阵: {r.tolist()}")
        if not np.all(np.isfinite(t)):
            raise InvalidRotation(f"平移包含非有限值: {t.tolist()}")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, 'rotation', r)
        object.__setattr__(self, 'translation', t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_axis_angle(cls, axis_angle, translation):
        return cls(rotation_exp(axis_angle), translation)

    @property
    def position(self):
        """相机中心的世界坐标"""
        return self.translation

    def transform(self, points):
        """相机坐标 -> 世界坐标，points 形状 (3,) 或 (N,3)"""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def inverse_transform(self, points):
        """世界坐标 -> 相机坐标"""
        p = np.asarray(points, dtype=float)
        return (p - self.translation) @ self.rotation

    def compose(self, other):
        return compose(self, other)

    def inverse(self):
        return invert(self)

    def to_vector(self):
        return pose_to_vector(self)

    def __repr__(self):
        q = rotation_to_quaternion(self.rotation)
        return f"Pose(q={np.round(q, 6).tolist()}, t={np.round(self.translation, 6).tolist()})"


def compose(a, b):
    """a∘b：先应用 b 再应用 a"""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(p):
    rt = p.rotation.T
    return Pose(rt, -rt @ p.translation)


def pose_to_vector(pose):
    """位姿序列化为 7 个数 [qw, qx, qy, qz, tx, ty, tz]"""
    q = rotation_to_quaternion(pose.rotation)
    return [float(x) for x in q] + [float(x) for x in pose.translation]


def pose_from_vector(values):
    values = [float(x) for x in values]
    if len(values) != 7:
        raise InvalidRotation(f"位姿需要7个数，实际 {len(values)}")
    return Pose(quaternion_to_rotation(values[:4]), values[4:])


def rotation_difference_deg(a, b):
    """两个位姿旋转之间的夹角（度）"""
    return math.degrees(rotation_angle(a.rotation.T @ b.rotation))


def translation_difference(a, b):
    return float(np.linalg.norm(a.translation - b.translation))


def random_pose(rng, max_angle=math.pi, max_translation=1.0):
    """随机位姿（测试与仿真用）"""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return Pose(rotation_exp(axis * angle), rng.uniform(-max_translation, max_translation, size=3))


def look_at(position, target, up=(0.0, -1.0, 0.0)):
    """
    构造朝向目标的相机位姿（相机 +z 指向目标，y 向下）

    Args:
        position: 相机中心（世界坐标）
        target: 注视点（世界坐标）
        up: 世界坐标中的"上"方向，默认 -y
    """
    position = np.asarray(position, dtype=float)
    z = np.asarray(target, dtype=float) - position
    z /= np.linalg.norm(z)
    up = np.asarray(up, dtype=float)
    x = np.cross(-up, z)
    if np.linalg.norm(x) < 1e-9:
        x = np.cross(np.array([1.0, 0.0, 0.0]), z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return Pose(np.column_stack([x, y, z]), position)
