#!/usr/bin/env python3
"""
仿真数据模型
场景、轨迹、噪声配置与真值；所有规格都可由 JSON 文档构造，字段错误报告字段路径
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from geometry.camera import CameraIntrinsics
from geometry.transforms import Pose, look_at, pose_from_vector
from utils.exceptions import GeometryError, InvalidSpec

DEFAULT_REFERENCE_PX_PER_M = 1000.0


def _vec3(data, where):
    try:
        v = np.asarray(data, dtype=float).reshape(3)
    except (TypeError, ValueError):
        raise InvalidSpec(f"{where}: 需要3个数，实际 {data!r}")
    if not np.all(np.isfinite(v)):
        raise InvalidSpec(f"{where}: 包含非有限值")
    return v


def _number(data, key, where, default=None, positive=False, minimum=None):
    if key not in data:
        if default is None:
            raise InvalidSpec(f"{where}.{key}: 缺少字段")
        return default
    try:
        value = float(data[key])
    except (TypeError, ValueError):
        raise InvalidSpec(f"{where}.{key}: 不是数值 {data[key]!r}")
    if positive and not value > 0:
        raise InvalidSpec(f"{where}.{key}: 必须为正，实际 {value}")
    if minimum is not None and value < minimum:
        raise InvalidSpec(f"{where}.{key}: 不能小于 {minimum}，实际 {value}")
    return value


@dataclass(frozen=True, eq=False)
class PatchSpec:
    """矩形平面片：corner + s·edge_u + t·edge_v，s, t ∈ [0, 1]"""

    corner: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    density: float
    roi_label: Optional[str] = None
    reference_px_per_m: float = DEFAULT_REFERENCE_PX_PER_M

    def __post_init__(self):
        for name in ('corner', 'edge_u', 'edge_v'):
            v = np.array(getattr(self, name), dtype=float).reshape(3)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not self.density > 0:
            raise InvalidSpec(f"平面片密度必须为正: {self.density}")
        if np.linalg.norm(np.cross(self.edge_u, self.edge_v)) < 1e-12:
            raise InvalidSpec("平面片的两条边退化（零长度或平行）")

    @property
    def normal(self):
        """正面法向：从正面看 edge_u 向右、edge_v 向下（与参考图像方向一致）"""
        n = np.cross(self.edge_v, self.edge_u)
        return n / np.linalg.norm(n)

    @property
    def area(self):
        return float(np.linalg.norm(np.cross(self.edge_u, self.edge_v)))

    @property
    def center(self):
        return self.corner + 0.5 * (self.edge_u + self.edge_v)

    def corners(self):
        """四角：corner, +u, +u+v, +v"""
        c, u, v = self.corner, self.edge_u, self.edge_v
        return np.array([c, c + u, c + u + v, c + v])

    def reference_size(self):
        return (int(round(np.linalg.norm(self.edge_u) * self.reference_px_per_m)),
                int(round(np.linalg.norm(self.edge_v) * self.reference_px_per_m)))

    def point_at(self, s, t):
        return self.corner + np.multiply.outer(s, self.edge_u) + np.multiply.outer(t, self.edge_v)

    def intersect(self, origin, direction, eps=1e-12):
        """射线与平面片的交点参数 t，未相交返回 None"""
        n = np.cross(self.edge_u, self.edge_v)
        denom = float(direction @ n)
        if abs(denom) < eps:
            return None
        t = float((self.corner - origin) @ n) / denom
        if t <= 0:
            return None
        rel = origin + t * direction - self.corner
        # 平面内坐标（u, v 不一定正交）
        g = np.array([[self.edge_u @ self.edge_u, self.edge_u @ self.edge_v],
                      [self.edge_u @ self.edge_v, self.edge_v @ self.edge_v]])
        s, r = np.linalg.solve(g, np.array([rel @ self.edge_u, rel @ self.edge_v]))
        if -1e-12 <= s <= 1 + 1e-12 and -1e-12 <= r <= 1 + 1e-12:
            return t
        return None

    @staticmethod
    def from_dict(data, where='patch'):
        if not isinstance(data, dict):
            raise InvalidSpec(f"{where}: 必须是对象")
        for key in ('corner', 'edge_u', 'edge_v'):
            if key not in data:
                raise InvalidSpec(f"{where}.{key}: 缺少字段")
        label = data.get('roi_label')
        return PatchSpec(
            corner=_vec3(data['corner'], f"{where}.corner"),
            edge_u=_vec3(data['edge_u'], f"{where}.edge_u"),
            edge_v=_vec3(data['edge_v'], f"{where}.edge_v"),
            density=_number(data, 'density', where, positive=True),
            roi_label=None if label is None else str(label),
            reference_px_per_m=_number(data, 'reference_px_per_m', where,
                                       default=DEFAULT_REFERENCE_PX_PER_M, positive=True),
        )


@dataclass(frozen=True, eq=False)
class SceneSpec:
    patches: tuple
    bounds_min: np.ndarray
    bounds_max: np.ndarray
    descriptor_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'bounds_min', np.array(self.bounds_min, dtype=float).reshape(3))
        object.__setattr__(self, 'bounds_max', np.array(self.bounds_max, dtype=float).reshape(3))
        object.__setattr__(self, 'patches', tuple(self.patches))
        if not np.all(self.bounds_max > self.bounds_min):
            raise InvalidSpec("包围盒 bounds_max 必须在每个轴上大于 bounds_min")
        if self.descriptor_dim < 1:
            raise InvalidSpec(f"描述子维度必须为正: {self.descriptor_dim}")
        for i, patch in enumerate(self.patches):
            corners = patch.corners()
            if np.any(corners < self.bounds_min - 1e-9) or np.any(corners > self.bounds_max + 1e-9):
                raise InvalidSpec(f"patches[{i}]: 平面片超出包围盒")
        labels = self.roi_labels
        if len(labels) != len(set(labels)):
            raise InvalidSpec(f"ROI 标签重复: {labels}")

    @property
    def roi_labels(self):
        return [p.roi_label for p in self.patches if p.roi_label is not None]

    @staticmethod
    def from_dict(data, where='scene'):
        if not isinstance(data, dict):
            raise InvalidSpec(f"{where}: 必须是对象")
        patches = data.get('patches')
        if not isinstance(patches, list) or not patches:
            raise InvalidSpec(f"{where}.patches: 需要非空列表")
        bounds = data.get('bounds')
        if not isinstance(bounds, dict):
            raise InvalidSpec(f"{where}.bounds: 需要 {{min, max}} 对象")
        return SceneSpec(
            patches=tuple(PatchSpec.from_dict(p, f"{where}.patches[{i}]") for i, p in enumerate(patches)),
            bounds_min=_vec3(bounds.get('min'), f"{where}.bounds.min"),
            bounds_max=_vec3(bounds.get('max'), f"{where}.bounds.max"),
            descriptor_dim=int(_number(data, 'descriptor_dim', where, default=32, positive=True)),
            seed=int(_number(data, 'seed', where, default=0)),
        )


def _pose_from_dict(data, where):
    if isinstance(data, dict) and 'position' in data:
        position = _vec3(data['position'], f"{where}.position")
        target = _vec3(data.get('look_at'), f"{where}.look_at")
        if np.linalg.norm(target - position) < 1e-9:
            raise InvalidSpec(f"{where}: look_at 与 position 重合")
        return look_at(position, target)
    if isinstance(data, dict) and 'pose' in data:
        try:
            return pose_from_vector(data['pose'])
        except (GeometryError, TypeError, ValueError) as e:
            raise InvalidSpec(f"{where}.pose: {e}")
    raise InvalidSpec(f"{where}: 需要 {{position, look_at}} 或 {{pose: [qw,qx,qy,qz,tx,ty,tz]}}")


@dataclass(frozen=True)
class TrajectorySpec:
    """关键位姿 + 帧数；平移线性插值，旋转球面线性插值"""

    waypoints: tuple
    frame_count: int
    frame_rate: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, 'waypoints', tuple(self.waypoints))
        if len(self.waypoints) < 2:
            raise InvalidSpec(f"轨迹至少需要2个关键位姿，实际 {len(self.waypoints)}")
        if self.frame_count < 1:
            raise InvalidSpec(f"帧数必须为正: {self.frame_count}")
        if not self.frame_rate > 0:
            raise InvalidSpec(f"帧率必须为正: {self.frame_rate}")

    @staticmethod
    def from_dict(data, where='trajectory'):
        if not isinstance(data, dict):
            raise InvalidSpec(f"{where}: 必须是对象")
        waypoints = data.get('waypoints')
        if not isinstance(waypoints, list):
            raise InvalidSpec(f"{where}.waypoints: 需要列表")
        return TrajectorySpec(
            waypoints=tuple(_pose_from_dict(w, f"{where}.waypoints[{i}]") for i, w in enumerate(waypoints)),
            frame_count=int(_number(data, 'frame_count', where, positive=True)),
            frame_rate=_number(data, 'frame_rate', where, default=30.0, positive=True),
        )


@dataclass(frozen=True)
class NoiseProfile:
    """默认值：关键点 0.5 px、深度 5 mm、注视 0.5°"""

    keypoint_px_sigma: float = 0.5
    depth_sigma_m: float = 0.005
    detection_dropout: float = 0.0
    gaze_deg_sigma: float = 0.5
    descriptor_sigma: float = 0.02

    def __post_init__(self):
        for name in ('keypoint_px_sigma', 'depth_sigma_m', 'gaze_deg_sigma', 'descriptor_sigma'):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"noise.{name}: 不能为负")
        if not 0.0 <= self.detection_dropout <= 1.0:
            raise InvalidSpec(f"noise.detection_dropout: 必须在 [0, 1] 内，实际 {self.detection_dropout}")

    @staticmethod
    def zero():
        return NoiseProfile(0.0, 0.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_dict(data, where='noise'):
        data = data or {}
        d = NoiseProfile()
        return NoiseProfile(
            keypoint_px_sigma=_number(data, 'keypoint_px_sigma', where, default=d.keypoint_px_sigma, minimum=0),
            depth_sigma_m=_number(data, 'depth_sigma_m', where, default=d.depth_sigma_m, minimum=0),
            detection_dropout=_number(data, 'detection_dropout', where, default=d.detection_dropout, minimum=0),
            gaze_deg_sigma=_number(data, 'gaze_deg_sigma', where, default=d.gaze_deg_sigma, minimum=0),
            descriptor_sigma=_number(data, 'descriptor_sigma', where, default=d.descriptor_sigma, minimum=0),
        )


@dataclass(frozen=True, eq=False)
class GazeScriptEntry:
    """[start_ms, end_ms) 内注视 target；target 为 None 表示扫视（在前后目标间移动）"""

    start_ms: int
    end_ms: int
    target: Optional[np.ndarray] = None

    @property
    def is_saccade(self):
        return self.target is None

    @staticmethod
    def from_dict(data, where='gaze_script'):
        if not isinstance(data, dict):
            raise InvalidSpec(f"{where}: 必须是对象")
        start = int(_number(data, 'start_ms', where, minimum=0))
        end = int(_number(data, 'end_ms', where))
        if end <= start:
            raise InvalidSpec(f"{where}: end_ms 必须大于 start_ms")
        target = data.get('target')
        return GazeScriptEntry(start, end, None if target is None else _vec3(target, f"{where}.target"))


@dataclass(frozen=True, eq=False)
class SimulationSpec:
    """一次完整仿真：场景 + 两台相机 + 建图/眼动轨迹 + 注视脚本"""

    scene: SceneSpec
    rgbd_intrinsics: CameraIntrinsics
    scene_intrinsics: CameraIntrinsics
    mapping_trajectory: TrajectorySpec
    gaze_trajectory: TrajectorySpec
    gaze_script: tuple
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    gaze_rate_hz: float = 30.0
    grid_resolution: float = 0.02
    depth_stride_px: int = 16
    clutter_keypoints: int = 0

    @staticmethod
    def from_dict(data):
        if not isinstance(data, dict):
            raise InvalidSpec("仿真规格必须是 JSON 对象")
        for key in ('scene', 'rgbd_intrinsics', 'scene_intrinsics', 'mapping_trajectory',
                    'gaze_trajectory', 'gaze_script'):
            if key not in data:
                raise InvalidSpec(f"{key}: 缺少字段")
        intrinsics = {}
        for key in ('rgbd_intrinsics', 'scene_intrinsics'):
            try:
                intrinsics[key] = CameraIntrinsics.from_dict(data[key])
            except (KeyError, TypeError, ValueError, GeometryError) as e:
                raise InvalidSpec(f"{key}: 内参无效 ({e})")
        script = data['gaze_script']
        if not isinstance(script, list) or not script:
            raise InvalidSpec("gaze_script: 需要非空列表")
        entries = tuple(GazeScriptEntry.from_dict(e, f"gaze_script[{i}]") for i, e in enumerate(script))
        for i in range(1, len(entries)):
            if entries[i].start_ms < entries[i - 1].end_ms:
                raise InvalidSpec(f"gaze_script[{i}]: 与前一段重叠")
        return SimulationSpec(
            scene=SceneSpec.from_dict(data['scene']),
            rgbd_intrinsics=intrinsics['rgbd_intrinsics'],
            scene_intrinsics=intrinsics['scene_intrinsics'],
            mapping_trajectory=TrajectorySpec.from_dict(data['mapping_trajectory'], 'mapping_trajectory'),
            gaze_trajectory=TrajectorySpec.from_dict(data['gaze_trajectory'], 'gaze_trajectory'),
            gaze_script=entries,
            noise=NoiseProfile.from_dict(data.get('noise'), 'noise'),
            gaze_rate_hz=_number(data, 'gaze_rate_hz', 'simulation', default=30.0, positive=True),
            grid_resolution=_number(data, 'grid_resolution', 'simulation', default=0.02, positive=True),
            depth_stride_px=int(_number(data, 'depth_stride_px', 'simulation', default=16, positive=True)),
            clutter_keypoints=int(_number(data, 'clutter_keypoints', 'simulation', default=0, minimum=0)),
        )


@dataclass(eq=False)
class Scene:
    """generate_scene 的结果"""

    spec: SceneSpec
    landmark_positions: np.ndarray
    descriptors: np.ndarray
    landmark_patch: np.ndarray
    # 每个 ROI 平面片的参考外观与其路标 id
    references: list = field(default_factory=list)
    reference_landmarks: Dict[str, List[int]] = field(default_factory=dict)

    @property
    def landmark_count(self):
        return len(self.landmark_positions)

    def intersect(self, origin, direction):
        """
        射线与所有平面片的最近交点

        Returns:
            (t, patch_index) 或 None
        """
        best = None
        for i, patch in enumerate(self.spec.patches):
            t = patch.intersect(origin, direction)
            if t is not None and (best is None or t < best[0]):
                best = (t, i)
        return best


@dataclass(frozen=True, eq=False)
class TruthSample:
    """一个注视样本的真值：真实视线射线与解析交点"""

    timestamp: int
    origin: np.ndarray
    direction: np.ndarray
    point: Optional[np.ndarray] = None
    target_label: Optional[str] = None

    def to_record(self):
        record = {
            't_ms': int(self.timestamp),
            'ray': {'o': [float(x) for x in self.origin], 'd': [float(x) for x in self.direction]},
        }
        if self.point is not None:
            record['point'] = [float(x) for x in self.point]
        if self.target_label is not None:
            record['roi_label'] = self.target_label
        return record

    @staticmethod
    def from_record(record):
        point = record.get('point')
        return TruthSample(
            timestamp=int(record['t_ms']),
            origin=np.asarray(record['ray']['o'], dtype=float),
            direction=np.asarray(record['ray']['d'], dtype=float),
            point=None if point is None else np.asarray(point, dtype=float),
            target_label=record.get('roi_label'),
        )


@dataclass(eq=False)
class GroundTruth:
    frame_poses: List[Pose] = field(default_factory=list)
    rgbd_poses: List[Pose] = field(default_factory=list)
    gaze: List[TruthSample] = field(default_factory=list)
    landmark_positions: Optional[np.ndarray] = None
    roi_polygons: Dict[str, np.ndarray] = field(default_factory=dict)
