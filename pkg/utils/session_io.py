#!/usr/bin/env python3
"""
会话文件读写
会话目录：清单、逐帧特征/深度文件、注视 JSONL、真值与参考外观；以及流水线输出（gaze3d、轨迹、ROI）
"""

import os
import logging

import numpy as np

from features.extraction import extract_features
from gaze.models import FrameStatus, GazePoint3D, GazeSample, GazeStatus, LocalizedFrame
from geometry.camera import CameraIntrinsics, Ray, make_frustum
from geometry.transforms import pose_from_vector, pose_to_vector
from mapping.models import DepthFrame, GridGeometry
from rois.models import ReferenceAppearance, ROI3D
from sim.models import TruthSample
from utils.exceptions import FormatError, MissingInput
from utils.file_formats import read_json, read_jsonl, require_fields, write_json, write_jsonl
from utils.parallel import progress

logger = logging.getLogger(__name__)

SESSION_FORMAT = 'gaze3d-session'
SESSION_VERSION = 1
MANIFEST_NAME = 'manifest.json'
REFERENCES_DIR = 'references'


def feature_document(frame_index, keypoints):
    """特征文件内容；不写 landmark_ids，流水线只靠描述子匹配"""
    return {
        'frame': int(frame_index),
        'keypoints': [[float(kp.pixel[0]), float(kp.pixel[1])] for kp in keypoints],
        'descriptors': [[float(x) for x in kp.descriptor] for kp in keypoints],
    }


def depth_document(frame):
    return {
        'frame': int(frame.frame_index),
        'samples': [[float(u), float(v), float(d)] for u, v, d in frame.samples],
    }


def grid_to_dict(geometry):
    return {
        'origin': [float(x) for x in geometry.origin],
        'resolution': float(geometry.resolution),
        'dims': [int(n) for n in geometry.dims],
    }


def grid_from_dict(data):
    return GridGeometry(np.asarray(data['origin'], dtype=float), float(data['resolution']), tuple(data['dims']))


def write_session(result, out_dir):
    """
    把 SimulationResult 写成会话目录

    Returns:
        清单 dict
    """
    spec = result.spec
    dimension = result.scene.spec.descriptor_dim
    os.makedirs(out_dir, exist_ok=True)

    rgbd_entries = []
    for frame in progress(result.rgbd_frames, desc="写 RGB-D 帧"):
        features = f"rgbd/features_{frame.frame_index:05d}.json"
        depth = f"rgbd/depth_{frame.frame_index:05d}.json"
        write_json(os.path.join(out_dir, features), feature_document(frame.frame_index, frame.keypoints))
        write_json(os.path.join(out_dir, depth), depth_document(frame))
        rgbd_entries.append({'frame': frame.frame_index, 't_ms': int(frame.timestamp),
                             'features': features, 'depth': depth})

    scene_entries = []
    for frame in progress(result.scene_frames, desc="写场景相机帧"):
        features = f"scene/features_{frame.frame_index:05d}.json"
        write_json(os.path.join(out_dir, features), feature_document(frame.frame_index, frame.keypoints))
        scene_entries.append({'frame': frame.frame_index, 't_ms': int(frame.timestamp), 'features': features})

    write_jsonl(os.path.join(out_dir, 'gaze.jsonl'), [s.to_record() for s in result.samples])
    write_jsonl(os.path.join(out_dir, 'truth.jsonl'), [s.to_record() for s in result.truth.gaze])
    write_json(os.path.join(out_dir, 'truth_scene.json'), {
        'rgbd_poses': [pose_to_vector(p) for p in result.truth.rgbd_poses],
        'frame_poses': [pose_to_vector(p) for p in result.truth.frame_poses],
        'roi_polygons': {k: np.asarray(v).tolist() for k, v in sorted(result.truth.roi_polygons.items())},
    })
    write_references(os.path.join(out_dir, REFERENCES_DIR), result.scene.references, dimension)

    manifest = {
        'format': SESSION_FORMAT,
        'version': SESSION_VERSION,
        'd': int(dimension),
        'rgbd_intrinsics': spec.rgbd_intrinsics.to_dict(),
        'scene_intrinsics': spec.scene_intrinsics.to_dict(),
        'rgbd_frame_rate': float(spec.mapping_trajectory.frame_rate),
        'scene_frame_rate': float(spec.gaze_trajectory.frame_rate),
        'gaze_rate_hz': float(spec.gaze_rate_hz),
        'grid': grid_to_dict(result.grid_geometry),
        'rgbd_frames': rgbd_entries,
        'scene_frames': scene_entries,
        'gaze': 'gaze.jsonl',
        'truth': 'truth.jsonl',
        'truth_scene': 'truth_scene.json',
        'references': REFERENCES_DIR,
    }
    write_json(os.path.join(out_dir, MANIFEST_NAME), manifest, indent=2)
    logger.info(
        f"会话已写入 {out_dir}: {len(rgbd_entries)} 个 RGB-D 帧, {len(scene_entries)} 个场景相机帧, "
        f"{len(result.samples)} 个注视样本"
    )
    return manifest


def write_references(ref_dir, references, dimension):
    """参考外观目录：manifest.json + 每个标签一个特征文件"""
    entries = []
    for i, ref in enumerate(references):
        name = f"{ref.roi_label}.json"
        write_json(os.path.join(ref_dir, name), feature_document(i, ref.keypoints))
        entries.append({'roi_label': ref.roi_label,
                        'reference_size': [float(x) for x in ref.reference_size],
                        'features': name})
    write_json(os.path.join(ref_dir, MANIFEST_NAME), {'d': int(dimension), 'references': entries}, indent=2)


def load_references(ref_dir, dimension=None):
    """读参考外观目录，描述子维度与会话 D 不一致时报错"""
    manifest_path = os.path.join(ref_dir, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise MissingInput("参考外观清单不存在", path=manifest_path)
    manifest = read_json(manifest_path)
    require_fields(manifest, ['d', 'references'], path=manifest_path)
    if dimension is not None and int(manifest['d']) != int(dimension):
        raise FormatError(f"参考外观维度 {manifest['d']} 与会话维度 {dimension} 不一致", path=manifest_path)

    references = []
    for entry in manifest['references']:
        require_fields(entry, ['roi_label', 'reference_size', 'features'], path=manifest_path)
        path = os.path.join(ref_dir, entry['features'])
        keypoints = extract_features(read_json(path), int(manifest['d']))
        try:
            references.append(ReferenceAppearance(entry['roi_label'], keypoints, tuple(entry['reference_size'])))
        except ValueError as e:
            raise FormatError(str(e), path=path)
    logger.info(f"加载参考外观 {len(references)} 个: {', '.join(r.roi_label for r in references)}")
    return references


class SessionLoader:
    """按清单读取会话目录"""

    def __init__(self, session_dir):
        self.session_dir = session_dir
        self.manifest_path = os.path.join(session_dir, MANIFEST_NAME)
        if not os.path.exists(self.manifest_path):
            raise MissingInput("会话清单不存在", path=self.manifest_path)
        self.manifest = read_json(self.manifest_path)
        require_fields(self.manifest, ['d', 'rgbd_intrinsics', 'scene_intrinsics', 'gaze'], path=self.manifest_path)
        if self.manifest.get('format', SESSION_FORMAT) != SESSION_FORMAT:
            raise FormatError(f"不是会话清单: {self.manifest.get('format')}", path=self.manifest_path)

    def _path(self, relative):
        return os.path.join(self.session_dir, relative)

    @property
    def dimension(self):
        return int(self.manifest['d'])

    @property
    def rgbd_intrinsics(self):
        return CameraIntrinsics.from_dict(self.manifest['rgbd_intrinsics'])

    @property
    def scene_intrinsics(self):
        return CameraIntrinsics.from_dict(self.manifest['scene_intrinsics'])

    @property
    def grid_geometry(self):
        if 'grid' not in self.manifest:
            raise FormatError("清单缺少 grid 包围盒", path=self.manifest_path)
        return grid_from_dict(self.manifest['grid'])

    def _features(self, entry):
        path = self._path(entry['features'])
        if not os.path.exists(path):
            raise MissingInput(f"帧 {entry.get('frame')} 的特征文件不存在", path=path)
        document = read_json(path)
        require_fields(document, ['frame', 'keypoints', 'descriptors'], path=path)
        try:
            return extract_features(document, self.dimension)
        except FormatError as e:
            if e.path is not None:
                raise
            raise type(e)(str(e), path=path) from e

    def load_rgbd_frames(self):
        """RGB-D 帧（关键点 + 深度）；缺少深度文件时报错并指明帧号"""
        entries = self.manifest.get('rgbd_frames') or []
        frames = []
        for entry in progress(entries, desc="读 RGB-D 帧"):
            depth_rel = entry.get('depth')
            if not depth_rel or not os.path.exists(self._path(depth_rel)):
                raise MissingInput(f"帧 {entry.get('frame')} 缺少深度文件",
                                   path=self._path(depth_rel) if depth_rel else self.manifest_path)
            depth = read_json(self._path(depth_rel))
            require_fields(depth, ['frame', 'samples'], path=self._path(depth_rel))
            frames.append(DepthFrame(entry['frame'], depth['samples'], self._features(entry), entry.get('t_ms', 0)))
        return frames

    def load_scene_keypoints(self):
        """{frame_index: [Keypoint]}"""
        entries = self.manifest.get('scene_frames') or []
        return {int(e['frame']): self._features(e) for e in progress(entries, desc="读场景相机帧")}

    def load_gaze_samples(self):
        path = self._path(self.manifest['gaze'])
        samples = []
        for lineno, record in enumerate(read_jsonl(path), start=1):
            require_fields(record, ['t_ms', 'frame', 'gaze_px', 'valid'], path=path, line=lineno)
            samples.append(GazeSample.from_record(record))
        return samples

    def load_truth(self):
        if 'truth' not in self.manifest:
            raise MissingInput("会话没有真值文件", path=self.manifest_path)
        return read_truth(self._path(self.manifest['truth']))

    def load_truth_scene(self):
        """真值位姿与 ROI 多边形"""
        if 'truth_scene' not in self.manifest:
            raise MissingInput("会话没有场景真值", path=self.manifest_path)
        document = read_json(self._path(self.manifest['truth_scene']))
        return {
            'rgbd_poses': [pose_from_vector(v) for v in document.get('rgbd_poses', [])],
            'frame_poses': [pose_from_vector(v) for v in document.get('frame_poses', [])],
            'roi_polygons': {k: np.asarray(v, dtype=float) for k, v in document.get('roi_polygons', {}).items()},
        }

    def references_dir(self):
        return self._path(self.manifest.get('references', REFERENCES_DIR))

    def load_references(self, ref_dir=None):
        return load_references(ref_dir or self.references_dir(), self.dimension)


def read_truth(path):
    truth = []
    for lineno, record in enumerate(read_jsonl(path), start=1):
        require_fields(record, ['t_ms', 'ray'], path=path, line=lineno)
        truth.append(TruthSample.from_record(record))
    return truth


def gaze_point_to_record(point):
    """gaze3d.jsonl 记录；缺失字段直接省略"""
    record = {'t_ms': int(point.timestamp), 'status': point.status.value}
    if point.point is not None:
        record['point'] = [float(x) for x in point.point]
    if point.ray is not None:
        record['ray'] = {'o': [float(x) for x in point.ray.origin], 'd': [float(x) for x in point.ray.direction]}
    if point.frame_pose is not None:
        record['frame_pose'] = pose_to_vector(point.frame_pose)
    return record


def gaze_point_from_record(record, path=None, line=None):
    require_fields(record, ['t_ms', 'status'], path=path, line=line)
    try:
        status = GazeStatus(record['status'])
    except ValueError:
        raise FormatError(f"未知状态: {record['status']}", path=path, line=line)
    ray = record.get('ray')
    pose = record.get('frame_pose')
    point = record.get('point')
    return GazePoint3D(
        timestamp=int(record['t_ms']),
        status=status,
        point=None if point is None else np.asarray(point, dtype=float),
        ray=None if ray is None else Ray(np.asarray(ray['o'], dtype=float), np.asarray(ray['d'], dtype=float)),
        frame_pose=None if pose is None else pose_from_vector(pose),
    )


def write_gaze_points(path, points):
    write_jsonl(path, [gaze_point_to_record(p) for p in points])


def read_gaze_points(path):
    return [gaze_point_from_record(r, path, i) for i, r in enumerate(read_jsonl(path), start=1)]


def frame_to_record(frame):
    record = {'frame': int(frame.frame_index), 'status': frame.status.value}
    if frame.localized:
        record['pose'] = pose_to_vector(frame.pose)
        record['inliers'] = int(frame.inlier_count)
        record['rmse_px'] = float(frame.rmse_px)
    return record


def frame_from_record(record, path=None, line=None):
    require_fields(record, ['frame', 'status'], path=path, line=line)
    try:
        status = FrameStatus(record['status'])
    except ValueError:
        raise FormatError(f"未知帧状态: {record['status']}", path=path, line=line)
    pose = record.get('pose')
    if status == FrameStatus.LOCALIZED and pose is None:
        raise FormatError("已定位帧缺少 pose", path=path, line=line)
    return LocalizedFrame(
        frame_index=int(record['frame']),
        pose=None if pose is None else pose_from_vector(pose),
        inlier_count=int(record.get('inliers', 0)),
        rmse_px=float(record.get('rmse_px', float('nan'))),
        status=status,
    )


def write_frames(path, frames):
    """每帧一条定位记录（含丢失帧）"""
    write_jsonl(path, [frame_to_record(f) for f in frames])


def read_frames(path):
    return [frame_from_record(r, path, i) for i, r in enumerate(read_jsonl(path), start=1)]


def write_trajectory(path, frames, intr, near, far):
    """每个已定位帧一条记录：帧号、位姿、相机位置与视锥角方向"""
    records = []
    for frame in frames:
        if not frame.localized:
            continue
        frustum = make_frustum(frame.pose, intr, near, far)
        records.append({
            'frame': int(frame.frame_index),
            'pose': pose_to_vector(frame.pose),
            'position': [float(x) for x in frustum.apex],
            'corners': [[float(x) for x in d] for d in frustum.corners],
            'inliers': int(frame.inlier_count),
            'rmse_px': float(frame.rmse_px),
        })
    write_jsonl(path, records)
    return len(records)


def write_rois(path, rois):
    write_json(path, {'rois': [r.to_dict() for r in rois]}, indent=2)


def read_rois(path):
    document = read_json(path)
    require_fields(document, ['rois'], path=path)
    try:
        return [ROI3D.from_dict(item) for item in document['rois']]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"ROI 文件结构错误: {e}", path=path)
