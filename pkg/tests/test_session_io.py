"""会话目录与流水线输出文件读写测试"""

import os

import numpy as np
import pytest

from gaze.models import FrameStatus, GazePoint3D, GazeStatus, LocalizedFrame
from geometry.camera import Ray
from geometry.transforms import look_at
from utils.exceptions import FormatError, MissingInput
from utils.file_formats import read_jsonl, write_json, write_jsonl
from utils.session_io import (
    SessionLoader,
    read_frames,
    read_gaze_points,
    write_frames,
    write_gaze_points,
    write_trajectory,
)

INTR = {'fx': 500.0, 'fy': 500.0, 'cx': 320.0, 'cy': 240.0, 'width': 640, 'height': 480}


@pytest.fixture
def session(tmp_path):
    """两帧 RGB-D 会话，第二帧缺深度文件"""
    rng = np.random.default_rng(0)
    entries = []
    for k in range(2):
        features = f"rgbd/features_{k:05d}.json"
        write_json(str(tmp_path / features), {
            'frame': k,
            'keypoints': rng.uniform(0, 400, size=(5, 2)).tolist(),
            'descriptors': rng.normal(size=(5, 8)).tolist(),
        })
        entry = {'frame': k, 't_ms': 67 * k, 'features': features, 'depth': f"rgbd/depth_{k:05d}.json"}
        entries.append(entry)
    write_json(str(tmp_path / entries[0]['depth']), {'frame': 0, 'samples': [[10.0, 20.0, 1.5]]})
    write_jsonl(str(tmp_path / 'gaze.jsonl'), [
        {'t_ms': 0, 'frame': 0, 'gaze_px': [320.0, 240.0], 'valid': True},
        {'t_ms': 33, 'frame': 0, 'gaze_px': [0.0, 0.0], 'valid': False},
    ])
    write_json(str(tmp_path / 'manifest.json'), {
        'format': 'gaze3d-session', 'version': 1, 'd': 8,
        'rgbd_intrinsics': INTR, 'scene_intrinsics': INTR,
        'grid': {'origin': [-1, -1, 0], 'resolution': 0.05, 'dims': [40, 40, 60]},
        'rgbd_frames': entries, 'scene_frames': [entries[0]], 'gaze': 'gaze.jsonl',
    })
    return tmp_path


def test_loader_reads_manifest(session):
    loader = SessionLoader(str(session))
    assert loader.dimension == 8
    assert loader.rgbd_intrinsics.fx == 500.0
    assert loader.grid_geometry.dims == (40, 40, 60)
    keypoints = loader.load_scene_keypoints()
    assert list(keypoints) == [0] and len(keypoints[0]) == 5
    samples = loader.load_gaze_samples()
    assert [s.valid for s in samples] == [True, False]


def test_missing_depth_names_frame(session):
    with pytest.raises(MissingInput, match='帧 1'):
        SessionLoader(str(session)).load_rgbd_frames()


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingInput):
        SessionLoader(str(tmp_path))


def test_truth_absent(session):
    with pytest.raises(MissingInput):
        SessionLoader(str(session)).load_truth()


def test_gaze_records_omit_missing_fields(tmp_path):
    pose = look_at([0, 0, 0], [0, 0, 2])
    points = [
        GazePoint3D(0, GazeStatus.HIT, np.array([0.0, 0.0, 2.0]), Ray((0, 0, 0), (0, 0, 1)), pose),
        GazePoint3D(33, GazeStatus.FRAME_LOST),
    ]
    path = str(tmp_path / 'gaze3d.jsonl')
    write_gaze_points(path, points)
    records = read_jsonl(path)
    assert set(records[0]) == {'t_ms', 'status', 'point', 'ray', 'frame_pose'}
    assert set(records[1]) == {'t_ms', 'status'}
    loaded = read_gaze_points(path)
    assert loaded[0].is_hit and loaded[1].status == GazeStatus.FRAME_LOST


def test_unknown_status_has_line(tmp_path):
    path = tmp_path / 'gaze3d.jsonl'
    path.write_text('{"t_ms":0,"status":"Hit"}\n{"t_ms":33,"status":"bogus"}\n', encoding='utf-8')
    with pytest.raises(FormatError) as excinfo:
        read_gaze_points(str(path))
    assert excinfo.value.line == 2


def test_frames_and_trajectory(tmp_path, intr):
    pose = look_at([0, 0, 0], [0, 0, 2])
    frames = [
        LocalizedFrame(0, pose, 40, 0.4, FrameStatus.LOCALIZED),
        LocalizedFrame(1, None, 0, float('nan'), FrameStatus.LOST),
    ]
    write_frames(str(tmp_path / 'frames.jsonl'), frames)
    loaded = read_frames(str(tmp_path / 'frames.jsonl'))
    assert [f.localized for f in loaded] == [True, False]
    assert loaded[0].inlier_count == 40

    count = write_trajectory(str(tmp_path / 'trajectory.jsonl'), frames, intr, 0.1, 3.0)
    assert count == 1
    record = read_jsonl(str(tmp_path / 'trajectory.jsonl'))[0]
    assert record['frame'] == 0 and len(record['corners']) == 4
    assert os.path.exists(tmp_path / 'trajectory.jsonl')
