"""共享测试夹具"""

import copy
import json
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from geometry.camera import CameraIntrinsics  # noqa: E402
from geometry.transforms import Pose, look_at  # noqa: E402
from utils.parallel import set_progress_enabled  # noqa: E402

DESK_SCENE = os.path.join(ROOT, 'config', 'scenes', 'desk_scene.json')

set_progress_enabled(False)


@pytest.fixture
def intr():
    return CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)


@pytest.fixture
def hd_intr():
    return CameraIntrinsics(fx=850.0, fy=850.0, cx=640.0, cy=480.0, width=1280, height=960)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def front_pose():
    """位于 (0.1, -0.05, -0.2) 看向 z = 2 平面"""
    return look_at([0.1, -0.05, -0.2], [0.0, 0.0, 2.0])


@pytest.fixture
def identity():
    return Pose.identity()


@pytest.fixture(scope='session')
def desk_document():
    with open(DESK_SCENE, 'r', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture
def small_desk_document(desk_document):
    """缩短轨迹的 desk 场景，端到端测试用"""
    doc = copy.deepcopy(desk_document)
    doc['mapping_trajectory']['frame_count'] = 12
    doc['gaze_trajectory']['frame_count'] = 60
    return doc
