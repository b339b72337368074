"""仿真模块：场景、轨迹、RGB-D 帧与眼动会话生成，以及对真值的评估"""

from .models import (
    PatchSpec,
    SceneSpec,
    TrajectorySpec,
    NoiseProfile,
    GazeScriptEntry,
    SimulationSpec,
    Scene,
    TruthSample,
    GroundTruth,
)
from .scene import generate_scene, first_hits
from .render import render_frame, visible_landmarks
from .session import (
    interpolate_trajectory,
    generate_gaze_session,
    run_simulation,
    SimulationResult,
)
from .evaluate import evaluate

__all__ = [
    'PatchSpec',
    'SceneSpec',
    'TrajectorySpec',
    'NoiseProfile',
    'GazeScriptEntry',
    'SimulationSpec',
    'Scene',
    'TruthSample',
    'GroundTruth',
    'generate_scene',
    'first_hits',
    'render_frame',
    'visible_landmarks',
    'interpolate_trajectory',
    'generate_gaze_session',
    'run_simulation',
    'SimulationResult',
    'evaluate',
]
