"""视线恢复模块"""

from .models import FrameStatus, GazeStatus, GazeSample, LocalizedFrame, GazePoint3D
from .recovery import (
    localize_frame,
    recover_gaze,
    recover_session,
    session_summary,
    frustum_track,
)

__all__ = [
    'FrameStatus',
    'GazeStatus',
    'GazeSample',
    'LocalizedFrame',
    'GazePoint3D',
    'localize_frame',
    'recover_gaze',
    'recover_session',
    'session_summary',
    'frustum_track',
]
