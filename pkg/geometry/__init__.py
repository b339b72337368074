"""几何模块"""

from .transforms import (
    Pose,
    compose,
    invert,
    rotation_exp,
    rotation_log,
    quaternion_to_rotation,
    rotation_to_quaternion,
    pose_to_vector,
    pose_from_vector,
)
from .camera import (
    CameraIntrinsics,
    Ray,
    Frustum,
    project,
    project_points,
    backproject,
    pixel_to_ray,
    angular_error,
    make_frustum,
)

__all__ = [
    'Pose',
    'compose',
    'invert',
    'rotation_exp',
    'rotation_log',
    'quaternion_to_rotation',
    'rotation_to_quaternion',
    'pose_to_vector',
    'pose_from_vector',
    'CameraIntrinsics',
    'Ray',
    'Frustum',
    'project',
    'project_points',
    'backproject',
    'pixel_to_ray',
    'angular_error',
    'make_frustum',
]
