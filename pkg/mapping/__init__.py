"""环境地图模块"""

from .models import Landmark, Keyframe, DepthFrame, GridGeometry
from .sparse_map import (
    SparseMap,
    bootstrap_map,
    track_pose,
    maybe_insert_keyframe,
    save_map,
    load_map,
)
from .occupancy_grid import (
    OccupancyGrid,
    integrate_depth,
    is_occupied,
    cast_ray,
    export_occupied_voxels,
    save_grid,
    load_grid,
)

__all__ = [
    'Landmark',
    'Keyframe',
    'DepthFrame',
    'GridGeometry',
    'SparseMap',
    'bootstrap_map',
    'track_pose',
    'maybe_insert_keyframe',
    'save_map',
    'load_map',
    'OccupancyGrid',
    'integrate_depth',
    'is_occupied',
    'cast_ray',
    'export_occupied_voxels',
    'save_grid',
    'load_grid',
]
