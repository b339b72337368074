"""语义 ROI 模块"""

from .models import ReferenceAppearance, RoiDetection, ROI3D
from .homography import homography_dlt, homography_dlt_ransac, apply_homography
from .detection import DetectionThresholds, RoiDetector, detect_roi
from .lifting import lift_roi, merge_rois

__all__ = [
    'ReferenceAppearance',
    'RoiDetection',
    'ROI3D',
    'homography_dlt',
    'homography_dlt_ransac',
    'apply_homography',
    'DetectionThresholds',
    'RoiDetector',
    'detect_roi',
    'lift_roi',
    'merge_rois',
]
