"""注意力分析模块"""

from .models import (
    Fixation,
    DwellRecord,
    SaliencyGrid,
    RoiStatistics,
    AttentionReport,
    RECOGNITION_THRESHOLD_MS,
)
from .fixations import detect_fixations
from .aoi import aoi_hits, roi_hit_test
from .dwell import dwell_times
from .saliency import saliency_map, save_saliency, load_saliency
from .report import summarize, write_report, read_report

__all__ = [
    'Fixation',
    'DwellRecord',
    'SaliencyGrid',
    'RoiStatistics',
    'AttentionReport',
    'RECOGNITION_THRESHOLD_MS',
    'detect_fixations',
    'aoi_hits',
    'roi_hit_test',
    'dwell_times',
    'saliency_map',
    'save_saliency',
    'load_saliency',
    'summarize',
    'write_report',
    'read_report',
]
