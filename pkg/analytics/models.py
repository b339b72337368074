#!/usr/bin/env python3
"""
注意力分析数据模型
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

RECOGNITION_THRESHOLD_MS = 100
REPORT_CSV_COLUMNS = [
    'roi_label',
    'total_dwell_ms',
    'dwell_count',
    'aoi_hit_count',
    'fixation_count',
    'recognition_capable_fixations',
]


@dataclass(frozen=True, eq=False)
class Fixation:
    """一次注视：时间上连续、角度离散度小的一组 Hit 样本"""

    start: int
    duration: int
    centroid_3d: np.ndarray
    sample_indices: range
    mean_dispersion: float

    @property
    def end(self):
        return self.start + self.duration

    @property
    def recognition_capable(self):
        return self.duration >= RECOGNITION_THRESHOLD_MS


@dataclass(frozen=True)
class DwellRecord:
    roi_label: str
    entry: int
    exit: int
    sample_count: int

    @property
    def dwell_ms(self):
        return self.exit - self.entry

    def to_dict(self):
        return {
            'roi_label': self.roi_label,
            'entry': self.entry,
            'exit': self.exit,
            'dwell_ms': self.dwell_ms,
            'sample_count': self.sample_count,
        }


@dataclass(eq=False)
class SaliencyGrid:
    """与占据栅格同几何的体素质量场"""

    geometry: object
    mass: np.ndarray
    splatted: int = 0
    skipped: int = 0

    @property
    def total_mass(self):
        return float(self.mass.sum())


@dataclass
class RoiStatistics:
    roi_label: str
    total_dwell_ms: int = 0
    dwell_count: int = 0
    aoi_hit_count: int = 0
    fixation_count: int = 0
    recognition_capable_fixations: int = 0
    fixation_dwell_ms: int = 0
    dwell_durations: List[int] = field(default_factory=list)

    def to_row(self):
        return [getattr(self, column) for column in REPORT_CSV_COLUMNS]

    def to_dict(self):
        return {
            'roi_label': self.roi_label,
            'total_dwell_ms': self.total_dwell_ms,
            'dwell_count': self.dwell_count,
            'aoi_hit_count': self.aoi_hit_count,
            'fixation_count': self.fixation_count,
            'recognition_capable_fixations': self.recognition_capable_fixations,
            'fixation_dwell_ms': self.fixation_dwell_ms,
            'dwell_durations': list(self.dwell_durations),
        }

    @staticmethod
    def from_dict(data):
        return RoiStatistics(
            roi_label=str(data['roi_label']),
            total_dwell_ms=int(data['total_dwell_ms']),
            dwell_count=int(data['dwell_count']),
            aoi_hit_count=int(data['aoi_hit_count']),
            fixation_count=int(data['fixation_count']),
            recognition_capable_fixations=int(data['recognition_capable_fixations']),
            fixation_dwell_ms=int(data.get('fixation_dwell_ms', 0)),
            dwell_durations=[int(d) for d in data.get('dwell_durations', [])],
        )


@dataclass
class AttentionReport:
    """会话级注意力报告"""

    rois: List[RoiStatistics]
    samples: int
    hit_samples: int
    frames: int
    localized_frames: int
    fixation_count: int
    session_duration_ms: int

    @property
    def localized_pct(self):
        return 100.0 * self.localized_frames / self.frames if self.frames else 0.0

    @property
    def hit_pct(self):
        return 100.0 * self.hit_samples / self.samples if self.samples else 0.0

    @property
    def fixation_rate(self):
        """每秒注视次数"""
        seconds = self.session_duration_ms / 1000.0
        return self.fixation_count / seconds if seconds > 0 else 0.0

    def roi(self, label):
        for row in self.rois:
            if row.roi_label == label:
                return row
        return None

    def totals(self):
        return {
            'samples': self.samples,
            'hit_samples': self.hit_samples,
            'frames': self.frames,
            'localized_frames': self.localized_frames,
            'localized_pct': self.localized_pct,
            'hit_pct': self.hit_pct,
            'fixation_count': self.fixation_count,
            'fixation_rate': self.fixation_rate,
            'session_duration_ms': self.session_duration_ms,
        }

    def to_dict(self):
        return {'rois': [r.to_dict() for r in self.rois], 'totals': self.totals()}

    @staticmethod
    def from_dict(data):
        totals = data['totals']
        return AttentionReport(
            rois=[RoiStatistics.from_dict(r) for r in data['rois']],
            samples=int(totals['samples']),
            hit_samples=int(totals['hit_samples']),
            frames=int(totals['frames']),
            localized_frames=int(totals['localized_frames']),
            fixation_count=int(totals['fixation_count']),
            session_duration_ms=int(totals['session_duration_ms']),
        )
