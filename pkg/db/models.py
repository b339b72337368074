#!/usr/bin/env python3
"""
结果库数据模型
把分析输出转换成 MongoDB 文档
"""

from datetime import datetime
from typing import Any, Dict, List


class ReportRowData:
    """每个 ROI 一行的报告文档"""

    @staticmethod
    def from_statistics(row, participant_id: str, session_id: str) -> Dict[str, Any]:
        """从 RoiStatistics 创建文档"""
        return {
            'participantId': participant_id,
            'sessionId': session_id,
            'roiLabel': row.roi_label,
            'totalDwellMs': float(row.total_dwell_ms),
            'dwellCount': int(row.dwell_count),
            'aoiHitCount': int(row.aoi_hit_count),
            'fixationCount': int(row.fixation_count),
            'recognitionCapableFixations': int(row.recognition_capable_fixations),
            'fixationDwellMs': float(row.fixation_dwell_ms),
            'dwellDurations': [float(d) for d in row.dwell_durations],
            'created_at': datetime.utcnow(),
        }


class SessionTotalsData:
    """会话总计文档（roiLabel 为 None）"""

    @staticmethod
    def from_report(report, participant_id: str, session_id: str) -> Dict[str, Any]:
        totals = report.totals()
        return {
            'participantId': participant_id,
            'sessionId': session_id,
            'roiLabel': None,
            'totals': totals,
            'created_at': datetime.utcnow(),
        }


class DwellData:
    """单次驻留文档"""

    @staticmethod
    def from_record(record: Dict[str, Any], participant_id: str, session_id: str) -> Dict[str, Any]:
        """从 dwells.jsonl 的一条记录创建文档"""
        return {
            'participantId': participant_id,
            'sessionId': session_id,
            'roiLabel': record.get('roi_label'),
            'entryMs': record.get('entry'),
            'exitMs': record.get('exit'),
            'dwellMs': record.get('dwell_ms'),
            'sampleCount': record.get('sample_count'),
            'created_at': datetime.utcnow(),
        }

    @staticmethod
    def from_records(records: List[Dict[str, Any]], participant_id: str, session_id: str) -> List[Dict[str, Any]]:
        return [DwellData.from_record(r, participant_id, session_id) for r in records]
