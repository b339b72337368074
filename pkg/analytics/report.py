#!/usr/bin/env python3
"""
注意力报告
按 ROI 汇总原始样本命中、驻留与注视；输出 CSV 与 JSON
"""

import csv
import io
import logging

from analytics.aoi import DEFAULT_TOLERANCE_M, aoi_hits, label_for_point
from analytics.models import REPORT_CSV_COLUMNS, AttentionReport, RoiStatistics
from utils.file_formats import atomic_write_text, read_json, require_fields, write_json

logger = logging.getLogger(__name__)


def summarize(points, fixations, dwells, rois, frames=None, hit_labels=None, tolerance=DEFAULT_TOLERANCE_M):
    """
    汇总一次会话

    Args:
        points: GazePoint3D 列表（时间序）
        fixations: Fixation 列表
        dwells: DwellRecord 列表
        rois: ROI3D 列表；同标签的多个实例合并为一行
        frames: LocalizedFrame 列表，用于定位率
        hit_labels: aoi_hits 的结果，None 时重新计算

    Returns:
        AttentionReport
    """
    if hit_labels is None:
        hit_labels = aoi_hits(points, rois, tolerance)
    labels = sorted({r.roi_label for r in rois})
    rows = {label: RoiStatistics(label) for label in labels}

    for label in hit_labels:
        if label is not None:
            rows[label].aoi_hit_count += 1

    for fixation in fixations:
        label = label_for_point(fixation.centroid_3d, rois, tolerance)
        if label is None:
            continue
        row = rows[label]
        row.fixation_count += 1
        row.fixation_dwell_ms += fixation.duration
        if fixation.recognition_capable:
            row.recognition_capable_fixations += 1

    for dwell in sorted(dwells, key=lambda d: (d.entry, d.roi_label)):
        row = rows.get(dwell.roi_label)
        if row is None:
            logger.warning(f"驻留记录的标签 {dwell.roi_label} 不在 ROI 列表中，忽略")
            continue
        row.dwell_count += 1
        row.total_dwell_ms += dwell.dwell_ms
        row.dwell_durations.append(dwell.dwell_ms)

    frames = frames or []
    timestamps = [p.timestamp for p in points]
    report = AttentionReport(
        rois=[rows[label] for label in labels],
        samples=len(points),
        hit_samples=sum(1 for p in points if p.is_hit),
        frames=len(frames),
        localized_frames=sum(1 for f in frames if f.localized),
        fixation_count=len(fixations),
        session_duration_ms=(max(timestamps) - min(timestamps)) if timestamps else 0,
    )
    logger.info(
        f"报告: {len(labels)} 个 ROI, 命中率 {report.hit_pct:.1f}%, "
        f"注视 {report.fixation_count} 次 ({report.fixation_rate:.2f}/s)"
    )
    return report


def report_to_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(REPORT_CSV_COLUMNS)
    for row in report.rois:
        writer.writerow(row.to_row())
    return buffer.getvalue()


def write_report(report, csv_path, json_path=None):
    """写 report.csv（以及可选的 report.json）"""
    atomic_write_text(csv_path, report_to_csv(report))
    if json_path:
        write_json(json_path, report.to_dict(), indent=2)


def read_report(json_path):
    document = read_json(json_path)
    require_fields(document, ['rois', 'totals'], path=json_path)
    return AttentionReport.from_dict(document)
