#!/usr/bin/env python3
"""
驻留时间
同一 ROI 的连续命中样本构成一次驻留；退出时间 = 末次命中 + 一个标称采样周期
"""

import numpy as np

from analytics.models import DwellRecord

DEFAULT_PERIOD_MS = 1000.0 / 30.0


def sample_period(timestamps):
    """相邻样本间隔的中位数"""
    if len(timestamps) < 2:
        return DEFAULT_PERIOD_MS
    gaps = np.diff(np.asarray(timestamps, dtype=float))
    gaps = gaps[gaps > 0]
    if len(gaps) == 0:
        return DEFAULT_PERIOD_MS
    return float(np.median(gaps))


def dwell_times(hit_labels, timestamps, max_gap=0, period=None):
    """
    Args:
        hit_labels: 每个样本的命中标签（None = 未命中）
        timestamps: 毫秒时间戳，升序
        max_gap: 连续未命中/缺失时长不超过该值时不拆分驻留（ms）
        period: 标称采样周期，None 时取间隔中位数

    Returns:
        DwellRecord 列表，按进入时间排序
    """
    if len(hit_labels) != len(timestamps):
        raise ValueError(f"标签数 {len(hit_labels)} 与时间戳数 {len(timestamps)} 不一致")
    period = sample_period(timestamps) if period is None else float(period)
    period_ms = int(round(period))
    dwells = []
    current = None
    entry = last_hit = count = 0
    gap_periods = 0

    def close():
        dwells.append(DwellRecord(current, int(entry), int(last_hit) + period_ms, count))

    for i, (label, t) in enumerate(zip(hit_labels, timestamps)):
        if i > 0 and current is not None:
            gap_periods += max(0, int(round((t - timestamps[i - 1]) / period)) - 1)
        if label is None:
            if current is not None:
                gap_periods += 1
                if gap_periods * period > max_gap:
                    close()
                    current = None
            continue
        if label == current and gap_periods * period <= max_gap:
            last_hit = t
            count += 1
        else:
            if current is not None:
                close()
            current, entry, last_hit, count = label, t, t, 1
        gap_periods = 0

    if current is not None:
        close()
    return dwells
