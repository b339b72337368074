#!/usr/bin/env python3
"""
展示结果库
查询 MongoDB 中的统计信息与某个 ROI 的跨参与者驻留时长分布
"""

import sys
import os
import logging
import argparse

import numpy as np

# 添加父目录到路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import Gaze3DConfigManager
from db import MongoDBClient

HISTOGRAM_WIDTH = 40


def setup_logging():
    """设置日志"""
    log_file = os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        'display.log'
    )

    logging.basicConfig(
        level=logging.WARNING,  # 显示脚本使用较少的日志
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
        ]
    )


def display_stats(db_client):
    """显示数据库统计信息"""
    print("\n" + "=" * 60)
    print("结果库统计")
    print("=" * 60)

    stats = db_client.get_stats()
    print(f"\n  参与者: {stats['participants_count']}")
    print(f"  会话: {stats['sessions_count']}")
    print(f"  ROI 报告行: {stats['report_rows_count']}")
    print(f"  驻留记录: {stats['dwells_count']}")
    if stats['roi_labels']:
        print(f"  ROI 标签: {', '.join(stats['roi_labels'])}")

    participants = db_client.get_participants()
    if participants:
        print(f"\n参与者: {', '.join(participants)}")


def histogram_lines(durations, bins=10, width=HISTOGRAM_WIDTH):
    """文本直方图，每行一个区间"""
    counts, edges = np.histogram(durations, bins=bins)
    peak = max(int(counts.max()), 1)
    lines = []
    for count, lo, hi in zip(counts, edges[:-1], edges[1:]):
        bar = '#' * int(round(width * count / peak))
        lines.append(f"  {lo:>8.0f} - {hi:<8.0f} ms | {bar} {int(count)}")
    return lines


def display_dwell_distribution(db_client, roi_label, bins=10):
    """显示某个 ROI 的驻留时长分布"""
    print("\n" + "=" * 60)
    print(f"ROI {roi_label} 的驻留时长分布（所有参与者）")
    print("=" * 60)

    durations = db_client.query_dwell_distribution(roi_label)
    if not durations:
        print("  没有找到驻留记录")
        return

    values = np.array(durations)
    print(f"\n  驻留次数: {len(values)}")
    print(f"  中位数: {np.median(values):.0f} ms")
    print(f"  平均值: {values.mean():.0f} ms")
    print(f"  范围: {values.min():.0f} - {values.max():.0f} ms")
    print(f"  >= 100 ms（可识别）: {int(np.count_nonzero(values >= 100))}\n")
    for line in histogram_lines(values, bins):
        print(line)


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description='查询和展示 gaze3d 结果库')
    parser.add_argument('--stats', action='store_true', help='显示数据库统计信息')
    parser.add_argument('--dwell', metavar='LABEL', help='显示某个 ROI 的驻留时长分布')
    parser.add_argument('--bins', type=int, default=10, help='直方图区间数（默认10）')
    parser.add_argument('--config', help='配置文件路径')

    args = parser.parse_args()

    print("=" * 60)
    print("gaze3d 结果展示工具")
    print("=" * 60)

    db_client = None

    try:
        config = Gaze3DConfigManager(args.config)
        setup_logging()

        db_client = MongoDBClient(config)

        if args.stats or not args.dwell:
            display_stats(db_client)

        if args.dwell:
            display_dwell_distribution(db_client, args.dwell, args.bins)

        print("\n" + "=" * 60)

    except FileNotFoundError as e:
        print(f"\n✗ 错误: {e}")
        sys.exit(1)
    except Exception as e:
        print(f"\n✗ 发生错误: {e}")
        sys.exit(2)
    finally:
        if db_client:
            db_client.close()


if __name__ == '__main__':
    main()
