#!/usr/bin/env python3
"""
导入分析结果到MongoDB
把 analyze 输出目录（report.json + dwells.jsonl）按参与者/会话写入结果库
"""

import sys
import os
import logging
import argparse
from datetime import datetime

# 添加父目录到路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analytics.report import read_report
from config import Gaze3DConfigManager
from db import MongoDBClient
from utils.exceptions import DataError
from utils.file_formats import read_jsonl


def setup_logging(level='INFO'):
    """设置日志"""
    log_file = os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        'import_results.log'
    )

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler()
        ]
    )


def import_results(db_client, analysis_dir, participant_id, session_id):
    """
    导入一个 analyze 输出目录

    Returns:
        (报告文档数, 驻留文档数)
    """
    report = read_report(os.path.join(analysis_dir, 'report.json'))
    dwells_path = os.path.join(analysis_dir, 'dwells.jsonl')
    dwells = read_jsonl(dwells_path) if os.path.exists(dwells_path) else []
    report_count = db_client.insert_report(report, participant_id, session_id)
    dwell_count = db_client.insert_dwells(dwells, participant_id, session_id) if report_count else 0
    return report_count, dwell_count


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description='导入 gaze3d 分析结果到MongoDB')
    parser.add_argument('analysis_dir', help='analyze 命令的输出目录')
    parser.add_argument('--participant', required=True, help='参与者 ID')
    parser.add_argument('--session', required=True, help='会话 ID')
    parser.add_argument('--config', help='配置文件路径')
    args = parser.parse_args()

    print("=" * 60)
    print("gaze3d 结果导入工具 - 导入分析结果到MongoDB")
    print("=" * 60)

    db_client = None

    try:
        # 加载配置
        print("\n1. 加载配置...")
        config = Gaze3DConfigManager(args.config)
        setup_logging(config.get_log_level())
        logger = logging.getLogger(__name__)
        logger.info("配置加载成功")

        # 连接MongoDB
        print("\n2. 连接到MongoDB...")
        db_client = MongoDBClient(config)

        print(f"\n3. 导入 {args.analysis_dir} ...")
        start_time = datetime.now()
        report_count, dwell_count = import_results(db_client, args.analysis_dir, args.participant, args.session)
        duration = (datetime.now() - start_time).total_seconds()

        if report_count:
            print(f"\n✓ 导入完成！")
            print(f"  报告文档: {report_count} 条")
            print(f"  驻留记录: {dwell_count} 条")
        else:
            print(f"\n✓ 会话 {args.participant}/{args.session} 已存在，未重复导入")
        print(f"  用时: {duration:.1f} 秒")

        print("\n数据库统计:")
        for key, value in db_client.get_stats().items():
            print(f"  {key}: {value}")

        logger.info(f"导入完成: 报告 {report_count} 条，驻留 {dwell_count} 条，用时 {duration:.1f} 秒")

    except FileNotFoundError as e:
        print(f"\n✗ 错误: {e}")
        sys.exit(1)
    except DataError as e:
        print(f"\n✗ 数据错误: {e}")
        sys.exit(2)
    except Exception as e:
        print(f"\n✗ 发生错误: {e}")
        logging.error(f"导入失败: {e}", exc_info=True)
        sys.exit(2)
    finally:
        if db_client:
            db_client.close()


if __name__ == '__main__':
    main()
