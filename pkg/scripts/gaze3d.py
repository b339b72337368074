#!/usr/bin/env python3
"""
gaze3d 命令行
仿真、建图、定位、视线恢复、ROI 标注、注意力分析与评估

退出码：0 成功，1 用法错误，2 数据错误
"""

import sys
import os
import json
import logging
import argparse
from datetime import datetime

# 添加父目录到路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import Gaze3DConfigManager
from utils.exceptions import DataError, UsageError
from utils.parallel import set_progress_enabled
from utils.pipeline_runner import PipelineRunner

DEFAULT_SCENE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                             'config', 'scenes', 'desk_scene.json')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class CliArgumentParser(argparse.ArgumentParser):
    """参数错误按用法错误处理（退出码 1）"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


def setup_logging(level='INFO', quiet=False):
    """设置日志：文件记录全部，终端在 --quiet 时只显示警告"""
    log_file = os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        'gaze3d.log'
    )
    stream = logging.StreamHandler()
    stream.setLevel(logging.WARNING if quiet else level)

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            stream
        ],
        force=True,
    )


def build_parser():
    parser = CliArgumentParser(prog='gaze3d', description='3D 视线恢复与语义 ROI 注意力分析')
    parser.add_argument('--seed', type=int, help='覆盖配置中的随机种子')
    parser.add_argument('--config', help='配置文件路径（默认 config/gaze3d_config.json）')
    parser.add_argument('--quiet', action='store_true', help='只输出警告和错误，不显示进度条')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=CliArgumentParser)
    sub.required = True

    p = sub.add_parser('simulate', help='生成合成会话')
    p.add_argument('--spec', default=DEFAULT_SCENE, help='场景描述 JSON（默认内置 desk 场景）')
    p.add_argument('--out', required=True, help='会话输出目录')

    p = sub.add_parser('map-build', help='由 RGB-D 帧建立稀疏地图和占据栅格')
    p.add_argument('--session', required=True)
    p.add_argument('--map', required=True, help='输出地图文件')
    p.add_argument('--grid', required=True, help='输出栅格文件')
    p.add_argument('--summary', help='输出 map_summary.json（默认与地图同目录）')

    p = sub.add_parser('localize', help='场景相机逐帧定位')
    p.add_argument('--map', required=True)
    p.add_argument('--session', required=True)
    p.add_argument('--out', required=True, help='输出 frames.jsonl')

    p = sub.add_parser('gaze-recover', help='恢复 3D 注视点')
    p.add_argument('--map', required=True)
    p.add_argument('--grid', required=True)
    p.add_argument('--session', required=True)
    p.add_argument('--out', required=True, help='输出 gaze3d.jsonl')
    p.add_argument('--trajectory', help='输出 trajectory.jsonl（默认与 gaze3d 同目录）')

    p = sub.add_parser('roi-annotate', help='检测并三维化 ROI')
    p.add_argument('--map', required=True)
    p.add_argument('--grid', required=True)
    p.add_argument('--session', required=True)
    p.add_argument('--refs', help='参考外观目录（默认会话内 references/）')
    p.add_argument('--out', required=True, help='输出 rois.json')

    p = sub.add_parser('analyze', help='注意力分析')
    p.add_argument('--gaze3d', required=True)
    p.add_argument('--rois', help='rois.json（省略时只统计会话总计）')
    p.add_argument('--grid', help='占据栅格文件，给定时输出显著性栅格')
    p.add_argument('--frames', help='frames.jsonl（默认与 gaze3d 同目录）')
    p.add_argument('--out-dir', required=True)

    p = sub.add_parser('evaluate', help='与仿真真值对比')
    p.add_argument('--gaze3d', required=True)
    p.add_argument('--truth', required=True)
    p.add_argument('--out', required=True, help='输出 metrics.json')
    return parser


def run_command(runner, args):
    """执行子命令，返回摘要 dict"""
    if args.command == 'simulate':
        return runner.simulate(args.spec, args.out, seed=args.seed)
    if args.command == 'map-build':
        summary_path = args.summary or os.path.join(os.path.dirname(os.path.abspath(args.map)), 'map_summary.json')
        return runner.map_build(args.session, args.map, args.grid, summary_path)
    if args.command == 'localize':
        return runner.localize(args.map, args.session, args.out)
    if args.command == 'gaze-recover':
        return runner.gaze_recover(args.map, args.grid, args.session, args.out, trajectory_path=args.trajectory)
    if args.command == 'roi-annotate':
        return runner.roi_annotate(args.map, args.grid, args.session, args.out, refs_dir=args.refs)
    if args.command == 'analyze':
        return runner.analyze(args.gaze3d, args.rois, args.out_dir, grid_path=args.grid, frames_path=args.frames)
    if args.command == 'evaluate':
        return runner.evaluate(args.gaze3d, args.truth, args.out)
    raise UsageError(f"未知命令: {args.command}")


def _print_summary(summary):
    for key, value in summary.items():
        if isinstance(value, float):
            value = f"{value:.4g}"
        print(f"  {key}: {value}")


def main(argv=None):
    """主函数，返回退出码"""
    args = build_parser().parse_args(argv)

    try:
        config = Gaze3DConfigManager(args.config)
        if args.seed is not None:
            config.set_seed(args.seed)
        log_level = config.get_log_level()
        runner = PipelineRunner(config)
    except (FileNotFoundError, ValueError, json.JSONDecodeError) as e:
        print(f"\n✗ 配置错误: {e}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(log_level, args.quiet)
    set_progress_enabled(not args.quiet)
    logger = logging.getLogger('gaze3d')

    if not args.quiet:
        print("=" * 60)
        print(f"gaze3d {args.command}")
        print("=" * 60)

    start_time = datetime.now()
    try:
        summary = run_command(runner, args)
    except UsageError as e:
        print(f"\n✗ 错误: {e}", file=sys.stderr)
        logger.error(f"{args.command} 用法错误: {e}", exc_info=True)
        return EXIT_USAGE
    except (DataError, OSError) as e:
        print(f"\n✗ 错误: {e}", file=sys.stderr)
        logger.error(f"{args.command} 失败: {e}", exc_info=True)
        return EXIT_DATA

    duration = (datetime.now() - start_time).total_seconds()
    logger.info(f"{args.command} 完成，用时 {duration:.1f} 秒")
    if not args.quiet:
        print(f"\n✓ {args.command} 完成")
        _print_summary(summary)
        print(f"  用时: {duration:.1f} 秒")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
