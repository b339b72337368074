#!/usr/bin/env python3
"""
线程池工具
并行执行后按输入顺序返回结果，输出与线程数无关
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed

from tqdm import tqdm

logger = logging.getLogger(__name__)

_progress_enabled = True


def set_progress_enabled(enabled):
    """--quiet 时关闭进度条"""
    global _progress_enabled
    _progress_enabled = bool(enabled)


def progress(iterable, desc, total=None):
    """带描述的 tqdm 进度条"""
    return tqdm(iterable, desc=desc, total=total, disable=not _progress_enabled, leave=False)


def default_workers():
    """线程数，环境变量 GAZE3D_WORKERS 优先"""
    try:
        return max(1, int(os.getenv('GAZE3D_WORKERS', '1')))
    except ValueError:
        logger.warning(f"GAZE3D_WORKERS 不是整数: {os.getenv('GAZE3D_WORKERS')}，使用单线程")
        return 1


def run_ordered(func, items, workers=None, desc=None):
    """
    对每个元素执行 func，按输入顺序返回结果

    Args:
        func: 单参数函数
        items: 输入序列
        workers: 线程数；<=1 时在当前线程顺序执行
        desc: 进度条描述，None 时不显示
    """
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        iterable = progress(items, desc) if desc else items
        return [func(item) for item in iterable]

    results = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        future_to_index = {executor.submit(func, item): i for i, item in enumerate(items)}
        with tqdm(total=len(items), desc=desc, disable=not (_progress_enabled and desc), leave=False) as pbar:
            for future in as_completed(future_to_index):
                results[future_to_index[future]] = future.result()
                pbar.update(1)
    return results
