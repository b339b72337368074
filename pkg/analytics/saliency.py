#!/usr/bin/env python3
"""
三维显著性图
每次注视在质心处铺一个截断于 3σ 的各向同性高斯，体素中心采样后归一化为单位质量
"""

import logging

import numpy as np

from analytics.models import SaliencyGrid
from mapping.models import GridGeometry
from utils.file_formats import read_voxel_file, write_voxel_file
from utils.parallel import run_ordered

logger = logging.getLogger(__name__)

TRUNCATION_SIGMAS = 3.0


def _splat(fixation, geometry, sigma):
    """
    Returns:
        (index slices, 归一化权重块) 或 None（质心在栅格外）
    """
    c = fixation.centroid_3d
    home = geometry.voxel_of(c)
    if home is None:
        return None
    dims = np.array(geometry.dims)
    reach = TRUNCATION_SIGMAS * sigma
    lo = np.floor((c - reach - geometry.origin) / geometry.resolution).astype(int)
    hi = np.floor((c + reach - geometry.origin) / geometry.resolution).astype(int) + 1
    lo = np.clip(lo, 0, dims)
    hi = np.clip(hi, 0, dims)
    axes = [geometry.origin[k] + (np.arange(lo[k], hi[k]) + 0.5) * geometry.resolution for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing='ij')
    d2 = (gx - c[0]) ** 2 + (gy - c[1]) ** 2 + (gz - c[2]) ** 2
    weights = np.where(d2 <= reach * reach, np.exp(-d2 / (2.0 * sigma * sigma)), 0.0)
    total = weights.sum()
    if total <= 0:
        weights = np.zeros_like(d2)
        weights[tuple(np.array(home) - lo)] = 1.0
    else:
        weights = weights / total
    return tuple(slice(lo[k], hi[k]) for k in range(3)), weights


def saliency_map(fixations, geometry, sigma, duration_weighted=False, workers=1):
    """
    Args:
        fixations: Fixation 列表
        geometry: GridGeometry（与占据栅格相同）
        sigma: 高斯标准差（米）
        duration_weighted: True 时每次注视的质量为其时长（秒）

    Returns:
        SaliencyGrid
    """
    if not sigma > 0:
        raise ValueError(f"sigma 必须为正: {sigma}")
    mass = np.zeros(tuple(geometry.dims))
    kernels = run_ordered(lambda f: _splat(f, geometry, sigma), fixations, workers=workers)
    splatted = skipped = 0
    for fixation, kernel in zip(fixations, kernels):
        if kernel is None:
            skipped += 1
            continue
        region, weights = kernel
        unit = fixation.duration / 1000.0 if duration_weighted else 1.0
        mass[region] += unit * weights
        splatted += 1
    if skipped:
        logger.warning(f"{skipped} 次注视的质心在栅格外，未计入显著性图")
    return SaliencyGrid(geometry, mass, splatted, skipped)


def save_saliency(saliency, path):
    geo = saliency.geometry
    write_voxel_file(path, geo.origin, geo.resolution, geo.dims, saliency.mass)


def load_saliency(path):
    origin, resolution, dims, values = read_voxel_file(path)
    return SaliencyGrid(GridGeometry(origin, resolution, dims), values)
