#!/usr/bin/env python3
"""
单应性估计
Hartley 归一化 DLT + RANSAC（对称转移误差）
"""

import logging

import numpy as np

from utils.exceptions import InsufficientPairs, NoConsensus

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 500
MIN_HOMOGRAPHY_INLIERS = 8


def normalize_points(pts):
    """质心移到原点，平均距离缩放到 √2"""
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / d if d > 1e-12 else 1.0
    t = np.array([[s, 0.0, -s * c[0]],
                  [0.0, s, -s * c[1]],
                  [0.0, 0.0, 1.0]])
    return (pts - c) * s, t


def _build_a(xy, uv):
    x, y = xy[:, 0], xy[:, 1]
    u, v = uv[:, 0], uv[:, 1]
    n = len(xy)
    zeros = np.zeros(n)
    ones = np.ones(n)
    a = np.zeros((2 * n, 9))
    a[0::2] = np.c_[x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u]
    a[1::2] = np.c_[zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v]
    return a


def homography_dlt(src, dst):
    """
    归一化 DLT

    Returns:
        3x3 H（h33 = 1），退化时返回 None
    """
    if len(src) < 4:
        return None
    src_n, t_src = normalize_points(src)
    dst_n, t_dst = normalize_points(dst)
    a = _build_a(src_n, dst_n)
    if np.linalg.matrix_rank(a) < 8:
        return None
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ hn @ t_src
    if abs(h[2, 2]) < 1e-12:
        return None
    return h / h[2, 2]


def apply_homography(h, pts):
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    ph = np.c_[pts, np.ones(len(pts))]
    q = ph @ h.T
    with np.errstate(divide='ignore', invalid='ignore'):
        return q[:, :2] / q[:, 2:3]


def symmetric_transfer_error(h, src, dst):
    try:
        h_inv = np.linalg.inv(h)
    except np.linalg.LinAlgError:
        return np.full(len(src), np.inf)
    fwd = apply_homography(h, src) - dst
    bwd = apply_homography(h_inv, dst) - src
    err = np.sqrt((fwd ** 2).sum(axis=1) + (bwd ** 2).sum(axis=1))
    err[~np.isfinite(err)] = np.inf
    return err


def _noncollinear(pts, eps=1e-6):
    a, b, c, d = pts

    def area(p, q, r):
        u, v = q - p, r - p
        return 0.5 * abs(u[0] * v[1] - u[1] * v[0])

    scale = max(np.ptp(pts, axis=0).max(), 1e-12) ** 2
    return min(area(a, b, c), area(a, b, d), area(a, c, d), area(b, c, d)) > eps * scale


def homography_dlt_ransac(pairs, threshold_px=3.0, seed=0, iterations=DEFAULT_ITERATIONS,
                          min_inliers=MIN_HOMOGRAPHY_INLIERS):
    """
    RANSAC 单应性

    Args:
        pairs: [(ref_px, frame_px)] 或 (src (N,2), dst (N,2))
        threshold_px: 对称转移误差阈值

    Returns:
        (H, inlier_mask)；H 由全部内点重新 DLT 并归一化到 h33 = 1
    """
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        src, dst = (np.asarray(p, dtype=float) for p in pairs)
    else:
        src = np.array([p[0] for p in pairs], dtype=float).reshape(-1, 2)
        dst = np.array([p[1] for p in pairs], dtype=float).reshape(-1, 2)
    n = len(src)
    if n < 4:
        raise InsufficientPairs(f"单应性至少需要4对点，实际 {n}")

    rng = np.random.default_rng(seed)
    best_count, best_h = 0, None
    for _ in range(iterations):
        idx = rng.choice(n, size=4, replace=False)
        if not (_noncollinear(src[idx]) and _noncollinear(dst[idx])):
            continue
        h = homography_dlt(src[idx], dst[idx])
        if h is None:
            continue
        count = int(np.count_nonzero(symmetric_transfer_error(h, src, dst) < threshold_px))
        if count > best_count:
            best_count, best_h = count, h

    if best_h is None or best_count < min_inliers:
        raise NoConsensus(f"单应性一致集不足: {best_count} < {min_inliers}")

    mask = symmetric_transfer_error(best_h, src, dst) < threshold_px
    refit = homography_dlt(src[mask], dst[mask])
    if refit is not None:
        refit_mask = symmetric_transfer_error(refit, src, dst) < threshold_px
        if np.count_nonzero(refit_mask) >= np.count_nonzero(mask):
            best_h, mask = refit, refit_mask
    if np.count_nonzero(mask) < min_inliers:
        raise NoConsensus(f"单应性一致集不足: {int(np.count_nonzero(mask))} < {min_inliers}")
    return best_h, mask
