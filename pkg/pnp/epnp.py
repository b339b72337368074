#!/usr/bin/env python3
"""
EPnP 闭式位姿求解

世界点用 3 或 4 个控制点的重心坐标表示，相机系控制点落在线性系统的零空间中，
再由控制点间距离约束求出零空间组合系数 β
"""

import logging

import numpy as np

from geometry.transforms import Pose, invert
from pnp.models import correspondence_arrays
from pnp.refine import reprojection_errors
from utils.exceptions import (
    DegenerateConfiguration,
    GeometryError,
    InsufficientCorrespondences,
)

logger = logging.getLogger(__name__)

PLANAR_RATIO = 1e-6
_BETA_GN_ITERATIONS = 10


def _control_points(points):
    """
    选取控制点：质心 + 主轴方向

    Returns:
        (controls (m,3), alphas (n,m))；平面点云时 m=3
    """
    centroid = points.mean(axis=0)
    centered = points - centroid
    scatter = centered.T @ centered / len(points)
    eigvals, eigvecs = np.linalg.eigh(scatter)
    lam_max = eigvals[-1]

    if lam_max <= 1e-20:
        raise DegenerateConfiguration("所有世界点重合")
    if eigvals[1] / lam_max < PLANAR_RATIO:
        raise DegenerateConfiguration("世界点共线")

    planar = eigvals[0] / lam_max < PLANAR_RATIO
    axes = [2, 1] if planar else [2, 1, 0]

    controls = [centroid]
    alpha_cols = []
    for a in axes:
        scale = np.sqrt(max(eigvals[a], 0.0))
        controls.append(centroid + scale * eigvecs[:, a])
        alpha_cols.append(centered @ eigvecs[:, a] / scale)
    alpha_rest = np.column_stack(alpha_cols)
    alphas = np.column_stack([1.0 - alpha_rest.sum(axis=1), alpha_rest])
    return np.array(controls), alphas


def _build_m(alphas, pixels, intr):
    n, m = alphas.shape
    mat = np.zeros((2 * n, 3 * m))
    du = intr.cx - pixels[:, 0]
    dv = intr.cy - pixels[:, 1]
    for j in range(m):
        a = alphas[:, j]
        mat[0::2, 3 * j] = a * intr.fx
        mat[0::2, 3 * j + 2] = a * du
        mat[1::2, 3 * j + 1] = a * intr.fy
        mat[1::2, 3 * j + 2] = a * dv
    return mat


def _pairs(m):
    return [(a, b) for a in range(m) for b in range(a + 1, m)]


def _product_terms(n_dims):
    return [(k, l) for k in range(n_dims) for l in range(k, n_dims)]


def _product_splits(n_dims):
    """同一个四次单项式 β_aβ_bβ_cβ_d 的所有两两乘积拆分"""
    terms = _product_terms(n_dims)
    splits = {}
    for t1 in range(len(terms)):
        for t2 in range(t1, len(terms)):
            key = tuple(sorted(terms[t1] + terms[t2]))
            splits.setdefault(key, []).append((t1, t2))
    return [group for _, group in sorted(splits.items()) if len(group) > 1]


_RELIN_SPLITS = _product_splits(4)


def _distance_system(null_vecs, controls, n_dims):
    """控制点间距离约束：每对控制点的零空间差向量与世界距离平方"""
    pairs = _pairs(len(controls))
    diffs = []
    rho = np.empty(len(pairs))
    for p, (a, b) in enumerate(pairs):
        diffs.append([null_vecs[k][a] - null_vecs[k][b] for k in range(n_dims)])
        rho[p] = np.sum((controls[a] - controls[b]) ** 2)
    return diffs, rho


def _product_matrix(diffs, terms):
    lmat = np.zeros((len(diffs), len(terms)))
    for p, d in enumerate(diffs):
        for t, (k, l) in enumerate(terms):
            coeff = float(d[k] @ d[l])
            lmat[p, t] = coeff if k == l else 2.0 * coeff
    return lmat


def _rank_one_factor(sym):
    """对称矩阵的最大模特征分量 -> 向量 v，使 sym ≈ ±v·vᵀ"""
    vals, vecs = np.linalg.eigh(sym)
    idx = int(np.argmax(np.abs(vals)))
    return np.sqrt(abs(vals[idx])) * vecs[:, idx], vals[idx]


def _relinearize_betas(diffs, rho):
    """
    N=4 再线性化

    6 个距离方程对 10 个乘积 β_kβ_l 欠定；解写成 5 维零空间的组合，
    再用 β_abβ_cd = β_acβ_bd 把组合系数的乘积作为新未知数解线性系统

    Returns:
        β (4,)；系统退化时返回 None
    """
    terms = _product_terms(4)
    aug = np.column_stack([_product_matrix(diffs, terms), -rho])
    _, _, vt = np.linalg.svd(aug)
    basis = vt[-5:]
    lam_pairs = [(i, j) for i in range(5) for j in range(i, 5)]

    def quadratic_row(t1, t2):
        row = np.empty(len(lam_pairs))
        for c, (i, j) in enumerate(lam_pairs):
            if i == j:
                row[c] = basis[i, t1] * basis[i, t2]
            else:
                row[c] = basis[i, t1] * basis[j, t2] + basis[j, t1] * basis[i, t2]
        return row

    rows = []
    for group in _RELIN_SPLITS:
        first = quadratic_row(*group[0])
        for other in group[1:]:
            rows.append(first - quadratic_row(*other))
    _, _, vt2 = np.linalg.svd(np.array(rows))
    flat = vt2[-1]

    sym = np.zeros((5, 5))
    for c, (i, j) in enumerate(lam_pairs):
        sym[i, j] = sym[j, i] = flat[c]
    lam, _ = _rank_one_factor(sym)
    scale = float(lam @ basis[:, -1])
    if abs(scale) < 1e-12:
        return None
    prods = (lam / scale) @ basis[:, :-1]

    outer = np.zeros((4, 4))
    for t, (k, l) in enumerate(terms):
        outer[k, l] = outer[l, k] = prods[t]
    beta, top = _rank_one_factor(outer)
    if top <= 0:
        return None
    return beta


def _solve_betas(diffs, rho, n_dims, use_subset):
    """
    由距离约束线性化求 β 初值

    use_subset 时只保留 β1·βk 这 N 个乘积未知数
    """
    if use_subset:
        terms = [(0, k) for k in range(n_dims)]
    else:
        terms = _product_terms(n_dims)

    lmat = _product_matrix(diffs, terms)
    prods, *_ = np.linalg.lstsq(lmat, rho, rcond=None)
    b11 = prods[0]
    beta = np.zeros(n_dims)
    beta[0] = np.sqrt(abs(b11))
    if beta[0] < 1e-15:
        return beta
    for k in range(1, n_dims):
        idx = terms.index((0, k))
        beta[k] = prods[idx] / beta[0]
    return beta


def _gauss_newton_betas(beta, diffs, rho):
    """对距离约束残差做 Gauss-Newton"""
    beta = beta.copy()
    n_dims = len(beta)
    for _ in range(_BETA_GN_ITERATIONS):
        residual = np.empty(len(rho))
        jac = np.empty((len(rho), n_dims))
        for p, d in enumerate(diffs):
            v = sum(beta[k] * d[k] for k in range(n_dims))
            residual[p] = float(v @ v) - rho[p]
            for k in range(n_dims):
                jac[p, k] = 2.0 * float(v @ d[k])
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        beta += step
        if np.linalg.norm(step) < 1e-14 * max(1.0, np.linalg.norm(beta)):
            break
    return beta


def _align(world, camera):
    """闭式点集对齐：求 camera = R·world + t，带反射修正"""
    cw = world.mean(axis=0)
    cc = camera.mean(axis=0)
    h = (world - cw).T @ (camera - cc)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = cc - r @ cw
    return r, t


def _pose_from_betas(beta, null_vecs, alphas, points):
    m = alphas.shape[1]
    controls_cam = sum(beta[k] * null_vecs[k] for k in range(len(beta))).reshape(m, 3)
    cam_points = alphas @ controls_cam
    if np.count_nonzero(cam_points[:, 2] > 0) * 2 < len(cam_points):
        cam_points = -cam_points
    r_cw, t_cw = _align(points, cam_points)
    # world->camera 取逆得到 camera->world
    return invert(Pose(r_cw, t_cw))


def epnp_solve(corrs, intr):
    """
    EPnP 闭式求解

    Args:
        corrs: Correspondence 列表，至少4个
        intr: CameraIntrinsics

    Returns:
        Pose（相机 -> 世界）
    """
    if len(corrs) < 4:
        raise InsufficientCorrespondences(f"EPnP 至少需要4个对应，实际 {len(corrs)}")
    pixels, points = correspondence_arrays(corrs)
    return epnp_solve_arrays(pixels, points, intr)


def epnp_solve_arrays(pixels, points, intr):
    """数组形式的 EPnP，RANSAC 内部使用"""
    if len(points) < 4:
        raise InsufficientCorrespondences(f"EPnP 至少需要4个对应，实际 {len(points)}")
    controls, alphas = _control_points(points)
    m = len(controls)
    mat = _build_m(alphas, pixels, intr)

    _, _, vt = np.linalg.svd(mat, full_matrices=True)
    max_dims = 3 if m == 3 else 4
    # 最小奇异值对应的右奇异向量
    null_vecs = [vt[-1 - k].reshape(m, 3) for k in range(max_dims)]

    candidates = []
    n_pairs = len(_pairs(m))
    refined = []
    for n_dims in range(1, max_dims + 1):
        full_terms = n_dims * (n_dims + 1) // 2
        diffs, rho = _distance_system(null_vecs[:n_dims], controls, n_dims)
        starts = [_solve_betas(diffs, rho, n_dims, use_subset=full_terms > n_pairs)]
        if n_dims == 4:
            relin = _relinearize_betas(diffs, rho)
            if relin is not None:
                starts.append(relin)
        # 低维解补零后也作为起点
        for low in refined:
            starts.append(np.concatenate([low, np.zeros(n_dims - len(low))]))
        for start in starts:
            if not np.all(np.isfinite(start)):
                continue
            beta = _gauss_newton_betas(start, diffs, rho)
            if not np.all(np.isfinite(beta)) or np.linalg.norm(beta) < 1e-15:
                continue
            candidates.append((n_dims, beta))
        refined.extend(beta for dims, beta in candidates if dims == n_dims)

    best = None
    for n_dims, beta in candidates:
        try:
            pose = _pose_from_betas(beta, null_vecs[:n_dims], alphas, points)
            errors, in_front = reprojection_errors(pose, pixels, points, intr)
        except (GeometryError, np.linalg.LinAlgError) as e:
            logger.debug(f"EPnP 候选 N={n_dims} 无效: {e}")
            continue
        if not np.any(in_front):
            continue
        # 先比相机后方点数，再比重投影 RMSE
        behind = len(points) - int(np.count_nonzero(in_front))
        score = (behind, float(np.sqrt(np.mean(errors[in_front] ** 2))))
        if best is None or score < best[0]:
            best = (score, pose)

    if best is None:
        raise DegenerateConfiguration("EPnP 没有可用的候选解")
    return best[1]
