#!/usr/bin/env python3
"""
重投影误差与 Levenberg-Marquardt 位姿优化
"""

import logging

import numpy as np

from geometry.camera import MIN_DEPTH
from geometry.transforms import Pose, hat, invert, rotation_exp
from pnp.models import PnPConfig, RefineOutcome, correspondence_arrays
from utils.exceptions import AllBehindCamera, DivergedBehindCamera

logger = logging.getLogger(__name__)

LAMBDA_INIT = 1e-3
LAMBDA_MAX = 1e10

STATUS_CONVERGED = 'converged'
STATUS_MAX_ITERATIONS = 'max_iterations'
STATUS_DAMPING_SATURATED = 'damping_saturated'


def reprojection_errors(pose, pixels, points, intr):
    """
    每个点的重投影误差范数（像素）

    Returns:
        (errors (N,), in_front (N,) bool)；相机后方的点误差为 inf
    """
    pc = pose.inverse_transform(points)
    z = pc[:, 2]
    in_front = z > MIN_DEPTH
    errors = np.full(len(points), np.inf)
    if np.any(in_front):
        zf = z[in_front]
        u = intr.fx * pc[in_front, 0] / zf + intr.cx
        v = intr.fy * pc[in_front, 1] / zf + intr.cy
        errors[in_front] = np.hypot(u - pixels[in_front, 0], v - pixels[in_front, 1])
    return errors, in_front


def reprojection_rmse_arrays(pose, pixels, points, intr):
    errors, in_front = reprojection_errors(pose, pixels, points, intr)
    if not np.any(in_front):
        raise AllBehindCamera("所有点都在相机后方")
    return float(np.sqrt(np.mean(errors[in_front] ** 2)))


def reprojection_rmse(pose, corrs, intr):
    """正深度点上的重投影 RMSE（像素）"""
    pixels, points = correspondence_arrays(corrs)
    return reprojection_rmse_arrays(pose, pixels, points, intr)


def _residuals(r_cw, t_cw, pixels, points, intr):
    pc = points @ r_cw.T + t_cw
    z = pc[:, 2]
    u = intr.fx * pc[:, 0] / z + intr.cx
    v = intr.fy * pc[:, 1] / z + intr.cy
    res = np.column_stack([u - pixels[:, 0], v - pixels[:, 1]])
    return res, pc


def _jacobian(pc, intr):
    """残差对左乘增量 [δω, δt] 的雅可比，形状 (2N, 6)"""
    n = len(pc)
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    dproj = np.zeros((n, 2, 3))
    dproj[:, 0, 0] = intr.fx / z
    dproj[:, 0, 2] = -intr.fx * x / z ** 2
    dproj[:, 1, 1] = intr.fy / z
    dproj[:, 1, 2] = -intr.fy * y / z ** 2

    dpoint = np.zeros((n, 3, 6))
    for i in range(n):
        dpoint[i, :, :3] = -hat(pc[i])
        dpoint[i, :, 3:] = np.eye(3)
    return np.einsum('nij,njk->nik', dproj, dpoint).reshape(2 * n, 6)


def _rmse(res):
    return float(np.sqrt(np.mean(np.sum(res ** 2, axis=1))))


def refine_pose(initial, corrs, intr, cfg=None):
    """
    LM 最小化重投影误差

    Args:
        initial: 初始位姿（相机 -> 世界）
        corrs: Correspondence 列表
        intr: CameraIntrinsics
        cfg: PnPConfig，使用 refine_max_iterations 与 refine_convergence_px

    Returns:
        RefineOutcome；返回的 RMSE 不大于初始 RMSE
    """
    pixels, points = correspondence_arrays(corrs)
    return refine_pose_arrays(initial, pixels, points, intr, cfg)


def refine_pose_arrays(initial, pixels, points, intr, cfg=None):
    cfg = cfg or PnPConfig()
    world_to_cam = invert(initial)
    r_cw = np.array(world_to_cam.rotation)
    t_cw = np.array(world_to_cam.translation)

    z0 = points @ r_cw[2] + t_cw[2]
    front = z0 > MIN_DEPTH
    if np.count_nonzero(front) < 4:
        raise DivergedBehindCamera(f"初始位姿只有 {np.count_nonzero(front)} 个点在相机前方")
    pixels = pixels[front]
    points = points[front]

    res, pc = _residuals(r_cw, t_cw, pixels, points, intr)
    rmse = _rmse(res)
    trace = [rmse]
    lam = LAMBDA_INIT
    status = STATUS_MAX_ITERATIONS
    iterations = 0

    while iterations < cfg.refine_max_iterations:
        iterations += 1
        if rmse == 0.0:
            status = STATUS_CONVERGED
            break

        jac = _jacobian(pc, intr)
        r_flat = res.reshape(-1)
        hess = jac.T @ jac
        grad = jac.T @ r_flat
        damping = np.diag(np.maximum(np.diag(hess), 1e-12))

        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                delta = np.linalg.solve(hess + lam * damping, -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            rot = rotation_exp(delta[:3])
            r_new = rot @ r_cw
            t_new = rot @ t_cw + delta[3:]
            z_new = points @ r_new[2] + t_new[2]
            if np.all(z_new > MIN_DEPTH):
                res_new, pc_new = _residuals(r_new, t_new, pixels, points, intr)
                rmse_new = _rmse(res_new)
                if rmse_new < rmse:
                    accepted = True
                    break
            lam *= 10.0

        if not accepted:
            status = STATUS_DAMPING_SATURATED
            break

        r_cw, t_cw = r_new, t_new
        res, pc = res_new, pc_new
        change = rmse - rmse_new
        rmse = rmse_new
        trace.append(rmse)
        lam = max(lam / 10.0, 1e-12)
        if change < cfg.refine_convergence_px:
            status = STATUS_CONVERGED
            break

    if status != STATUS_CONVERGED:
        logger.debug(f"LM 未收敛（{status}）: {iterations} 次迭代后 RMSE={rmse:.6f}px")

    pose = invert(Pose(r_cw, t_cw))
    return RefineOutcome(pose=pose, rmse_px=rmse, converged=status == STATUS_CONVERGED,
                         iterations=iterations, rmse_trace=trace, status=status)
