#!/usr/bin/env python3
"""
流水线执行器
把各模块串成命令：仿真 -> 建图 -> 定位 -> 视线恢复 -> ROI 标注 -> 注意力分析 -> 评估
"""

import os
import logging

from analytics.aoi import aoi_hits
from analytics.dwell import dwell_times
from analytics.fixations import detect_fixations
from analytics.report import summarize, write_report
from analytics.saliency import saliency_map, save_saliency
from gaze.recovery import localize_session, recover_session, session_summary
from geometry.transforms import Pose
from mapping.models import GridGeometry
from mapping.occupancy_grid import OccupancyGrid, load_grid, save_grid
from mapping.sparse_map import bootstrap_map, load_map, maybe_insert_keyframe, save_map, track_pose
from rois.detection import DetectionThresholds, RoiDetector
from rois.lifting import lift_roi, merge_rois
from sim.evaluate import evaluate
from sim.models import SimulationSpec
from sim.session import run_simulation
from utils.exceptions import EmptySession, MappingError, PoseEstimationError
from utils.file_formats import read_json, read_voxel_file, staged_outputs, write_json, write_jsonl
from utils.parallel import progress, run_ordered
from utils.session_io import (
    SessionLoader,
    read_frames,
    read_gaze_points,
    read_rois,
    read_truth,
    write_frames,
    write_gaze_points,
    write_rois,
    write_session,
    write_trajectory,
)

logger = logging.getLogger(__name__)


class PipelineRunner:
    """命令实现；每个方法读输入文件、写输出文件并返回摘要 dict"""

    def __init__(self, config_manager, workers=None):
        """
        Args:
            config_manager: Gaze3DConfigManager 实例
            workers: 线程数，None 时取配置
        """
        self.config = config_manager
        self.workers = workers or config_manager.get_workers()

    def _matching(self):
        tracking = self.config.get_tracking_params()
        return {'ratio': tracking['ratio'], 'gate_radius_px': tracking['gate_radius_px']}

    def _keyframe_thresholds(self):
        tracking = self.config.get_tracking_params()
        return {
            'translation_m': tracking['keyframe_translation_m'],
            'rotation_deg': tracking['keyframe_rotation_deg'],
            'inlier_ratio': tracking['keyframe_inlier_ratio'],
        }

    def _load_grid(self, grid_path):
        return load_grid(grid_path, **self.config.get_grid_params())

    def simulate(self, spec_path, out_dir, seed=None):
        """场景描述 -> 完整的合成会话目录（含真值）"""
        spec = SimulationSpec.from_dict(read_json(spec_path))
        if seed is None:
            seed = self.config.get_simulation_seed()
        result = run_simulation(spec, seed=seed, workers=self.workers)
        manifest = write_session(result, out_dir)
        return {
            'rgbd_frames': len(manifest['rgbd_frames']),
            'scene_frames': len(manifest['scene_frames']),
            'samples': len(result.samples),
            'landmarks': result.scene.landmark_count,
            'rois': len(result.scene.references),
        }

    def map_build(self, session_dir, map_path, grid_path, summary_path=None):
        """
        RGB-D 帧 -> 稀疏地图 + 占据栅格

        第一帧初始化，其余帧用上一帧位姿作先验跟踪；跟踪失败的帧既不插关键帧也不积分深度
        """
        loader = SessionLoader(session_dir)
        intr = loader.rgbd_intrinsics
        frames = loader.load_rgbd_frames()
        if not frames:
            raise EmptySession("会话中没有 RGB-D 帧")

        cfg = self.config.get_pnp_config()
        matching = self._matching()
        thresholds = self._keyframe_thresholds()
        grid = OccupancyGrid(loader.grid_geometry, **self.config.get_grid_params())

        smap = bootstrap_map(frames[0], intr)
        grid.integrate_depth(frames[0], Pose.identity(), intr)
        prior = Pose.identity()
        tracked, lost = 1, 0
        for frame in progress(frames[1:], desc="建图"):
            try:
                result = track_pose(smap, frame.keypoints, intr, prior=prior, cfg=cfg, **matching)
            except (MappingError, PoseEstimationError) as e:
                lost += 1
                logger.warning(f"帧 {frame.frame_index} 跟踪失败，跳过: {e}")
                continue
            tracked += 1
            prior = result.pose
            maybe_insert_keyframe(smap, frame.keypoints, result, frame, intr, **thresholds)
            grid.integrate_depth(frame, result.pose, intr)

        save_map(smap, map_path)
        save_grid(grid, grid_path)
        summary = {
            'frames': len(frames),
            'tracked_frames': tracked,
            'lost_frames': lost,
            'keyframes': len(smap.keyframes),
            'landmarks': len(smap),
            'keyframe_fraction': len(smap.keyframes) / len(frames),
            'skipped_depth_samples': int(grid.skipped_samples),
            'occupied_voxels': len(grid.export_occupied_voxels()),
        }
        if summary_path:
            write_json(summary_path, summary, indent=2)
        logger.info(
            f"建图完成: {summary['landmarks']} 个路标, {summary['keyframes']} 个关键帧 "
            f"(关键帧比例 {summary['keyframe_fraction']:.2f}), 丢失 {lost} 帧"
        )
        return summary

    def localize(self, map_path, session_dir, out_path):
        """只做场景相机逐帧定位，写 frames.jsonl"""
        smap = load_map(map_path)
        loader = SessionLoader(session_dir)
        keypoints = loader.load_scene_keypoints()
        if not keypoints:
            raise EmptySession("会话中没有场景相机帧")
        frames = localize_session(keypoints, smap, loader.scene_intrinsics, self.config.get_pnp_config(),
                                  matching=self._matching())
        write_frames(out_path, frames)
        localized = sum(1 for f in frames if f.localized)
        return {
            'frames': len(frames),
            'localized_frames': localized,
            'localized_pct': 100.0 * localized / len(frames),
        }

    def gaze_recover(self, map_path, grid_path, session_dir, out_path, trajectory_path=None, frames_path=None):
        """
        注视样本 -> gaze3d.jsonl，另写逐帧定位记录与相机轨迹

        输入全部读完并校验后才写输出
        """
        smap = load_map(map_path)
        grid = self._load_grid(grid_path)
        loader = SessionLoader(session_dir)
        samples = loader.load_gaze_samples()
        keypoints = loader.load_scene_keypoints()
        intr = loader.scene_intrinsics
        gaze = self.config.get_gaze_params()

        points, frames = recover_session(
            samples, keypoints, smap, grid, intr, self.config.get_pnp_config(),
            max_range=gaze['max_range_m'], workers=self.workers, matching=self._matching(),
        )
        out_dir = os.path.dirname(os.path.abspath(out_path))
        frames_path = frames_path or os.path.join(out_dir, 'frames.jsonl')
        trajectory_path = trajectory_path or os.path.join(out_dir, 'trajectory.jsonl')
        # 三个输出要么全部更新，要么都不动
        with staged_outputs([out_path, frames_path, trajectory_path]) as staged:
            write_gaze_points(staged[out_path], points)
            write_frames(staged[frames_path], frames)
            trajectory_count = write_trajectory(
                staged[trajectory_path], frames, intr, gaze['frustum_near_m'], gaze['frustum_far_m'],
            )
        summary = session_summary(points, frames)
        summary['trajectory_records'] = trajectory_count
        return summary

    def roi_annotate(self, map_path, grid_path, session_dir, out_path, refs_dir=None):
        """
        扫描视频中检测参考外观，三维化后按标签合并，写 rois.json
        """
        smap = load_map(map_path)
        grid = self._load_grid(grid_path)
        loader = SessionLoader(session_dir)
        references = loader.load_references(refs_dir)
        keypoints = loader.load_scene_keypoints()
        intr = loader.scene_intrinsics
        params = self.config.get_roi_params()
        max_range = self.config.get_gaze_params()['max_range_m']

        detector = RoiDetector(
            references,
            k=params['vocabulary_k'],
            depth=params['vocabulary_depth'],
            top_n=params['top_n'],
            thresholds=DetectionThresholds.from_dict(params),
            tree_seed=params['seed'],
        )
        frames = localize_session(keypoints, smap, intr, self.config.get_pnp_config(), matching=self._matching())
        localized = [f for f in frames if f.localized]

        def annotate(frame):
            lifted = []
            for detection in detector.detect(keypoints[frame.frame_index], frame.frame_index):
                roi = lift_roi(detection, frame.pose, intr, grid, max_range, params['planarity_tolerance_m'])
                if roi is not None:
                    lifted.append(roi)
            return lifted

        per_frame = run_ordered(annotate, localized, workers=self.workers, desc="检测 ROI")
        observations = [roi for lifted in per_frame for roi in lifted]
        rois = merge_rois(observations, params['merge_radius_m'])
        write_rois(out_path, rois)
        logger.info(f"ROI 标注: {len(observations)} 次三维观测合并为 {len(rois)} 个 ROI")
        return {
            'frames': len(frames),
            'localized_frames': len(localized),
            'observations': len(observations),
            'rois': len(rois),
            'labels': sorted({r.roi_label for r in rois}),
        }

    def analyze(self, gaze3d_path, rois_path, out_dir, grid_path=None, frames_path=None):
        """
        gaze3d + ROI -> report.csv / report.json / dwells.jsonl，给定栅格时另写 saliency.g3dg

        frames_path 缺省时使用 gaze3d 同目录下的 frames.jsonl（不存在则不统计定位率）
        """
        params = self.config.get_analytics_params()
        points = read_gaze_points(gaze3d_path)
        rois = read_rois(rois_path) if rois_path else []
        if frames_path is None:
            candidate = os.path.join(os.path.dirname(os.path.abspath(gaze3d_path)), 'frames.jsonl')
            frames_path = candidate if os.path.exists(candidate) else None
        frames = read_frames(frames_path) if frames_path else None

        fixations = detect_fixations(points, params['dispersion_threshold_deg'], params['min_fixation_ms'])
        hit_labels = aoi_hits(points, rois, params['aoi_tolerance_m'])
        dwells = dwell_times(hit_labels, [p.timestamp for p in points], max_gap=params['max_gap_ms'])
        report = summarize(points, fixations, dwells, rois, frames=frames, hit_labels=hit_labels,
                           tolerance=params['aoi_tolerance_m'])

        os.makedirs(out_dir, exist_ok=True)
        write_report(report, os.path.join(out_dir, 'report.csv'), os.path.join(out_dir, 'report.json'))
        write_jsonl(os.path.join(out_dir, 'dwells.jsonl'), [d.to_dict() for d in dwells])

        summary = {
            'samples': report.samples,
            'fixations': len(fixations),
            'dwells': len(dwells),
            'rois': len(report.rois),
        }
        if grid_path:
            origin, resolution, dims, _ = read_voxel_file(grid_path)
            saliency = saliency_map(
                fixations, GridGeometry(origin, resolution, dims), params['saliency_sigma_m'],
                duration_weighted=params['duration_weighted'], workers=self.workers,
            )
            save_saliency(saliency, os.path.join(out_dir, 'saliency.g3dg'))
            summary['saliency_mass'] = saliency.total_mass
            summary['saliency_skipped'] = saliency.skipped
        return summary

    def evaluate(self, gaze3d_path, truth_path, out_path):
        """与仿真真值对比，写 metrics.json"""
        metrics = evaluate(read_gaze_points(gaze3d_path), read_truth(truth_path))
        write_json(out_path, metrics, indent=2)
        return metrics
