#!/usr/bin/env python3
"""
gaze3d 配置管理器
从 JSON 配置文件读取各模块参数；所有参数都有默认值
"""

import os
import json
import logging

from pnp.models import PnPConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), 'gaze3d_config.json')


class Gaze3DConfigManager:
    """管理 gaze3d 配置的类"""

    def __init__(self, config_path=None):
        """
        初始化配置管理器

        Args:
            config_path: 配置文件路径。如果为None，则使用默认位置（不存在时全部取默认值）
        """
        explicit = config_path is not None
        self.config_path = config_path or DEFAULT_CONFIG_PATH
        self.config = self._load_config(explicit)

    def _load_config(self, explicit):
        """加载配置文件"""
        if not os.path.exists(self.config_path):
            if explicit:
                raise FileNotFoundError(
                    f"配置文件不存在: {self.config_path}\n"
                    f"请复制 config/gaze3d_config.json.example 为 gaze3d_config.json 并编辑"
                )
            logger.debug(f"未找到 {self.config_path}，使用默认配置")
            return {}

        with open(self.config_path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def _section(self, name):
        return self.config.get(name, {}) or {}

    def set_seed(self, seed):
        """命令行 --seed 覆盖 pnp、rois 与仿真种子"""
        for name in ('pnp', 'rois', 'simulation'):
            self.config.setdefault(name, {})['seed'] = int(seed)

    # 通用设置
    def get_log_level(self):
        """日志级别，环境变量 GAZE3D_LOG_LEVEL 优先"""
        level = os.getenv('GAZE3D_LOG_LEVEL') or self._section('settings').get('log_level', 'INFO')
        return str(level).upper()

    def get_workers(self):
        """线程数，环境变量 GAZE3D_WORKERS 优先"""
        env = os.getenv('GAZE3D_WORKERS')
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                logger.warning(f"GAZE3D_WORKERS 不是整数: {env}")
        return max(1, int(self._section('settings').get('workers', 1)))

    # 位姿估计
    def get_pnp_config(self):
        data = dict(self._section('pnp'))
        data.setdefault('workers', self.get_workers())
        return PnPConfig.from_dict(data)

    def get_tracking_params(self):
        tracking = self._section('tracking')
        return {
            'ratio': float(tracking.get('ratio', 0.8)),
            'gate_radius_px': float(tracking.get('gate_radius_px', 50.0)),
            'keyframe_translation_m': float(tracking.get('keyframe_translation_m', 0.25)),
            'keyframe_rotation_deg': float(tracking.get('keyframe_rotation_deg', 10.0)),
            'keyframe_inlier_ratio': float(tracking.get('keyframe_inlier_ratio', 0.5)),
        }

    # 占据栅格
    def get_grid_params(self):
        """对数几率常量（分辨率与范围来自会话清单）"""
        grid = self._section('grid')
        return {
            'l_occ': float(grid.get('l_occ', 0.85)),
            'l_free': float(grid.get('l_free', -0.4)),
            'l_min': float(grid.get('l_min', -2.0)),
            'l_max': float(grid.get('l_max', 3.5)),
            'occupied_threshold': float(grid.get('occupied_threshold', 0.0)),
        }

    # 视线恢复
    def get_gaze_params(self):
        gaze = self._section('gaze')
        return {
            'max_range_m': float(gaze.get('max_range_m', 10.0)),
            'frustum_near_m': float(gaze.get('frustum_near_m', 0.1)),
            'frustum_far_m': float(gaze.get('frustum_far_m', 3.0)),
        }

    # ROI
    def get_roi_params(self):
        rois = self._section('rois')
        return {
            'vocabulary_k': int(rois.get('vocabulary_k', 4)),
            'vocabulary_depth': int(rois.get('vocabulary_depth', 3)),
            'top_n': int(rois.get('top_n', 5)),
            'ratio': float(rois.get('ratio', 0.8)),
            'homography_threshold_px': float(rois.get('homography_threshold_px', 3.0)),
            'homography_iterations': int(rois.get('homography_iterations', 500)),
            'min_inliers': int(rois.get('min_inliers', 12)),
            'min_area_px2': float(rois.get('min_area_px2', 400.0)),
            'planarity_tolerance_m': float(rois.get('planarity_tolerance_m', 0.02)),
            'merge_radius_m': float(rois.get('merge_radius_m', 0.15)),
            'seed': int(rois.get('seed', 0)),
        }

    # 注意力分析
    def get_analytics_params(self):
        analytics = self._section('analytics')
        return {
            'dispersion_threshold_deg': float(analytics.get('dispersion_threshold_deg', 2.5)),
            'min_fixation_ms': int(analytics.get('min_fixation_ms', 100)),
            'aoi_tolerance_m': float(analytics.get('aoi_tolerance_m', 0.02)),
            'max_gap_ms': float(analytics.get('max_gap_ms', 0.0)),
            'saliency_sigma_m': float(analytics.get('saliency_sigma_m', 0.05)),
            'duration_weighted': bool(analytics.get('duration_weighted', False)),
        }

    def get_simulation_seed(self):
        seed = self._section('simulation').get('seed')
        return None if seed is None else int(seed)

    # MongoDB配置
    def get_mongodb_config(self):
        """获取MongoDB配置"""
        return self._section('mongodb')

    def get_mongodb_uri(self):
        """获取MongoDB连接URI"""
        mongo_config = self.get_mongodb_config()
        username = mongo_config.get('username', '')
        password = mongo_config.get('password', '')
        host = mongo_config.get('host', 'localhost')
        port = mongo_config.get('port', 27017)
        auth_source = mongo_config.get('auth_source', 'admin')

        if username and password:
            return f"mongodb://{username}:{password}@{host}:{port}/?authSource={auth_source}"
        return f"mongodb://{host}:{port}/"

    def get_database_name(self):
        """获取数据库名称"""
        return self.get_mongodb_config().get('database', 'gaze3d')
