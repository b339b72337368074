"""配置模块"""

from .gaze3d_config_manager import Gaze3DConfigManager

__all__ = ['Gaze3DConfigManager']
