"""位姿估计模块"""

from .models import Correspondence, PnPConfig, PnPResult, RefineOutcome
from .epnp import epnp_solve
from .refine import refine_pose, reprojection_rmse
from .ransac import ransac_pnp

__all__ = [
    'Correspondence',
    'PnPConfig',
    'PnPResult',
    'RefineOutcome',
    'epnp_solve',
    'refine_pose',
    'reprojection_rmse',
    'ransac_pnp',
]
