"""结果库模块"""

from .mongodb_client import MongoDBClient
from .models import ReportRowData, SessionTotalsData, DwellData

__all__ = [
    'MongoDBClient',
    'ReportRowData',
    'SessionTotalsData',
    'DwellData',
]
