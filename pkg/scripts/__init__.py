"""脚本模块"""

