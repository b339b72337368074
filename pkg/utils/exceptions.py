#!/usr/bin/env python3
"""
异常定义
所有模块共用的错误类型；命令行根据分支决定退出码
"""


class Gaze3DError(Exception):
    """gaze3d 所有错误的基类"""

    exit_code = 2


class UsageError(Gaze3DError):
    """命令行用法错误（退出码 1）"""

    exit_code = 1


class DataError(Gaze3DError):
    """数据/计算错误（退出码 2）"""

    exit_code = 2


# 几何
class GeometryError(DataError):
    pass


class BehindCamera(GeometryError):
    """点在相机后方（z <= 1e-9）"""


class NonPositiveDepth(GeometryError):
    pass


class OutOfImage(GeometryError):
    pass


class ZeroDirection(GeometryError):
    pass


class BadRange(GeometryError):
    pass


class InvalidRotation(GeometryError):
    pass


# 位姿估计
class PoseEstimationError(DataError):
    pass


class InsufficientCorrespondences(PoseEstimationError):
    pass


class DegenerateConfiguration(PoseEstimationError):
    pass


class DivergedBehindCamera(PoseEstimationError):
    pass


class AllBehindCamera(PoseEstimationError):
    pass


class NoConsensus(PoseEstimationError):
    """RANSAC 一致集不足（PnP 与单应性共用）"""


# 特征
class FeatureError(DataError):
    pass


class EmptyTrainSet(FeatureError):
    pass


class TooFewDescriptors(FeatureError):
    pass


class EmptyDatabase(FeatureError):
    pass


class UntrainedTree(FeatureError):
    pass


class DimensionMismatch(FeatureError):
    pass


# 地图
class MappingError(DataError):
    pass


class TooFewKeypoints(MappingError):
    pass


class TooFewMatches(MappingError):
    pass


class EndpointOutsideGrid(MappingError):
    pass


# 视线恢复 / ROI
class EmptySession(DataError):
    pass


class InsufficientPairs(DataError):
    pass


# 仿真
class InvalidSpec(DataError):
    pass


class TargetNotVisible(DataError):
    pass


class LengthMismatch(DataError):
    pass


# 文件格式
class FormatError(DataError):
    """文件格式错误，消息中带路径和行号"""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ''
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ': '
        super().__init__(f"{location}{message}")


class ChecksumError(FormatError):
    pass


class MissingInput(FormatError):
    """会话中缺少必需文件（例如某帧的深度文件）"""
