"""统一的异常层级

CLI 根据异常所属的大类决定退出码：
    ConfigError -> 2, DataError -> 3, 其它 -> 4
"""

from typing import Optional


class SlickWatchError(Exception):
    """所有业务异常的基类"""


class ConfigError(SlickWatchError, ValueError):
    """配置或参数错误"""


class DataError(SlickWatchError):
    """输入数据错误（文件缺失、损坏、维度不匹配等）"""


# ---------------------------------------------------------------- raster 容器


class RasterIOError(DataError):
    """读写栅格文件失败，携带出错路径"""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message)
        self.path = path


class SidecarNotFoundError(RasterIOError, FileNotFoundError):
    """找不到 .json 头文件"""


class RasterCorruptionError(RasterIOError):
    """.bin 数据长度与头文件不符"""

    def __init__(self, message: str, path: Optional[str] = None, expected: int = 0, actual: int = 0):
        super().__init__(message, path)
        self.expected = expected
        self.actual = actual


class UnsupportedVersionError(RasterIOError):
    """未知的 format_version"""


class RasterFormatError(DataError):
    """栅格本身不合法（尺寸溢出、数值非法等）"""


class NonBinaryMaskError(RasterFormatError):
    """掩膜中出现 0/1 以外的值"""

    def __init__(self, message: str, offending: int = 0):
        super().__init__(message)
        self.offending = offending


class MaskDimensionError(DataError):
    """掩膜与场景尺寸不一致"""


# ---------------------------------------------------------------- gmf


class GmfDomainError(SlickWatchError, ValueError):
    """GMF 输入超出定义域，field 为出问题的字段名"""

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class LutResolutionError(ConfigError):
    """查找表网格太粗，达不到 0.1 m/s 的反演精度"""


# ---------------------------------------------------------------- simulate


class PlacementError(DataError):
    """油膜形状无法放入场景"""


class SceneGenerationError(DataError):
    """场景生成失败，携带 scene_id"""

    def __init__(self, message: str, scene_id: str = ""):
        super().__init__(f"[{scene_id}] {message}" if scene_id else message)
        self.scene_id = scene_id


# ---------------------------------------------------------------- wind / evaluate


class NoCleanSeaNeighborhoodError(DataError):
    """实例邻域内没有可用的干净海面像素"""


class DuplicateInstanceError(DataError, ValueError):
    """实例 id 重复"""


class MissingContextError(DataError, KeyError):
    """某个实例缺少风速上下文或面积"""
