"""栅格容器：二进制数据 + JSON 头文件

一个栅格由两个文件组成：
    <path>.bin   小端 float32，行优先
    <path>.json  头文件，记录尺寸、像元大小、nodata、场景元数据和 format_version

行优先约定：index(r, c) = r * width + c，(0, 0) 为左上角。
后向散射一律以线性功率保存，只在导出/检测时才换算成 dB。
"""

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger
from PIL import Image

from .errors import (
    MaskDimensionError,
    NonBinaryMaskError,
    RasterCorruptionError,
    RasterFormatError,
    RasterIOError,
    SidecarNotFoundError,
    UnsupportedVersionError,
)

FORMAT_VERSION = 1
RADAR_FREQUENCY_GHZ = 5.405
INCIDENCE_RANGE = (18.0, 50.0)
MAX_PIXELS = 2**31
# 标签栅格以 float32 保存，id 必须能被精确表示
MAX_LABEL_ID = 2**24


def area_hm2(n_pixels: Union[int, np.ndarray], pixel_spacing: float = 10.0):
    """像素个数换算成平方百米（1 hm² = 10^4 m²，10 m 像元时 = 100 像素）"""
    return n_pixels * (pixel_spacing * pixel_spacing) / 1.0e4


def pixels_for_area(area: float, pixel_spacing: float = 10.0) -> float:
    """area_hm2 的反函数"""
    return area * 1.0e4 / (pixel_spacing * pixel_spacing)


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """二维标量场（后向散射、风速、掩膜都用它装）

    Attributes:
        width: 列数
        height: 行数
        values: (height, width) 的 float32 数组，构造后只读
        pixel_spacing: 像元大小，米
        nodata_value: 无效值，默认 NaN
    """

    width: int
    height: int
    values: np.ndarray
    pixel_spacing: float = 10.0
    nodata_value: float = float("nan")

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.shape != (self.height, self.width):
            raise RasterFormatError(
                f"栅格尺寸不一致: values 为 {values.shape}，头信息为 ({self.height}, {self.width})"
            )
        if not self.pixel_spacing > 0:
            raise RasterFormatError(f"pixel_spacing 必须大于 0，当前为 {self.pixel_spacing}")
        if values is self.values:
            values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, array: np.ndarray, pixel_spacing: float = 10.0,
                   nodata_value: float = float("nan")) -> "RasterGrid":
        array = np.asarray(array)
        if array.ndim != 2:
            raise RasterFormatError(f"栅格必须是二维数组，当前维度为 {array.ndim}")
        return cls(width=array.shape[1], height=array.shape[0], values=array,
                   pixel_spacing=pixel_spacing, nodata_value=nodata_value)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def index(self, row: int, col: int) -> int:
        return row * self.width + col

    def valid_mask(self) -> np.ndarray:
        """非 nodata 像元"""
        valid = np.isfinite(self.values)
        if not math.isnan(self.nodata_value):
            valid &= self.values != np.float32(self.nodata_value)
        return valid

    def to_db(self) -> np.ndarray:
        """线性功率 -> dB，非正值和 nodata 记为 NaN"""
        values = self.values.astype(np.float64)
        positive = self.valid_mask() & (values > 0)
        out = np.full(values.shape, np.nan)
        out[positive] = 10.0 * np.log10(values[positive])
        return out

    def __eq__(self, other) -> bool:
        # 逐比特比较，NaN 位置也必须一致
        if not isinstance(other, RasterGrid):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.pixel_spacing == other.pixel_spacing
            and _same_float(self.nodata_value, other.nodata_value)
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None


def _same_float(a: float, b: float) -> bool:
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return a == b


@dataclass(frozen=True)
class SceneMetadata:
    """场景元数据

    incidence_angle 既可以是常数，也可以是 (near, far) 的逐列线性渐变。
    极化方式只作为标签记录。
    """

    scene_id: str = "scene"
    incidence_angle: Union[float, Tuple[float, float]] = (30.0, 45.0)
    pixel_spacing: float = 10.0
    acquisition_seed: int = 0
    radar_frequency: float = RADAR_FREQUENCY_GHZ
    polarization: str = "VV"

    def __post_init__(self):
        if self.radar_frequency != RADAR_FREQUENCY_GHZ:
            raise RasterFormatError(f"radar_frequency 必须为 {RADAR_FREQUENCY_GHZ} GHz，当前为 {self.radar_frequency}")
        if isinstance(self.incidence_angle, (list, tuple)):
            object.__setattr__(self, "incidence_angle", tuple(float(a) for a in self.incidence_angle))
            angles = self.incidence_angle
            if len(angles) != 2:
                raise RasterFormatError("incidence_angle 渐变必须是 [near, far] 两个值")
        else:
            angles = (float(self.incidence_angle),)
        for angle in angles:
            if not INCIDENCE_RANGE[0] <= angle <= INCIDENCE_RANGE[1]:
                raise RasterFormatError(f"入射角 {angle} 超出 [18, 50] 度范围")
        if not 0 <= int(self.acquisition_seed) < 2**64:
            raise RasterFormatError("acquisition_seed 必须是 64 位无符号整数")

    def incidence_grid(self, width: int) -> np.ndarray:
        """每一列的入射角，长度为 width"""
        if isinstance(self.incidence_angle, tuple):
            near, far = self.incidence_angle
            if width == 1:
                return np.array([near])
            return np.linspace(near, far, width)
        return np.full(width, float(self.incidence_angle))

    def to_dict(self) -> Dict[str, Any]:
        angle = self.incidence_angle
        return {
            "scene_id": self.scene_id,
            "incidence_angle": list(angle) if isinstance(angle, tuple) else angle,
            "pixel_spacing": self.pixel_spacing,
            "acquisition_seed": int(self.acquisition_seed),
            "radar_frequency": self.radar_frequency,
            "polarization": self.polarization,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SceneMetadata":
        angle = data.get("incidence_angle", (30.0, 45.0))
        return cls(
            scene_id=data.get("scene_id", "scene"),
            incidence_angle=tuple(angle) if isinstance(angle, list) else angle,
            pixel_spacing=data.get("pixel_spacing", 10.0),
            acquisition_seed=data.get("acquisition_seed", 0),
            radar_frequency=data.get("radar_frequency", RADAR_FREQUENCY_GHZ),
            polarization=data.get("polarization", "VV"),
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """二值掩膜，bits 为 (height, width) 的 bool 数组"""

    width: int
    height: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.shape != (self.height, self.width):
            raise MaskDimensionError(f"掩膜尺寸不一致: bits 为 {bits.shape}，头信息为 ({self.height}, {self.width})")
        if bits is self.bits:
            bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "BinaryMask":
        array = np.asarray(array, dtype=bool)
        return cls(width=array.shape[1], height=array.shape[0], bits=array)

    @classmethod
    def empty(cls, height: int, width: int) -> "BinaryMask":
        return cls(width=width, height=height, bits=np.zeros((height, width), dtype=bool))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def count(self) -> int:
        return int(self.bits.sum())

    def check_matches(self, shape: Tuple[int, int]):
        if self.shape != tuple(shape):
            raise MaskDimensionError(f"掩膜尺寸 {self.shape} 与场景尺寸 {tuple(shape)} 不一致")

    def to_raster(self, pixel_spacing: float = 10.0) -> RasterGrid:
        return RasterGrid.from_array(self.bits.astype(np.float32), pixel_spacing=pixel_spacing)

    @classmethod
    def from_raster(cls, grid: RasterGrid) -> "BinaryMask":
        values = grid.values
        offending = int(np.count_nonzero(~((values == 0.0) | (values == 1.0))))
        if offending:
            raise NonBinaryMaskError(f"掩膜中有 {offending} 个像素不是 0 或 1", offending=offending)
        return cls(width=grid.width, height=grid.height, bits=values == 1.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


# ---------------------------------------------------------------- 文件读写


def _paths(path: Union[str, os.PathLike]) -> Tuple[str, str]:
    path = os.fspath(path)
    return f"{path}.bin", f"{path}.json"


def _encode_float(value: float):
    # JSON 没有 NaN/Inf，用字符串保存
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return value


def _decode_float(value) -> float:
    return float(value)


def write_raster(grid: RasterGrid, meta: SceneMetadata, path: Union[str, os.PathLike],
                 band: Optional[str] = None, attrs: Optional[Dict[str, Any]] = None) -> None:
    """写出 <path>.bin 和 <path>.json

    Args:
        grid: 待写出的栅格
        meta: 场景元数据
        path: 不带后缀的路径
        band: 可选的波段名（sigma0、gt_mask 等）
        attrs: 可选的附加信息，原样写入头文件
    """
    if grid.width * grid.height > MAX_PIXELS:
        raise RasterFormatError(f"栅格过大: {grid.width}x{grid.height} 超过 2^31 像素")

    bin_path, json_path = _paths(path)
    header = {
        "format_version": FORMAT_VERSION,
        "width": grid.width,
        "height": grid.height,
        "pixel_spacing": grid.pixel_spacing,
        "nodata": _encode_float(grid.nodata_value),
        "dtype": "float32",
        "byte_order": "little",
        "metadata": meta.to_dict(),
    }
    if band is not None:
        header["band"] = band
    if attrs:
        header["attrs"] = attrs

    try:
        directory = os.path.dirname(bin_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(bin_path, "wb") as f:
            f.write(grid.values.astype("<f4", copy=False).tobytes(order="C"))
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(header, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise RasterIOError(f"写入栅格失败: {path}: {e}", path=os.fspath(path)) from e
    logger.debug(f"写出栅格 {path} ({grid.width}x{grid.height})")


def read_header(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    """只读头文件"""
    _, json_path = _paths(path)
    if not os.path.exists(json_path):
        raise SidecarNotFoundError(f"sidecar not found: {json_path}", path=json_path)
    try:
        with open(json_path, "r", encoding="utf-8") as f:
            header = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise RasterIOError(f"读取头文件失败: {json_path}: {e}", path=json_path) from e

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"不支持的 format_version: {version}", path=json_path)
    return header


def read_raster(path: Union[str, os.PathLike]) -> Tuple[RasterGrid, SceneMetadata]:
    """write_raster 的逆操作，会校验数据长度"""
    header = read_header(path)
    bin_path, _ = _paths(path)
    width, height = int(header["width"]), int(header["height"])
    if width * height > MAX_PIXELS:
        raise RasterFormatError(f"栅格过大: {width}x{height} 超过 2^31 像素")

    try:
        with open(bin_path, "rb") as f:
            payload = f.read()
    except FileNotFoundError as e:
        raise RasterIOError(f"找不到数据文件: {bin_path}", path=bin_path) from e
    except OSError as e:
        raise RasterIOError(f"读取数据文件失败: {bin_path}: {e}", path=bin_path) from e

    expected = width * height * 4
    if len(payload) != expected:
        raise RasterCorruptionError(
            f"数据长度不符: {bin_path} 期望 {expected} 字节，实际 {len(payload)} 字节",
            path=bin_path, expected=expected, actual=len(payload),
        )

    values = np.frombuffer(payload, dtype="<f4").reshape(height, width).astype(np.float32)
    grid = RasterGrid(
        width=width,
        height=height,
        values=values,
        pixel_spacing=float(header["pixel_spacing"]),
        nodata_value=_decode_float(header.get("nodata", "NaN")),
    )
    meta = SceneMetadata.from_dict(header.get("metadata", {}))
    return grid, meta


def write_mask(mask: BinaryMask, meta: SceneMetadata, path, band: str = "mask") -> None:
    write_raster(mask.to_raster(meta.pixel_spacing), meta, path, band=band)


def read_mask(path) -> Tuple[BinaryMask, SceneMetadata]:
    grid, meta = read_raster(path)
    return BinaryMask.from_raster(grid), meta


def write_labels(labels: np.ndarray, meta: SceneMetadata, path, band: str = "labels") -> None:
    """实例标签栅格，0 为背景"""
    labels = np.asarray(labels)
    if labels.size and int(labels.max()) >= MAX_LABEL_ID:
        raise RasterFormatError(f"标签 id 超过 float32 可精确表示的范围 ({MAX_LABEL_ID})")
    write_raster(RasterGrid.from_array(labels.astype(np.float32), meta.pixel_spacing), meta, path, band=band)


def read_labels(path) -> Tuple[np.ndarray, SceneMetadata]:
    grid, meta = read_raster(path)
    values = grid.values
    if not np.all(np.isfinite(values)) or np.any(values != np.round(values)) or np.any(values < 0):
        raise RasterFormatError(f"标签栅格中存在非整数值: {path}")
    return values.astype(np.int64), meta


def export_png(grid: RasterGrid, db_range: Tuple[float, float], path: Union[str, os.PathLike]) -> None:
    """把线性后向散射按 dB 线性拉伸成 8 位灰度 PNG

    小于 low 的值（包括非正值）置 0，大于 high 的值置 255，nodata 置 0。
    """
    low, high = float(db_range[0]), float(db_range[1])
    if not low < high:
        raise RasterFormatError(f"db_range 必须满足 low < high，当前为 ({low}, {high})")

    db = grid.to_db()
    db = np.where(np.isnan(db), low, db)
    scaled = (np.clip(db, low, high) - low) / (high - low) * 255.0
    image = np.rint(scaled).astype(np.uint8)
    try:
        directory = os.path.dirname(os.fspath(path))
        if directory:
            os.makedirs(directory, exist_ok=True)
        Image.fromarray(image).save(os.fspath(path), format="PNG")
    except OSError as e:
        raise RasterIOError(f"写入 PNG 失败: {path}: {e}", path=os.fspath(path)) from e
