"""场景切块

默认步长等于块大小，不重叠；最后一行/列不足一块时贴齐远端边缘，
与前一块重叠，保证每个像素都被完整大小的块覆盖。
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from ...common.errors import ConfigError, DataError
from ...common.raster import BinaryMask, RasterGrid

DEFAULT_TILE_SIZE = 512


@dataclass(frozen=True)
class Tile:
    scene_id: str
    tile_id: str
    row0: int
    col0: int
    size: int = DEFAULT_TILE_SIZE
    slick_pixel_count: int = 0

    @property
    def sea_pixel_count(self) -> int:
        return self.size * self.size - self.slick_pixel_count

    def window(self):
        return slice(self.row0, self.row0 + self.size), slice(self.col0, self.col0 + self.size)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Tile":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def tile_starts(length: int, size: int, stride: int) -> List[int]:
    """一维起点序列，最后一块贴齐 length - size"""
    if length < size:
        raise DataError(f"边长 {length} 小于块大小 {size}")
    last = length - size
    starts = list(range(0, last + 1, stride))
    if starts[-1] != last:
        starts.append(last)
    return starts


def tile_count(length: int, size: int, stride: Optional[int] = None) -> int:
    """tile_starts 的长度，闭式计算"""
    stride = stride or size
    return math.ceil((length - size) / stride) + 1


def tile_scene(height: int, width: int, size: int = DEFAULT_TILE_SIZE, stride: Optional[int] = None,
               scene_id: str = "scene", slick_mask: Optional[BinaryMask] = None) -> List[Tile]:
    """把 height x width 的场景切成 size x size 的块

    Args:
        stride: 步长，默认等于 size
        slick_mask: 给出时统计每块的油膜像素数

    Raises:
        DataError: 场景任一维小于 size
    """
    stride = stride or size
    if size < 1 or stride < 1:
        raise ConfigError("size 和 stride 必须为正")
    if height < size or width < size:
        raise DataError(f"[{scene_id}] 场景 {width}x{height} 小于块大小 {size}")
    if slick_mask is not None:
        slick_mask.check_matches((height, width))

    tiles = []
    for i, r in enumerate(tile_starts(height, size, stride)):
        for j, c in enumerate(tile_starts(width, size, stride)):
            count = 0
            if slick_mask is not None:
                count = int(np.count_nonzero(slick_mask.bits[r:r + size, c:c + size]))
            tiles.append(Tile(scene_id, f"{scene_id}_r{i:02d}c{j:02d}", r, c, size, count))
    return tiles


def crop_grid(grid: RasterGrid, tile: Tile) -> RasterGrid:
    rows, cols = tile.window()
    if tile.row0 + tile.size > grid.height or tile.col0 + tile.size > grid.width:
        raise DataError(f"块 {tile.tile_id} 超出栅格范围 {grid.width}x{grid.height}")
    return RasterGrid.from_array(grid.values[rows, cols], grid.pixel_spacing, grid.nodata_value)


def crop_mask(mask: BinaryMask, tile: Tile) -> BinaryMask:
    rows, cols = tile.window()
    if tile.row0 + tile.size > mask.height or tile.col0 + tile.size > mask.width:
        raise DataError(f"块 {tile.tile_id} 超出掩膜范围 {mask.width}x{mask.height}")
    return BinaryMask.from_array(mask.bits[rows, cols])
