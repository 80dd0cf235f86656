"""油膜周边风速上下文

邻域 = 实例以半径 radius_m 的欧氏圆盘膨胀，再去掉所有油膜像素和 nodata 像素。
10 m 像元时 50 m 半径对应 5 个像素。
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import ndimage

from ...common.errors import ConfigError, DataError, NoCleanSeaNeighborhoodError
from ...common.raster import BinaryMask
from ..detect.instances import SlickInstance, disk_structure
from ..simulate.wind_field import WindField

DEFAULT_RADIUS_M = 50.0


@dataclass(frozen=True)
class SlickWindContext:
    instance_id: int
    mean_neighborhood_speed: float
    neighborhood_pixel_count: int
    radius_m: float = DEFAULT_RADIUS_M

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def neighborhood_mask(pixels: np.ndarray, shape, radius_px: float) -> np.ndarray:
    """实例膨胀后的整图布尔掩膜，越界部分被裁掉"""
    height, width = shape
    reach = int(np.floor(radius_px))
    r0 = max(int(pixels[:, 0].min()) - reach, 0)
    c0 = max(int(pixels[:, 1].min()) - reach, 0)
    r1 = min(int(pixels[:, 0].max()) + reach, height - 1)
    c1 = min(int(pixels[:, 1].max()) + reach, width - 1)

    local = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
    local[pixels[:, 0] - r0, pixels[:, 1] - c0] = True
    grown = ndimage.binary_dilation(local, structure=disk_structure(radius_px))

    full = np.zeros(shape, dtype=bool)
    full[r0:r1 + 1, c0:c1 + 1] = grown
    return full


def slick_neighborhood_wind(instance, wind: WindField, all_slick_mask: Optional[BinaryMask],
                            radius_m: float = DEFAULT_RADIUS_M, instance_id: Optional[int] = None,
                            exclude_slicks: bool = True) -> SlickWindContext:
    """计算一个实例周边干净海面的平均风速

    Args:
        instance: SlickInstance 或 (N, 2) 的 (row, col) 数组
        wind: 风场（真值或反演）
        all_slick_mask: 所有油膜像素，邻域中会剔除这些像素
        radius_m: 邻域半径，米
        exclude_slicks: False 时不剔除油膜像素

    Raises:
        NoCleanSeaNeighborhoodError: 邻域内没有可用像素
    """
    if not radius_m > 0:
        raise ConfigError(f"radius_m 必须为正，当前为 {radius_m}")
    if isinstance(instance, SlickInstance):
        pixels = instance.pixels
        instance_id = instance.instance_id if instance_id is None else instance_id
    else:
        pixels = np.asarray(instance, dtype=np.int64).reshape(-1, 2)
    if pixels.shape[0] == 0:
        raise DataError("实例像素集为空")
    instance_id = 0 if instance_id is None else int(instance_id)

    speed = wind.speed.values
    region = neighborhood_mask(pixels, speed.shape, radius_m / wind.speed.pixel_spacing)
    if exclude_slicks and all_slick_mask is not None:
        all_slick_mask.check_matches(speed.shape)
        region &= ~all_slick_mask.bits
    region &= np.isfinite(speed)

    count = int(region.sum())
    if count == 0:
        raise NoCleanSeaNeighborhoodError(f"实例 {instance_id} 的 {radius_m} m 邻域内没有干净海面像素")
    mean = float(speed[region].astype(np.float64).mean())
    return SlickWindContext(instance_id, mean, count, float(radius_m))


def neighborhood_contexts(instances: Sequence[SlickInstance], wind: WindField,
                          all_slick_mask: Optional[BinaryMask], radius_m: float = DEFAULT_RADIUS_M,
                          exclude_slicks: bool = True, threads: Optional[int] = None,
                          on_empty: str = "raise") -> Dict[int, Optional[SlickWindContext]]:
    """批量计算，返回 {instance_id: context}，顺序与输入一致

    Args:
        on_empty: 邻域内没有干净海面时的处理方式。"raise" 抛出
            NoCleanSeaNeighborhoodError；"undefined" 把该实例的上下文记为 None，
            由评估归入 no-context 箱。油膜像素在任何情况下都不参与平均。
    """
    if on_empty not in ("raise", "undefined"):
        raise ConfigError(f"未知的 on_empty: {on_empty}")
    if all_slick_mask is not None:
        all_slick_mask.check_matches(wind.shape)

    def one(inst: SlickInstance) -> Optional[SlickWindContext]:
        try:
            return slick_neighborhood_wind(inst, wind, all_slick_mask, radius_m, exclude_slicks=exclude_slicks)
        except NoCleanSeaNeighborhoodError:
            if on_empty == "raise":
                raise
            logger.warning(f"实例 {inst.instance_id} 的 {radius_m} m 邻域内没有干净海面，风速上下文记为未定义")
            return None

    if threads == 1 or len(instances) < 2:
        results = [one(inst) for inst in instances]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, instances))
    return {inst.instance_id: ctx for inst, ctx in zip(instances, results)}
