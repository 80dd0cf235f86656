"""由 σ0 影像反演风速"""

import os
from typing import Optional

import numpy as np
from loguru import logger

from ...common.errors import MaskDimensionError
from ...common.raster import RasterGrid, SceneMetadata, read_header, read_raster, write_raster
from ..gmf.lut import InversionLut, default_lut
from ..gmf.model import FLAG_CLAMPED_HIGH, FLAG_CLAMPED_LOW, invert_speed_array
from ..simulate.scene import ANTENNA_AZIMUTH
from ..simulate.wind_field import WindField


def retrieve_wind(sigma0: RasterGrid, direction: RasterGrid, meta: SceneMetadata,
                  lut: Optional[InversionLut] = None, exact: bool = False) -> WindField:
    """逐像素反演风速，风向作为已知输入

    Args:
        sigma0: 线性 σ0 影像
        direction: 风向（度），通常取仿真真值
        meta: 场景元数据，提供逐列入射角
        lut: 查找表，默认使用进程内共享的 default_lut()
        exact: True 时用二分法精确反演，不走查找表

    Returns:
        WindField: provenance 为 retrieved，summary 中记录 nodata/钳制像素数
    """
    if sigma0.shape != direction.shape:
        raise MaskDimensionError(f"σ0 {sigma0.shape} 与风向 {direction.shape} 尺寸不一致")

    values = np.where(sigma0.valid_mask(), sigma0.values.astype(np.float64), np.nan)
    phi = direction.values.astype(np.float64) - ANTENNA_AZIMUTH
    theta = meta.incidence_grid(sigma0.width)[None, :]

    if exact:
        speed, flags = invert_speed_array(values, phi, theta)
    else:
        speed, flags = (lut or default_lut()).invert(values, phi, theta)

    nodata = ~np.isfinite(speed)
    summary = {
        "nodata": int(nodata.sum()),
        "clamped_low": int(np.count_nonzero(flags == FLAG_CLAMPED_LOW)),
        "clamped_high": int(np.count_nonzero(flags == FLAG_CLAMPED_HIGH)),
        "valid": int((~nodata).sum()),
        "method": "bisection" if exact else "lut",
    }
    if summary["nodata"]:
        logger.warning(f"[{meta.scene_id}] {summary['nodata']} 个 nodata 像素未参与反演")
    logger.debug(f"[{meta.scene_id}] 风速反演完成: {summary}")

    return WindField(
        speed=RasterGrid.from_array(speed, sigma0.pixel_spacing),
        direction=direction,
        provenance="retrieved",
        summary=summary,
    )


def write_wind_field(wind: WindField, meta: SceneMetadata, prefix) -> None:
    """写出 <prefix>_speed 与 <prefix>_direction 两个栅格"""
    prefix = os.fspath(prefix)
    attrs = {"provenance": wind.provenance}
    write_raster(wind.speed, meta, f"{prefix}_speed", band="wind_speed", attrs=attrs)
    write_raster(wind.direction, meta, f"{prefix}_direction", band="wind_direction", attrs=attrs)


def read_wind_field(prefix) -> WindField:
    prefix = os.fspath(prefix)
    speed, _ = read_raster(f"{prefix}_speed")
    direction, _ = read_raster(f"{prefix}_direction")
    provenance = read_header(f"{prefix}_speed").get("attrs", {}).get("provenance", "retrieved")
    return WindField(speed=speed, direction=direction, provenance=provenance)
