"""外部模型预测掩膜的导入接口

外部分割网络只需按栅格容器格式输出 {0, 1} 掩膜即可接入评估流程。
"""

import os
from typing import Optional, Tuple

from loguru import logger

from ...common.raster import BinaryMask, read_raster


def import_prediction_mask(path, scene_shape: Optional[Tuple[int, int]] = None) -> BinaryMask:
    """读取并校验预测掩膜

    Args:
        path: 不带后缀的栅格路径
        scene_shape: 对应场景的 (height, width)，给出时检查尺寸

    Raises:
        NonBinaryMaskError: 存在 0/1 以外的值，offending 为个数
        MaskDimensionError: 与场景尺寸不一致
    """
    grid, _ = read_raster(path)
    mask = BinaryMask.from_raster(grid)
    if scene_shape is not None:
        mask.check_matches(scene_shape)
    logger.info(f"导入预测掩膜 {os.fspath(path)}: {mask.count()} 个油膜像素")
    return mask
