from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from ...common.raster import BinaryMask


@dataclass(frozen=True)
class PixelMetrics:
    """像素级计数，保留原始计数以便跨场景合并"""

    intersection: int = 0
    union: int = 0
    gt_pixels: int = 0
    pred_pixels: int = 0

    @property
    def iou_defined(self) -> bool:
        return self.union > 0

    @property
    def well_detected_defined(self) -> bool:
        return self.gt_pixels > 0

    @property
    def iou(self) -> float:
        return self.intersection / self.union if self.union else 0.0

    @property
    def well_detected_fraction(self) -> float:
        return self.intersection / self.gt_pixels if self.gt_pixels else 0.0

    def __add__(self, other: "PixelMetrics") -> "PixelMetrics":
        return PixelMetrics(
            self.intersection + other.intersection,
            self.union + other.union,
            self.gt_pixels + other.gt_pixels,
            self.pred_pixels + other.pred_pixels,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.update(
            iou=self.iou,
            iou_undefined=not self.iou_defined,
            well_detected_fraction=self.well_detected_fraction,
            well_detected_undefined=not self.well_detected_defined,
        )
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PixelMetrics":
        return cls(int(data["intersection"]), int(data["union"]), int(data["gt_pixels"]), int(data["pred_pixels"]))


def pixel_metrics(gt_mask: BinaryMask, pred_mask: BinaryMask) -> PixelMetrics:
    """油膜类 IoU 与正确检出的油膜像素比例，分母为 0 时记为 0 并标记 undefined"""
    pred_mask.check_matches(gt_mask.shape)
    gt, pred = gt_mask.bits, pred_mask.bits
    return PixelMetrics(
        intersection=int(np.count_nonzero(gt & pred)),
        union=int(np.count_nonzero(gt | pred)),
        gt_pixels=int(np.count_nonzero(gt)),
        pred_pixels=int(np.count_nonzero(pred)),
    )
