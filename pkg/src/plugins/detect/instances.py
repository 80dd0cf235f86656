"""从语义掩膜/标签栅格中提取油膜实例"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from ...common.errors import ConfigError, DataError
from ...common.raster import BinaryMask, area_hm2

SOURCES = ("ground-truth", "baseline", "imported", "grouped")


def connectivity_structure(connectivity: int) -> np.ndarray:
    """8 连通为 3x3 全 1，4 连通为十字"""
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    raise ConfigError(f"connectivity 只能是 4 或 8，当前为 {connectivity}")


def disk_structure(radius: float) -> np.ndarray:
    """欧氏圆盘结构元，包含到中心距离 <= radius 的像素"""
    reach = int(np.floor(radius))
    yy, xx = np.mgrid[-reach:reach + 1, -reach:reach + 1]
    return (yy * yy + xx * xx) <= radius * radius


@dataclass(frozen=True, eq=False)
class SlickInstance:
    """一个油膜实例

    Attributes:
        instance_id: 场景内唯一的 id
        pixels: (N, 2) 的 (row, col) 整数数组，按行优先排序
        area_hm2: 面积，平方百米
        bbox: (r0, c0, r1, c1)，闭区间
        source: ground-truth / baseline / imported / grouped
        kind: spill 或 seep，只有真值实例才有
    """

    instance_id: int
    pixels: np.ndarray = field(repr=False)
    area_hm2: float
    bbox: Tuple[int, int, int, int]
    source: str = "baseline"
    kind: Optional[str] = None

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        if pixels.shape[0] == 0:
            raise DataError(f"实例 {self.instance_id} 的像素集为空")
        if self.source not in SOURCES:
            raise DataError(f"未知的实例来源: {self.source}")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_pixels(cls, instance_id: int, pixels: np.ndarray, pixel_spacing: float = 10.0,
                    source: str = "baseline", kind: Optional[str] = None) -> "SlickInstance":
        pixels = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
        order = np.lexsort((pixels[:, 1], pixels[:, 0]))
        pixels = pixels[order]
        if pixels.shape[0] == 0:
            raise DataError(f"实例 {instance_id} 的像素集为空")
        bbox = (
            int(pixels[:, 0].min()),
            int(pixels[:, 1].min()),
            int(pixels[:, 0].max()),
            int(pixels[:, 1].max()),
        )
        return cls(
            instance_id=int(instance_id),
            pixels=pixels,
            area_hm2=float(area_hm2(pixels.shape[0], pixel_spacing)),
            bbox=bbox,
            source=source,
            kind=kind,
        )

    @property
    def pixel_count(self) -> int:
        return int(self.pixels.shape[0])

    def to_mask(self, shape: Tuple[int, int]) -> np.ndarray:
        mask = np.zeros(shape, dtype=bool)
        mask[self.pixels[:, 0], self.pixels[:, 1]] = True
        return mask

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "instance_id": self.instance_id,
            "area_hm2": self.area_hm2,
            "pixel_count": self.pixel_count,
            "bbox": list(self.bbox),
            "source": self.source,
        }
        if self.kind is not None:
            data["kind"] = self.kind
        return data


def _sort_by_bbox(instances: List[SlickInstance]) -> List[SlickInstance]:
    return sorted(instances, key=lambda inst: (inst.bbox[0], inst.bbox[1], inst.bbox[2], inst.bbox[3]))


def instances_from_mask(mask, pixel_spacing: float = 10.0, connectivity: int = 8,
                        source: str = "baseline") -> List[SlickInstance]:
    """连通域标记，一个连通域对应一个实例

    实例按外接框 (r0, c0) 排序后从 1 开始编号，和像素扫描顺序无关。
    """
    bits = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(bits, structure=connectivity_structure(connectivity))
    if count == 0:
        return []

    found = []
    for label, window in enumerate(ndimage.find_objects(labels), start=1):
        rows, cols = np.nonzero(labels[window] == label)
        pixels = np.stack([rows + window[0].start, cols + window[1].start], axis=1)
        found.append(SlickInstance.from_pixels(0, pixels, pixel_spacing, source))

    ordered = _sort_by_bbox(found)
    return [
        SlickInstance(
            instance_id=i,
            pixels=inst.pixels,
            area_hm2=inst.area_hm2,
            bbox=inst.bbox,
            source=source,
        )
        for i, inst in enumerate(ordered, start=1)
    ]


def instances_from_labels(labels: np.ndarray, pixel_spacing: float = 10.0, source: str = "ground-truth",
                          kinds: Optional[Dict[int, str]] = None) -> List[SlickInstance]:
    """从标签栅格重建实例，保留标签值作为 id，按 id 排序"""
    labels = np.asarray(labels)
    if labels.size == 0 or not labels.any():
        return []
    kinds = kinds or {}
    instances = []
    for label, window in enumerate(ndimage.find_objects(labels.astype(np.int64)), start=1):
        if window is None:
            continue
        rows, cols = np.nonzero(labels[window] == label)
        pixels = np.stack([rows + window[0].start, cols + window[1].start], axis=1)
        instances.append(SlickInstance.from_pixels(label, pixels, pixel_spacing, source, kinds.get(label)))
    return instances


def labels_from_instances(instances: Sequence[SlickInstance], shape: Tuple[int, int]) -> np.ndarray:
    labels = np.zeros(shape, dtype=np.int64)
    for inst in instances:
        labels[inst.pixels[:, 0], inst.pixels[:, 1]] = inst.instance_id
    return labels


def union_mask(instances: Sequence[SlickInstance], shape: Tuple[int, int]) -> BinaryMask:
    bits = np.zeros(shape, dtype=bool)
    for inst in instances:
        bits[inst.pixels[:, 0], inst.pixels[:, 1]] = True
    return BinaryMask.from_array(bits)


def group_fragments(instances: Sequence[SlickInstance], shape: Tuple[int, int], gap_px: float,
                    pixel_spacing: float = 10.0) -> List[SlickInstance]:
    """把相距不超过 gap_px 的碎片合并成一个实例

    分割结果常把一条油膜切成几段，互相不连通。合并后的实例像素集不再要求 8 连通。
    gap_px <= 0 时原样返回。
    """
    if gap_px <= 0 or len(instances) < 2:
        return list(instances)

    owner = labels_from_instances(instances, shape)
    reach = disk_structure(gap_px / 2.0)
    grown = ndimage.binary_dilation(owner > 0, structure=reach)
    groups, _ = ndimage.label(grown, structure=connectivity_structure(8))

    members: Dict[int, List[SlickInstance]] = {}
    for inst in instances:
        r, c = inst.pixels[0]
        members.setdefault(int(groups[r, c]), []).append(inst)

    merged = []
    for parts in members.values():
        pixels = np.concatenate([p.pixels for p in parts])
        merged.append(SlickInstance.from_pixels(0, pixels, pixel_spacing, source="grouped"))
    ordered = _sort_by_bbox(merged)
    return [
        SlickInstance(instance_id=i, pixels=inst.pixels, area_hm2=inst.area_hm2, bbox=inst.bbox, source="grouped")
        for i, inst in enumerate(ordered, start=1)
    ]
