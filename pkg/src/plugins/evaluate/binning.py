"""按风速、面积分箱统计检出/漏检/虚警

风速箱左闭右开 [a, b)，最后一箱开放到 inf；
面积箱左开右闭 (a, b]，超过最后一个边界的实例归入最后一箱。
邻域内没有干净海面的实例风速未定义，单独计入 no-context 箱。
"""

import math
import statistics
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from ...common.errors import ConfigError, MissingContextError
from ..wind.neighborhood import SlickWindContext
from .matching import MatchResult
from .metrics import PixelMetrics

DEFAULT_WIND_EDGES = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, math.inf)
DEFAULT_SIZE_EDGES = (0.0, 10.0, 1.0e2, 1.0e3, 1.0e4, 1.0e5, 1.0e6)
LARGE_FA_HM2 = 20.0

OUTCOMES = ("detected", "missed", "false_alarm")
NO_CONTEXT_BIN = "no-context"

ContextLike = Union[SlickWindContext, float, None]


def _fmt_edge(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:g}"


@dataclass(frozen=True)
class BinningSpec:
    wind_edges: Sequence[float] = DEFAULT_WIND_EDGES
    size_edges: Sequence[float] = DEFAULT_SIZE_EDGES

    def __post_init__(self):
        for name in ("wind_edges", "size_edges"):
            edges = tuple(float(e) for e in getattr(self, name))
            if len(edges) < 2:
                raise ConfigError(f"{name} 至少需要两个边界")
            if edges[0] != 0.0:
                raise ConfigError(f"{name} 的第一个边界必须为 0")
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise ConfigError(f"{name} 必须严格递增")
            object.__setattr__(self, name, edges)

    @property
    def wind_labels(self) -> List[str]:
        edges = self.wind_edges
        return [f"[{_fmt_edge(a)},{_fmt_edge(b)})" for a, b in zip(edges, edges[1:])]

    @property
    def size_labels(self) -> List[str]:
        edges = self.size_edges
        return [f"({_fmt_edge(a)},{_fmt_edge(b)}]" for a, b in zip(edges, edges[1:])]

    def wind_bin(self, speed: Optional[float]) -> str:
        if speed is None:
            return NO_CONTEXT_BIN
        idx = int(np.searchsorted(self.wind_edges, speed, side="right")) - 1
        return self.wind_labels[min(max(idx, 0), len(self.wind_edges) - 2)]

    def size_bin(self, area: float) -> str:
        idx = int(np.searchsorted(self.size_edges, area, side="left")) - 1
        return self.size_labels[min(max(idx, 0), len(self.size_edges) - 2)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "wind_edges": [_fmt_edge(e) if math.isinf(e) else e for e in self.wind_edges],
            "size_edges": [_fmt_edge(e) if math.isinf(e) else e for e in self.size_edges],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BinningSpec":
        return cls(
            wind_edges=tuple(float(e) for e in data.get("wind_edges", DEFAULT_WIND_EDGES)),
            size_edges=tuple(float(e) for e in data.get("size_edges", DEFAULT_SIZE_EDGES)),
        )


@dataclass
class BinCounts:
    detected: int = 0
    missed: int = 0
    fa: int = 0

    @property
    def detection_rate(self) -> float:
        total = self.detected + self.missed
        return self.detected / total if total else 0.0

    def add(self, outcome: str) -> None:
        if outcome == "detected":
            self.detected += 1
        elif outcome == "missed":
            self.missed += 1
        else:
            self.fa += 1

    def merged(self, other: "BinCounts") -> "BinCounts":
        return BinCounts(self.detected + other.detected, self.missed + other.missed, self.fa + other.fa)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "detected": self.detected,
            "missed": self.missed,
            "fa": self.fa,
            "detection_rate": self.detection_rate,
        }


@dataclass(frozen=True)
class InstanceRecord:
    """per_instance.csv 的一行"""

    scene_id: str
    role: str  # gt / pred
    instance_id: int
    size_hm2: float
    wind_mps: Optional[float]  # None 表示邻域内没有干净海面
    outcome: str
    wind_bin: str
    size_bin: str

    def sort_key(self):
        return self.scene_id, self.role, self.instance_id

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.instance_id,
            "size_hm2": self.size_hm2,
            "wind_mps": self.wind_mps,
            "outcome": self.outcome,
            "scene_id": self.scene_id,
            "role": self.role,
            "wind_bin": self.wind_bin,
            "size_bin": self.size_bin,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "InstanceRecord":
        return cls(
            scene_id=str(data["scene_id"]),
            role=str(data["role"]),
            instance_id=int(data["id"]),
            size_hm2=float(data["size_hm2"]),
            wind_mps=_optional_float(data.get("wind_mps")),
            outcome=str(data["outcome"]),
            wind_bin=str(data["wind_bin"]),
            size_bin=str(data["size_bin"]),
        )


@dataclass
class EvaluationReport:
    """评估结果，既可以是一景也可以是合并后的整个测试集"""

    bins: BinningSpec = field(default_factory=BinningSpec)
    n_scenes: int = 0
    n_gt: int = 0
    overall: BinCounts = field(default_factory=BinCounts)
    wind_bins: Dict[str, BinCounts] = field(default_factory=dict)
    size_bins: Dict[str, BinCounts] = field(default_factory=dict)
    pixels: PixelMetrics = field(default_factory=PixelMetrics)
    records: List[InstanceRecord] = field(default_factory=list)

    def __post_init__(self):
        for label in self.bins.wind_labels + [NO_CONTEXT_BIN]:
            self.wind_bins.setdefault(label, BinCounts())
        for label in self.bins.size_labels:
            self.size_bins.setdefault(label, BinCounts())

    @property
    def fa_areas(self) -> List[float]:
        return [r.size_hm2 for r in self.records if r.outcome == "false_alarm"]

    def summary(self) -> Dict[str, Any]:
        fa_areas = self.fa_areas
        return {
            "n_scenes": self.n_scenes,
            "n_gt": self.n_gt,
            "detected": self.overall.detected,
            "missed": self.overall.missed,
            "fa": self.overall.fa,
            "detection_rate": self.overall.detection_rate,
            "fa_per_scene": self.overall.fa / self.n_scenes if self.n_scenes else 0.0,
            "fa_per_gt": self.overall.fa / self.n_gt if self.n_gt else 0.0,
            "fa_median_area_hm2": float(statistics.median(fa_areas)) if fa_areas else 0.0,
            "fa_large_fraction": (
                sum(1 for a in fa_areas if a > LARGE_FA_HM2) / len(fa_areas) if fa_areas else 0.0
            ),
            "pixel": self.pixels.to_dict(),
            "bins": self.bins.to_dict(),
            "wind_bins": {k: self._bin_summary(v) for k, v in self.wind_bins.items()},
            "size_bins": {k: self._bin_summary(v) for k, v in self.size_bins.items()},
        }

    def _bin_summary(self, counts: BinCounts) -> Dict[str, Any]:
        data = counts.to_dict()
        data["fa_per_scene"] = counts.fa / self.n_scenes if self.n_scenes else 0.0
        return data

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bins": self.bins.to_dict(),
            "n_scenes": self.n_scenes,
            "n_gt": self.n_gt,
            "pixels": {
                "intersection": self.pixels.intersection,
                "union": self.pixels.union,
                "gt_pixels": self.pixels.gt_pixels,
                "pred_pixels": self.pixels.pred_pixels,
            },
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationReport":
        """由 to_dict 的结果重建，分箱计数从逐实例记录重新累加"""
        report = cls(
            bins=BinningSpec.from_dict(data.get("bins", {})),
            n_scenes=int(data.get("n_scenes", 0)),
            n_gt=int(data.get("n_gt", 0)),
            pixels=PixelMetrics.from_dict(data["pixels"]) if "pixels" in data else PixelMetrics(),
        )
        for row in data.get("records", []):
            report._add(InstanceRecord.from_dict(row))
        return report

    def _add(self, record: InstanceRecord) -> None:
        self.records.append(record)
        self.overall.add(record.outcome)
        self.wind_bins[record.wind_bin].add(record.outcome)
        self.size_bins[record.size_bin].add(record.outcome)


def _optional_float(value) -> Optional[float]:
    if value is None or (isinstance(value, str) and not value):
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _speed_of(contexts: Mapping[int, ContextLike], instance_id: int, role: str) -> Optional[float]:
    if instance_id not in contexts:
        raise MissingContextError(f"{role} 实例 {instance_id} 缺少风速上下文")
    ctx = contexts[instance_id]
    if ctx is None:
        return None
    speed = ctx.mean_neighborhood_speed if isinstance(ctx, SlickWindContext) else float(ctx)
    if not math.isfinite(speed):
        raise MissingContextError(f"{role} 实例 {instance_id} 的风速上下文无效")
    return float(speed)


def _size_of(sizes: Mapping[int, float], instance_id: int, role: str) -> float:
    if instance_id not in sizes:
        raise MissingContextError(f"{role} 实例 {instance_id} 缺少面积")
    return float(sizes[instance_id])


def bin_outcomes(match: MatchResult, gt_contexts: Mapping[int, ContextLike], gt_sizes: Mapping[int, float],
                 pred_contexts: Optional[Mapping[int, ContextLike]] = None,
                 pred_sizes: Optional[Mapping[int, float]] = None, bins: Optional[BinningSpec] = None,
                 scene_id: str = "", pixels: Optional[PixelMetrics] = None) -> EvaluationReport:
    """把一景的匹配结果按风速/面积分箱

    真值按其周边风速和自身面积分箱；虚警按其自身的邻域风速和面积分箱。
    上下文为 None 的实例进入 no-context 风速箱，面积箱照常。

    Raises:
        MissingContextError: 某个实例缺少风速或面积，消息中带 id
    """
    bins = bins or BinningSpec()
    pred_contexts = pred_contexts or {}
    pred_sizes = pred_sizes or {}

    outcomes = [(g, "detected") for g in match.detected_ids] + [(g, "missed") for g in match.missed_gt]
    report = EvaluationReport(
        bins=bins,
        n_scenes=1,
        n_gt=len(outcomes),
        pixels=pixels or PixelMetrics(),
    )
    rows = []
    for gt_id, outcome in outcomes:
        speed = _speed_of(gt_contexts, gt_id, "真值")
        size = _size_of(gt_sizes, gt_id, "真值")
        rows.append(
            InstanceRecord(scene_id, "gt", gt_id, size, speed, outcome, bins.wind_bin(speed), bins.size_bin(size))
        )
    for pred_id in match.false_alarms:
        speed = _speed_of(pred_contexts, pred_id, "预测")
        size = _size_of(pred_sizes, pred_id, "预测")
        rows.append(
            InstanceRecord(
                scene_id, "pred", pred_id, size, speed, "false_alarm", bins.wind_bin(speed), bins.size_bin(size)
            )
        )
    for row in sorted(rows, key=InstanceRecord.sort_key):
        report._add(row)
    return report


def merge_reports(*reports: EvaluationReport) -> EvaluationReport:
    """合并多景的评估结果，满足结合律和交换律（逐实例记录按 scene/role/id 排序）"""
    if not reports:
        return EvaluationReport()
    bins = reports[0].bins
    for other in reports[1:]:
        if other.bins != bins:
            raise ConfigError("无法合并分箱设置不同的评估结果")

    merged = EvaluationReport(
        bins=bins,
        n_scenes=sum(r.n_scenes for r in reports),
        n_gt=sum(r.n_gt for r in reports),
        pixels=sum((r.pixels for r in reports), PixelMetrics()),
    )
    for record in sorted((rec for r in reports for rec in r.records), key=InstanceRecord.sort_key):
        merged._add(record)
    return merged
