"""预测与真值的实例匹配

真值实例只要与任一预测相交至少 min_intersection_px 个像素即算检出；
与所有真值的交都不足 min_intersection_px 的预测算虚警。允许多对多。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ...common.errors import ConfigError, DuplicateInstanceError
from ..detect.instances import SlickInstance


@dataclass
class MatchResult:
    detected_gt: List[Tuple[int, List[int]]]
    missed_gt: List[int]
    false_alarms: List[int]
    min_intersection_px: int = 1
    # (gt_id, pred_id) -> 交集像素数，只记录达到阈值的组合
    overlaps: Dict[Tuple[int, int], int] = field(default_factory=dict)

    @property
    def detected_ids(self) -> List[int]:
        return [gt_id for gt_id, _ in self.detected_gt]

    def matched_predictions(self) -> List[int]:
        return sorted({p for _, preds in self.detected_gt for p in preds})


def _check_unique(instances: Sequence[SlickInstance], role: str) -> None:
    ids = [inst.instance_id for inst in instances]
    if len(ids) != len(set(ids)):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise DuplicateInstanceError(f"{role} 实例 id 重复: {dup}")


def _keyed(instances: Sequence[SlickInstance], column: str) -> pd.DataFrame:
    if not instances:
        return pd.DataFrame({"key": np.empty(0, dtype=np.int64), column: np.empty(0, dtype=np.int64)})
    keys = np.concatenate([(inst.pixels[:, 0] << 32) | inst.pixels[:, 1] for inst in instances])
    owners = np.concatenate([np.full(inst.pixel_count, inst.instance_id, dtype=np.int64) for inst in instances])
    return pd.DataFrame({"key": keys, column: owners})


def match_instances(gt: Sequence[SlickInstance], pred: Sequence[SlickInstance],
                    min_intersection_px: int = 1) -> MatchResult:
    """多对多实例匹配

    Raises:
        DuplicateInstanceError: 同一侧出现重复 id
    """
    if min_intersection_px < 1:
        raise ConfigError("min_intersection_px 必须 >= 1")
    _check_unique(gt, "真值")
    _check_unique(pred, "预测")

    joined = _keyed(gt, "gt").merge(_keyed(pred, "pred"), on="key")
    counts = joined.groupby(["gt", "pred"]).size()
    counts = counts[counts >= min_intersection_px]
    overlaps = {(int(g), int(p)): int(n) for (g, p), n in counts.items()}

    hits: Dict[int, List[int]] = {}
    for g, p in sorted(overlaps):
        hits.setdefault(g, []).append(p)
    matched_pred = {p for _, p in overlaps}

    gt_ids = sorted(inst.instance_id for inst in gt)
    return MatchResult(
        detected_gt=[(g, hits[g]) for g in gt_ids if g in hits],
        missed_gt=[g for g in gt_ids if g not in hits],
        false_alarms=sorted(inst.instance_id for inst in pred if inst.instance_id not in matched_pred),
        min_intersection_px=min_intersection_px,
        overlaps=overlaps,
    )
