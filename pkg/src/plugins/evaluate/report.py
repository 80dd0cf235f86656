"""评估结果落盘

输出文件及列：
    summary.json       全部汇总量
    per_instance.csv   id, size_hm2, wind_mps, outcome, scene_id, role, wind_bin, size_bin
    bins_wind.csv      bin, detected, missed, fa, detection_rate
    bins_size.csv      bin, detected, missed, fa, detection_rate
    evaluation.json    可由 load_evaluation 读回的完整结果
    comparison.csv     多个评估并排比较（write_comparison）
"""

import json
import os
from typing import Any, Dict, List, Mapping, Sequence

import pandas as pd
from loguru import logger

from ...common.errors import ConfigError, DataError
from .binning import NO_CONTEXT_BIN, BinCounts, EvaluationReport

SUMMARY_NAME = "summary.json"
PER_INSTANCE_NAME = "per_instance.csv"
BINS_WIND_NAME = "bins_wind.csv"
BINS_SIZE_NAME = "bins_size.csv"
EVALUATION_NAME = "evaluation.json"
COMPARISON_NAME = "comparison.csv"

PER_INSTANCE_COLUMNS = ["id", "size_hm2", "wind_mps", "outcome", "scene_id", "role", "wind_bin", "size_bin"]
BIN_COLUMNS = ["bin", "detected", "missed", "fa", "detection_rate"]


def dump_json(path: str, document: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(document, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _bin_frame(bins: Mapping[str, BinCounts]) -> pd.DataFrame:
    rows = [{"bin": label, **counts.to_dict()} for label, counts in bins.items()]
    return pd.DataFrame(rows, columns=BIN_COLUMNS)


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")


def write_report(report: EvaluationReport, out_dir) -> List[str]:
    """写出评估结果，相同输入得到逐字节相同的文件

    Returns:
        List[str]: 写出的文件路径
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    per_instance = pd.DataFrame([r.to_dict() for r in report.records], columns=PER_INSTANCE_COLUMNS)
    paths = {name: os.path.join(out_dir, name) for name in
             (SUMMARY_NAME, PER_INSTANCE_NAME, BINS_WIND_NAME, BINS_SIZE_NAME, EVALUATION_NAME)}

    dump_json(paths[SUMMARY_NAME], report.summary())
    _write_csv(per_instance, paths[PER_INSTANCE_NAME])
    _write_csv(_bin_frame(report.wind_bins), paths[BINS_WIND_NAME])
    _write_csv(_bin_frame(report.size_bins), paths[BINS_SIZE_NAME])
    dump_json(paths[EVALUATION_NAME], report.to_dict())

    logger.success(
        f"评估报告已写出: {out_dir} (检出 {report.overall.detected}, 漏检 {report.overall.missed}, "
        f"虚警 {report.overall.fa})"
    )
    return list(paths.values())


def load_evaluation(path) -> EvaluationReport:
    """读回 evaluation.json，path 可以是文件或其所在目录"""
    path = os.fspath(path)
    if os.path.isdir(path):
        path = os.path.join(path, EVALUATION_NAME)
    if not os.path.exists(path):
        raise DataError(f"找不到评估结果: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f"评估结果无法解析: {path}: {e}") from e
    return EvaluationReport.from_dict(data)


def comparison_frame(reports: Sequence[EvaluationReport], names: Sequence[str]) -> pd.DataFrame:
    """每个分箱一行，每个评估贡献 <name>_detection_rate 与 <name>_fa 两列"""
    if len(reports) != len(names):
        raise ConfigError("评估结果与名称数量不一致")
    if len(set(names)) != len(names):
        raise ConfigError(f"评估名称重复: {list(names)}")
    if reports and any(r.bins != reports[0].bins for r in reports[1:]):
        raise ConfigError("参与比较的评估结果分箱设置不同")

    rows: List[Dict[str, Any]] = []
    if reports:
        layout = [("overall", "all", None)]
        layout += [("wind", label, "wind_bins") for label in reports[0].bins.wind_labels + [NO_CONTEXT_BIN]]
        layout += [("size", label, "size_bins") for label in reports[0].bins.size_labels]
        for axis, label, attr in layout:
            row: Dict[str, Any] = {"axis": axis, "bin": label}
            for name, report in zip(names, reports):
                counts = report.overall if attr is None else getattr(report, attr)[label]
                row[f"{name}_detection_rate"] = counts.detection_rate
                row[f"{name}_fa"] = counts.fa
            rows.append(row)

    columns = ["axis", "bin"] + [f"{n}_{k}" for n in names for k in ("detection_rate", "fa")]
    return pd.DataFrame(rows, columns=columns)


def write_comparison(reports: Sequence[EvaluationReport], names: Sequence[str], out_dir) -> str:
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, COMPARISON_NAME)
    _write_csv(comparison_frame(reports, names), path)
    logger.success(f"比较表已写出: {path}")
    return path
