"""数据集统计：每个划分的块数、油膜像素数、海面像素数和油膜占比"""

import os
from typing import List

import pandas as pd
from loguru import logger

from ..evaluate.report import dump_json
from .split import SPLITS, TileManifest

STATS_COLUMNS = ["split", "crops", "slick_pixels", "sea_pixels", "slick_ratio"]
STATS_JSON = "stats.json"
STATS_CSV = "stats.csv"


def _row(name: str, crops: int, slick: int, total: int) -> dict:
    return {
        "split": name,
        "crops": int(crops),
        "slick_pixels": int(slick),
        "sea_pixels": int(total - slick),
        "slick_ratio": slick / total if total else 0.0,
    }


def dataset_stats(manifest: TileManifest) -> pd.DataFrame:
    """每个划分一行，末尾一行为 total；重叠块的像素按块分别计数"""
    rows = []
    for split in SPLITS:
        entries = manifest.by_split(split)
        slick = sum(e.slick_pixel_count for e in entries)
        total = sum(e.size * e.size for e in entries)
        rows.append(_row(split, len(entries), slick, total))

    slick = sum(e.slick_pixel_count for e in manifest.entries)
    total = sum(e.size * e.size for e in manifest.entries)
    rows.append(_row("total", len(manifest.entries), slick, total))
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


def write_stats(table: pd.DataFrame, out_dir) -> List[str]:
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, STATS_JSON)
    csv_path = os.path.join(out_dir, STATS_CSV)
    dump_json(json_path, {row["split"]: row for row in table.to_dict(orient="records")})
    table.to_csv(csv_path, index=False, lineterminator="\n")

    total = table[table["split"] == "total"].iloc[0]
    logger.success(f"数据集统计: {int(total['crops'])} 块，油膜像素占比 {total['slick_ratio']:.2%}")
    return [json_path, csv_path]
