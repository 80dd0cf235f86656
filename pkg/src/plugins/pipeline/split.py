"""训练/验证/测试划分

默认按场景划分：同一景的所有块落在同一个集合里。
granularity="crop" 时按块划分，仅用于对照实验。
test_scenes 中的场景不参与洗牌，整体归入 test。
"""

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
from loguru import logger

from ...common.errors import ConfigError, DataError
from .tiling import Tile

SPLITS = ("train", "val", "test")
GRANULARITIES = ("scene", "crop")
MANIFEST_NAME = "tiles.json"


@dataclass(frozen=True)
class TileEntry:
    scene_id: str
    tile_id: str
    row0: int
    col0: int
    size: int
    split: str
    slick_pixel_count: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scene_id": self.scene_id,
            "tile_id": self.tile_id,
            "row0": self.row0,
            "col0": self.col0,
            "size": self.size,
            "split": self.split,
            "slick_pixel_count": self.slick_pixel_count,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TileEntry":
        if data.get("split") not in SPLITS:
            raise DataError(f"未知的划分: {data.get('split')}")
        return cls(
            scene_id=str(data["scene_id"]),
            tile_id=str(data["tile_id"]),
            row0=int(data["row0"]),
            col0=int(data["col0"]),
            size=int(data["size"]),
            split=str(data["split"]),
            slick_pixel_count=int(data["slick_pixel_count"]),
        )


@dataclass
class TileManifest:
    entries: List[TileEntry]
    dataset_seed: int
    ratios: Tuple[float, float] = (0.85, 0.15)
    granularity: str = "scene"
    test_scenes: List[str] = field(default_factory=list)

    def by_split(self, split: str) -> List[TileEntry]:
        return [e for e in self.entries if e.split == split]

    def scenes_in(self, split: str) -> List[str]:
        return sorted({e.scene_id for e in self.entries if e.split == split})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset_seed": self.dataset_seed,
            "ratios": list(self.ratios),
            "granularity": self.granularity,
            "test_scenes": list(self.test_scenes),
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TileManifest":
        return cls(
            entries=[TileEntry.from_dict(e) for e in data.get("entries", [])],
            dataset_seed=int(data.get("dataset_seed", 0)),
            ratios=tuple(data.get("ratios", (0.85, 0.15))),
            granularity=data.get("granularity", "scene"),
            test_scenes=list(data.get("test_scenes", [])),
        )

    def write(self, out_dir) -> str:
        path = os.path.join(os.fspath(out_dir), MANIFEST_NAME)
        os.makedirs(os.fspath(out_dir), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @classmethod
    def read(cls, path) -> "TileManifest":
        path = os.fspath(path)
        if os.path.isdir(path):
            path = os.path.join(path, MANIFEST_NAME)
        if not os.path.exists(path):
            raise DataError(f"找不到切块清单: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def _check_ratios(ratios: Sequence[float]) -> Tuple[float, float]:
    if len(ratios) != 2:
        raise ConfigError(f"划分比例必须是 (train, val) 两项，当前为 {list(ratios)}")
    train, val = float(ratios[0]), float(ratios[1])
    if train < 0 or val < 0 or abs(train + val - 1.0) > 1e-6:
        raise ConfigError(f"划分比例之和必须为 1，当前为 {train} + {val}")
    return train, val


def _n_train(n: int, train_ratio: float) -> int:
    # 两个集合都至少分到一个
    return min(max(int(round(train_ratio * n)), 1), n - 1)


def split_dataset(tiles: Iterable[Tile], ratios: Sequence[float] = (0.85, 0.15), seed: int = 0,
                  test_scenes: Sequence[str] = (), granularity: str = "scene") -> TileManifest:
    """按种子洗牌划分训练/验证集

    Raises:
        ConfigError: 比例之和不为 1，或 granularity 未知
        DataError: 参与划分的场景（或块）少于 2 个
    """
    ratios = _check_ratios(ratios)
    if granularity not in GRANULARITIES:
        raise ConfigError(f"未知的划分粒度: {granularity}")
    tiles = list(tiles)
    held_out = set(test_scenes)

    pool = [t for t in tiles if t.scene_id not in held_out]
    if granularity == "scene":
        units = sorted({t.scene_id for t in pool})
    else:
        units = sorted(t.tile_id for t in pool)
    if len(units) < 2:
        raise DataError(f"可划分的{'场景' if granularity == 'scene' else '块'}只有 {len(units)} 个，至少需要 2 个")

    rng = np.random.default_rng(int(seed))
    order = rng.permutation(len(units))
    n_train = _n_train(len(units), ratios[0])
    train_units = {units[i] for i in order[:n_train]}

    entries = []
    for t in tiles:
        if t.scene_id in held_out:
            split = "test"
        else:
            split = "train" if (t.scene_id if granularity == "scene" else t.tile_id) in train_units else "val"
        entries.append(TileEntry(t.scene_id, t.tile_id, t.row0, t.col0, t.size, split, t.slick_pixel_count))
    entries.sort(key=lambda e: (e.scene_id, e.row0, e.col0))

    manifest = TileManifest(entries, int(seed), ratios, granularity, sorted(held_out))
    logger.info(
        f"划分完成: train {len(manifest.by_split('train'))} 块, val {len(manifest.by_split('val'))} 块, "
        f"test {len(manifest.by_split('test'))} 块"
    )
    return manifest
