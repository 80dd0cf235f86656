import json

import numpy as np
import pandas as pd
import pytest

from src.common.raster import BinaryMask
from src.plugins.pipeline.split import split_dataset
from src.plugins.pipeline.stats import STATS_COLUMNS, dataset_stats, write_stats
from src.plugins.pipeline.tiling import tile_scene


@pytest.fixture
def scenes():
    rng = np.random.default_rng(6)
    masks = {}
    for i in range(5):
        bits = np.zeros((160, 160), dtype=bool)
        for _ in range(i):
            r, c = rng.integers(0, 140, 2)
            bits[r:r + 20, c:c + 20] = True
        masks[f"scene_{i:04d}"] = bits
    return masks


def test_recount(scenes):
    tiles = [t for sid, bits in scenes.items()
             for t in tile_scene(160, 160, size=64, scene_id=sid, slick_mask=BinaryMask.from_array(bits))]
    manifest = split_dataset(tiles, seed=0, test_scenes=["scene_0004"])
    table = dataset_stats(manifest).set_index("split")

    for split in ("train", "val", "test"):
        slick = 0
        crops = 0
        for entry in manifest.by_split(split):
            bits = scenes[entry.scene_id]
            slick += int(bits[entry.row0:entry.row0 + entry.size, entry.col0:entry.col0 + entry.size].sum())
            crops += 1
        assert table.loc[split, "crops"] == crops
        assert table.loc[split, "slick_pixels"] == slick
        assert table.loc[split, "sea_pixels"] == crops * 64 * 64 - slick

    assert table.loc["total", "crops"] == len(tiles)
    assert table.loc["total", "slick_pixels"] == table.loc[["train", "val", "test"], "slick_pixels"].sum()


def test_zero_slick_ratio():
    tiles = [t for s in ("a", "b") for t in tile_scene(128, 128, size=64, scene_id=s)]
    table = dataset_stats(split_dataset(tiles, seed=0))
    assert list(table.columns) == STATS_COLUMNS
    assert (table["slick_ratio"] == 0.0).all()
    assert table.loc[table["split"] == "test", "crops"].iloc[0] == 0


def test_write_stats(tmp_path):
    tiles = [t for s in ("a", "b", "c") for t in tile_scene(128, 128, size=64, scene_id=s)]
    table = dataset_stats(split_dataset(tiles, seed=0))
    json_path, csv_path = write_stats(table, tmp_path)
    with open(json_path, encoding="utf-8") as f:
        document = json.load(f)
    assert set(document) == {"train", "val", "test", "total"}
    assert document["total"]["crops"] == 12
    pd.testing.assert_frame_equal(pd.read_csv(csv_path), table, check_dtype=False)
