from .split import TileEntry, TileManifest, split_dataset
from .stats import dataset_stats, write_stats
from .tiling import Tile, crop_grid, crop_mask, tile_count, tile_scene, tile_starts

__all__ = [
    "Tile",
    "TileEntry",
    "TileManifest",
    "crop_grid",
    "crop_mask",
    "dataset_stats",
    "split_dataset",
    "tile_count",
    "tile_scene",
    "tile_starts",
    "write_stats",
]
