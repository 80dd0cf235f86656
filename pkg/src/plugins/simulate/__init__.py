from .contrast import damping_contrast
from .dataset import DatasetConfig, build_scene, gen_dataset, load_scene, read_manifest, scene_dirs
from .scene import LookalikeConfig, SceneGroundTruth, render_scene
from .slick_shape import SlickSpec, gen_slick_shape
from .wind_field import WindField, WindParams, gen_wind_field, uniform_wind_field

__all__ = [
    "DatasetConfig",
    "LookalikeConfig",
    "SceneGroundTruth",
    "SlickSpec",
    "WindField",
    "WindParams",
    "build_scene",
    "damping_contrast",
    "gen_dataset",
    "gen_slick_shape",
    "gen_wind_field",
    "load_scene",
    "read_manifest",
    "render_scene",
    "scene_dirs",
    "uniform_wind_field",
]
