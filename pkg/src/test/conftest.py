import numpy as np
import pytest

from src.common.raster import RasterGrid, SceneMetadata
from src.plugins.simulate.dataset import DatasetConfig
from src.plugins.simulate.wind_field import WindParams, uniform_wind_field


@pytest.fixture
def meta():
    return SceneMetadata(scene_id="scene_test", incidence_angle=(30.0, 45.0), pixel_spacing=10.0, acquisition_seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def uniform_wind():
    def make(height=64, width=64, speed=5.0, direction=0.0):
        return uniform_wind_field(width, height, speed, direction)

    return make


@pytest.fixture
def grid_from():
    def make(values, pixel_spacing=10.0):
        return RasterGrid.from_array(np.asarray(values, dtype=np.float32), pixel_spacing)

    return make


@pytest.fixture
def small_dataset_config():
    """很小的数据集，供 CLI 和流水线测试使用"""
    return DatasetConfig(
        n_scenes=3,
        width=128,
        height=128,
        test_scenes=1,
        wind=WindParams(correlation_length_px=16.0),
        wind_speed_range=(3.0, 6.0),
        pockets_range=(0, 1),
        pocket_area_range=(5.0, 10.0),
        slicks_range=(1, 2),
        target_pixel_ratio=0.03,
        ratio_tolerance=0.5,
        seed=11,
    )
