import numpy as np
import pytest

from src.common.errors import GmfDomainError, MaskDimensionError
from src.common.raster import RasterGrid, SceneMetadata
from src.plugins.gmf import build_inversion_lut
from src.plugins.simulate.scene import render_scene
from src.plugins.simulate.wind_field import WindParams, gen_wind_field
from src.plugins.wind import read_wind_field, retrieve_wind, write_wind_field


@pytest.fixture(scope="module")
def clean_scene():
    meta = SceneMetadata(scene_id="retrieval", incidence_angle=(25.0, 40.0))
    params = WindParams(mean_speed=6.0, variance=2.0, correlation_length_px=6.0, direction_spread=30.0)
    wind = gen_wind_field(64, 48, 3, params)
    sigma0, _ = render_scene(meta, wind, [], speckle_looks=None)
    return meta, wind, sigma0


def test_exact_retrieval_recovers_truth(clean_scene):
    meta, wind, sigma0 = clean_scene
    retrieved = retrieve_wind(sigma0, wind.direction, meta, exact=True)
    assert retrieved.provenance == "retrieved"
    assert retrieved.summary["method"] == "bisection"
    # σ0 以 float32 存储，误差主要来自量化
    np.testing.assert_allclose(retrieved.speed.values, wind.speed.values, atol=0.01)


def test_lut_retrieval_within_tolerance(clean_scene):
    meta, wind, sigma0 = clean_scene
    retrieved = retrieve_wind(sigma0, wind.direction, meta)
    assert retrieved.summary["method"] == "lut"
    assert retrieved.summary["valid"] == 64 * 48
    np.testing.assert_allclose(retrieved.speed.values, wind.speed.values, atol=0.12)


def test_nodata_pixels_stay_nodata(clean_scene):
    meta, wind, sigma0 = clean_scene
    values = sigma0.values.copy()
    values[0, :5] = np.nan
    retrieved = retrieve_wind(RasterGrid.from_array(values), wind.direction, meta, exact=True)
    assert retrieved.summary["nodata"] == 5
    assert np.all(np.isnan(retrieved.speed.values[0, :5]))
    assert np.all(np.isfinite(retrieved.speed.values[1:]))


def test_clamped_pixels_are_counted(clean_scene):
    meta, wind, sigma0 = clean_scene
    values = sigma0.values.copy()
    values[2, 2] = 1e-9
    values[3, 3] = 100.0
    retrieved = retrieve_wind(RasterGrid.from_array(values), wind.direction, meta, exact=True)
    assert retrieved.summary["clamped_low"] == 1
    assert retrieved.summary["clamped_high"] == 1
    assert retrieved.speed.values[2, 2] == pytest.approx(0.2)
    assert retrieved.speed.values[3, 3] == pytest.approx(50.0)


def test_shape_mismatch(clean_scene):
    meta, wind, _ = clean_scene
    with pytest.raises(MaskDimensionError):
        retrieve_wind(RasterGrid.from_array(np.ones((4, 4))), wind.direction, meta)


def test_lut_refuses_out_of_range_incidence():
    meta = SceneMetadata(incidence_angle=(50.0, 50.0))
    grid = RasterGrid.from_array(np.full((2, 2), 0.01))
    lut_meta = SceneMetadata(incidence_angle=(45.0, 50.0))
    assert retrieve_wind(grid, grid, lut_meta).summary["valid"] == 4
    lut = build_inversion_lut(np.arange(20.0, 46.0, 1.0), np.arange(0.0, 181.0, 5.0), np.arange(0.2, 30.0, 0.2),
                              validate=False)
    with pytest.raises(GmfDomainError):
        retrieve_wind(grid, grid, meta, lut=lut)


def test_write_and_read(tmp_path, clean_scene):
    meta, wind, sigma0 = clean_scene
    retrieved = retrieve_wind(sigma0, wind.direction, meta)
    write_wind_field(retrieved, meta, tmp_path / "wind")
    loaded = read_wind_field(tmp_path / "wind")
    assert loaded.provenance == "retrieved"
    assert loaded.speed == retrieved.speed
    assert loaded.direction == retrieved.direction
