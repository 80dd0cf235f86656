import numpy as np
import pytest
from scipy import ndimage

from src.common.errors import ConfigError
from src.common.raster import RasterGrid, SceneMetadata
from src.plugins.detect import DetectorParams, dark_spot_mask, local_background
from src.plugins.simulate.scene import render_scene
from src.plugins.simulate.slick_shape import SlickSpec
from src.plugins.simulate.wind_field import uniform_wind_field


def _sea(shape=(128, 128), value=0.05):
    return np.full(shape, value)


def test_uniform_sea_is_empty():
    mask = dark_spot_mask(RasterGrid.from_array(_sea()))
    assert mask.count() == 0


def test_all_nodata_is_empty():
    mask = dark_spot_mask(RasterGrid.from_array(np.full((64, 64), np.nan)))
    assert mask.shape == (64, 64)
    assert mask.count() == 0


def test_dark_block_is_found():
    values = _sea()
    values[40:60, 50:70] *= 10 ** (-6 / 10)
    mask = dark_spot_mask(RasterGrid.from_array(values), DetectorParams(background_window=65))
    block = np.zeros(values.shape, dtype=bool)
    block[40:60, 50:70] = True
    assert not np.any(mask.bits & ~block)
    # 开运算只削掉四个角
    assert mask.count() >= 400 - 4


def test_small_blobs_are_dropped():
    values = _sea()
    values[10:13, 10:13] *= 0.1
    mask = dark_spot_mask(RasterGrid.from_array(values), DetectorParams(background_window=65, morph_radius=0))
    assert mask.count() == 0
    keep = dark_spot_mask(RasterGrid.from_array(values),
                          DetectorParams(background_window=65, morph_radius=0, min_area_hm2=0.05))
    assert keep.count() == 9


def test_threshold_is_monotone():
    rng = np.random.default_rng(8)
    values = 0.05 * rng.gamma(4.4, 1 / 4.4, (96, 96))
    values[30:60, 20:70] *= 0.3
    masks = [
        dark_spot_mask(RasterGrid.from_array(values), DetectorParams(background_window=33, threshold_db=t)).bits
        for t in (1.0, 2.0, 3.0, 5.0)
    ]
    for looser, stricter in zip(masks, masks[1:]):
        assert not np.any(stricter & ~looser)


def test_background_matches_median_filter():
    rng = np.random.default_rng(1)
    db = rng.normal(-15.0, 2.0, (30, 41))
    expected = ndimage.median_filter(db, size=9, mode="nearest")
    np.testing.assert_allclose(local_background(db, 9, stride=1), expected)


def test_strided_background_is_exact_on_anchors():
    rng = np.random.default_rng(2)
    db = rng.normal(-15.0, 2.0, (33, 33))
    full = local_background(db, 9, stride=1)
    coarse = local_background(db, 9, stride=8)
    anchors = [0, 8, 16, 24, 32]
    np.testing.assert_allclose(coarse[np.ix_(anchors, anchors)], full[np.ix_(anchors, anchors)])


def test_nan_pixels_never_flagged():
    values = _sea()
    values[20:40, 20:40] = np.nan
    values[70:90, 70:90] *= 0.2
    mask = dark_spot_mask(RasterGrid.from_array(values), DetectorParams(background_window=65))
    assert not mask.bits[20:40, 20:40].any()
    assert mask.bits[75:85, 75:85].all()


def test_image_smaller_than_window_still_runs():
    mask = dark_spot_mask(RasterGrid.from_array(_sea((32, 32))))
    assert mask.shape == (32, 32)


def _damped_slick_scene(seed, size=256, area_hm2=5.0):
    """4 m/s 均匀风场上一个 6 dB 衰减的油膜，L = 4.4"""
    meta = SceneMetadata(scene_id=f"s{seed}", incidence_angle=35.0, acquisition_seed=seed)
    wind = uniform_wind_field(size, size, 4.0)
    slick = SlickSpec(shape_seed=seed, centroid=(size / 2, size / 2), target_area=area_hm2, damping_max=6.0)
    return render_scene(meta, wind, [slick], speckle_looks=4.4, seed=seed)


@pytest.mark.parametrize("seed", range(20))
def test_damped_slick_is_recovered(seed):
    sigma0, truth = _damped_slick_scene(seed)
    gt = truth.semantic_mask.bits
    mask = dark_spot_mask(sigma0, DetectorParams())
    assert gt.sum() > 0
    assert (mask.bits & gt).sum() / gt.sum() >= 0.8


def test_strided_background_gives_nearly_the_same_mask():
    sigma0, truth = _damped_slick_scene(3, size=128, area_hm2=1.5)
    exact = dark_spot_mask(sigma0, DetectorParams(background_window=65, background_stride=1)).bits
    coarse = dark_spot_mask(sigma0, DetectorParams(background_window=65, background_stride=8)).bits
    assert exact.sum() > 0
    assert (exact & coarse).sum() / (exact | coarse).sum() >= 0.9


@pytest.mark.parametrize(
    "kwargs",
    [
        {"background_window": 64},
        {"background_window": 3, "morph_radius": 2},
        {"threshold_db": 0.0},
        {"min_area_hm2": -1.0},
        {"connectivity": 6},
        {"background_stride": 0},
    ],
)
def test_invalid_params(kwargs):
    with pytest.raises(ConfigError):
        DetectorParams(**kwargs)
