import numpy as np
import pytest
from scipy import ndimage

from src.common.errors import ConfigError, RasterFormatError
from src.common.raster import RasterGrid
from src.plugins.simulate.wind_field import (
    LOW_WIND_THRESHOLD,
    WindField,
    WindParams,
    gen_wind_field,
    uniform_wind_field,
)


def test_same_seed_same_field():
    params = WindParams(mean_speed=6.0, variance=1.0, correlation_length_px=8.0, low_wind_pockets=1,
                        pocket_area_hm2=5.0)
    a = gen_wind_field(96, 80, 42, params)
    b = gen_wind_field(96, 80, 42, params)
    c = gen_wind_field(96, 80, 43, params)
    assert a == b
    assert a.speed != c.speed
    assert a.shape == (80, 96)
    assert a.provenance == "simulated-truth"


def test_background_statistics():
    params = WindParams(mean_speed=7.0, variance=4.0, correlation_length_px=4.0, direction_spread=0.0,
                        mean_direction=30.0)
    field = gen_wind_field(256, 256, 1, params)
    speed = field.speed.values
    assert speed.mean() == pytest.approx(7.0, abs=0.05)
    assert speed.std() == pytest.approx(2.0, rel=0.05)
    assert np.all(speed >= 0)
    assert np.all(field.direction.values == np.float32(30.0))


def test_two_pockets_of_requested_area():
    params = WindParams(mean_speed=5.0, variance=0.25, low_wind_pockets=2, pocket_area_hm2=20.0)
    field = gen_wind_field(256, 256, 7, params, pixel_spacing=10.0)
    low = field.speed.values < LOW_WIND_THRESHOLD
    labels, count = ndimage.label(low, structure=np.ones((3, 3)))
    assert count == 2
    sizes = np.bincount(labels.ravel())[1:]
    assert np.all(np.abs(sizes - 2000) <= 0.2 * 2000)
    assert len(field.summary["pockets"]) == 2
    assert field.speed.values.min() == pytest.approx(params.pocket_min_speed, abs=0.1)


def test_zero_variance_is_flat():
    field = gen_wind_field(32, 32, 0, WindParams(mean_speed=3.0, variance=0.0, direction_spread=0.0))
    assert np.all(field.speed.values == 3.0)


def test_pockets_covering_too_much_rejected():
    with pytest.raises(ConfigError):
        gen_wind_field(256, 256, 0, WindParams(low_wind_pockets=40, pocket_area_hm2=20.0))


@pytest.mark.parametrize(
    "params",
    [
        WindParams(mean_speed=16.0),
        WindParams(variance=-1.0),
        WindParams(correlation_length_px=0.5),
        WindParams(pocket_min_speed=1.5),
    ],
)
def test_invalid_params(params):
    with pytest.raises(ConfigError):
        gen_wind_field(32, 32, 0, params)


def test_from_dict_ignores_unknown_keys():
    params = WindParams.from_dict({"mean_speed": 4.0, "unused": 1})
    assert params.mean_speed == 4.0
    assert WindParams.from_dict(params.to_dict()) == params


def test_wind_field_invariants():
    speed = RasterGrid.from_array(np.ones((4, 4)))
    with pytest.raises(RasterFormatError):
        WindField(speed, RasterGrid.from_array(np.ones((4, 5))))
    with pytest.raises(RasterFormatError):
        WindField(speed, speed, provenance="guessed")
    with pytest.raises(RasterFormatError):
        WindField(RasterGrid.from_array(-np.ones((4, 4))), speed)


def test_uniform_field():
    field = uniform_wind_field(8, 4, 4.5, direction=370.0)
    assert field.shape == (4, 8)
    assert np.all(field.speed.values == 4.5)
    assert np.all(field.direction.values == np.float32(10.0))
