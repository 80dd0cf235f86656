import numpy as np
import pytest
from scipy import ndimage

from src.common.errors import ConfigError, PlacementError
from src.plugins.simulate.slick_shape import SlickSpec, gen_slick_shape

BOUNDS = (256, 256)


def _as_mask(pixels, shape=BOUNDS):
    mask = np.zeros(shape, dtype=bool)
    mask[pixels[:, 0], pixels[:, 1]] = True
    return mask


def _aspect(pixels) -> float:
    centred = pixels - pixels.mean(axis=0)
    eig = np.linalg.eigvalsh(np.cov(centred.T))
    return float(np.sqrt(eig[-1] / eig[0]))


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("kind", ["spill", "seep"])
def test_area_within_tolerance(seed, kind):
    spec = SlickSpec(shape_seed=seed, centroid=(128, 128), target_area=5.0, kind=kind)
    pixels = gen_slick_shape(spec, BOUNDS)
    assert abs(len(pixels) - 500) <= 50
    assert len({tuple(p) for p in pixels}) == len(pixels)
    _, count = ndimage.label(_as_mask(pixels), structure=np.ones((3, 3)))
    assert count == 1


@pytest.mark.parametrize("seed", range(8))
def test_spill_is_elongated(seed):
    spec = SlickSpec(shape_seed=seed, centroid=(128, 128), target_area=10.0)
    assert _aspect(gen_slick_shape(spec, BOUNDS)) >= 2.0


def test_same_seed_same_shape():
    spec = SlickSpec(shape_seed=99, centroid=(100, 60), target_area=3.0, kind="seep")
    np.testing.assert_array_equal(gen_slick_shape(spec, BOUNDS), gen_slick_shape(spec, BOUNDS))


def test_pixels_sorted_and_inside_bounds():
    spec = SlickSpec(shape_seed=4, centroid=(2, 250), target_area=4.0)
    pixels = gen_slick_shape(spec, BOUNDS)
    order = np.lexsort((pixels[:, 1], pixels[:, 0]))
    np.testing.assert_array_equal(order, np.arange(len(pixels)))
    assert pixels.min() >= 0
    assert pixels[:, 0].max() < BOUNDS[0] and pixels[:, 1].max() < BOUNDS[1]


def test_neighbours_keep_one_pixel_gap():
    first = gen_slick_shape(SlickSpec(shape_seed=1, centroid=(128, 128), target_area=8.0), BOUNDS)
    occupied = _as_mask(first)
    second = gen_slick_shape(SlickSpec(shape_seed=2, centroid=(128, 210), target_area=8.0), BOUNDS,
                             occupied=occupied)
    grown = ndimage.binary_dilation(occupied, structure=np.ones((3, 3)))
    assert not np.any(grown & _as_mask(second))


def test_too_large_for_scene():
    with pytest.raises(PlacementError):
        gen_slick_shape(SlickSpec(shape_seed=0, centroid=(16, 16), target_area=20.0), (32, 32))


def test_smaller_than_a_pixel():
    with pytest.raises(PlacementError):
        gen_slick_shape(SlickSpec(shape_seed=0, centroid=(16, 16), target_area=0.001), (32, 32))


def test_no_room_left():
    occupied = np.ones((64, 64), dtype=bool)
    with pytest.raises(PlacementError):
        gen_slick_shape(SlickSpec(shape_seed=0, centroid=(32, 32), target_area=1.0), (64, 64), occupied=occupied)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"target_area": 0.0},
        {"target_area": 2.0e6},
        {"target_area": 1.0, "kind": "sheen"},
        {"target_area": 1.0, "damping_max": 0.0},
        {"target_area": 1.0, "shape_seed": -1},
    ],
)
def test_invalid_spec(kwargs):
    kwargs = {"shape_seed": 0, "centroid": (0, 0), **kwargs}
    with pytest.raises(ConfigError):
        SlickSpec(**kwargs)


def test_spec_round_trip():
    spec = SlickSpec(shape_seed=5, centroid=(10, 20.5), target_area=3.5, kind="seep", damping_max=4.0)
    assert SlickSpec.from_dict(spec.to_dict()) == spec
