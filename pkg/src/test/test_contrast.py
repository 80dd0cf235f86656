import numpy as np
import pytest

from src.plugins.simulate.contrast import damping_contrast


@pytest.mark.parametrize("v,expected", [(0.0, 0.0), (1.0, 0.0), (1.5, 0.0), (3.0, 6.0), (4.5, 6.0), (6.0, 6.0),
                                        (10.0, 0.0), (12.0, 0.0), (30.0, 0.0)])
def test_knots(v, expected):
    assert damping_contrast(v) == pytest.approx(expected, abs=1e-12)


def test_scalar_returns_float():
    assert isinstance(damping_contrast(4.5), float)
    assert isinstance(damping_contrast(np.array([4.5])), np.ndarray)


def test_continuous_and_bounded():
    v = np.linspace(0.0, 15.0, 150_001)
    c = damping_contrast(v)
    assert np.all((c >= 0) & (c <= 6.0))
    # 步长 1e-4 下相邻差不应出现跳变
    assert np.max(np.abs(np.diff(c))) < 1e-2


def test_rises_then_falls():
    rise = damping_contrast(np.linspace(1.5, 3.0, 50))
    fall = damping_contrast(np.linspace(6.0, 10.0, 50))
    assert np.all(np.diff(rise) >= 0)
    assert np.all(np.diff(fall) <= 0)


def test_scales_with_damping_max():
    assert damping_contrast(4.0, damping_max=3.0) == pytest.approx(3.0)
    np.testing.assert_allclose(damping_contrast(np.array([2.0, 4.0]), np.array([2.0, 4.0])),
                               [2.0 * damping_contrast(2.0) / 6.0, 4.0])
