import numpy as np
import pytest
from scipy import ndimage

from src.common.errors import MaskDimensionError
from src.common.raster import BinaryMask
from src.plugins.evaluate import PixelMetrics, pixel_metrics


def _mask(bits):
    return BinaryMask.from_array(np.asarray(bits, dtype=bool))


def test_identity():
    bits = np.zeros((10, 10), dtype=bool)
    bits[2:5, 2:5] = True
    metrics = pixel_metrics(_mask(bits), _mask(bits))
    assert metrics.iou == 1.0
    assert metrics.well_detected_fraction == 1.0


def test_disjoint():
    gt = np.zeros((10, 10), dtype=bool)
    pred = np.zeros((10, 10), dtype=bool)
    gt[0:2, 0:2] = True
    pred[5:7, 5:7] = True
    metrics = pixel_metrics(_mask(gt), _mask(pred))
    assert metrics.iou == 0.0
    assert metrics.well_detected_fraction == 0.0


def test_dilated_prediction():
    gt = np.zeros((40, 40), dtype=bool)
    gt[10:20, 10:20] = True
    # 向右扩 5 像素，共 150 像素
    pred = gt.copy()
    pred[10:20, 20:25] = True
    metrics = pixel_metrics(_mask(gt), _mask(pred))
    assert metrics.union == 150
    assert metrics.iou == pytest.approx(100 / 150)
    assert metrics.well_detected_fraction == 1.0


def test_iou_bounds():
    rng = np.random.default_rng(0)
    for _ in range(20):
        gt = rng.random((32, 32)) < 0.2
        pred = ndimage.binary_dilation(gt) if rng.random() < 0.5 else rng.random((32, 32)) < 0.2
        metrics = pixel_metrics(_mask(gt), _mask(pred))
        assert 0.0 <= metrics.iou <= 1.0
        assert 0.0 <= metrics.well_detected_fraction <= 1.0


def test_undefined_when_empty():
    empty = pixel_metrics(_mask(np.zeros((4, 4))), _mask(np.zeros((4, 4))))
    data = empty.to_dict()
    assert data["iou"] == 0.0 and data["iou_undefined"]
    assert data["well_detected_fraction"] == 0.0 and data["well_detected_undefined"]


def test_counts_add_up_across_scenes():
    a = PixelMetrics(intersection=5, union=10, gt_pixels=8, pred_pixels=7)
    b = PixelMetrics(intersection=0, union=10, gt_pixels=10, pred_pixels=0)
    total = a + b
    assert total.iou == pytest.approx(5 / 20)
    assert total.well_detected_fraction == pytest.approx(5 / 18)
    assert PixelMetrics.from_dict(total.to_dict()) == total


def test_shape_mismatch():
    with pytest.raises(MaskDimensionError):
        pixel_metrics(_mask(np.zeros((4, 4))), _mask(np.zeros((4, 5))))
