import numpy as np
import pytest

from src.common.errors import MaskDimensionError, NonBinaryMaskError, SidecarNotFoundError
from src.common.raster import BinaryMask, RasterGrid, write_mask, write_raster
from src.plugins.detect import import_prediction_mask


def test_valid_mask(tmp_path, meta):
    bits = np.zeros((6, 8), dtype=bool)
    bits[1:3, 2:5] = True
    write_mask(BinaryMask.from_array(bits), meta, tmp_path / "pred")
    mask = import_prediction_mask(tmp_path / "pred", scene_shape=(6, 8))
    assert mask == BinaryMask.from_array(bits)


def test_non_binary_value(tmp_path, meta):
    values = np.zeros((6, 8), dtype=np.float32)
    values[2, 3] = 0.5
    write_raster(RasterGrid.from_array(values), meta, tmp_path / "pred")
    with pytest.raises(NonBinaryMaskError) as info:
        import_prediction_mask(tmp_path / "pred")
    assert info.value.offending == 1


def test_dimension_mismatch(tmp_path, meta):
    write_mask(BinaryMask.empty(6, 8), meta, tmp_path / "pred")
    with pytest.raises(MaskDimensionError):
        import_prediction_mask(tmp_path / "pred", scene_shape=(8, 6))


def test_missing_file(tmp_path):
    with pytest.raises(SidecarNotFoundError):
        import_prediction_mask(tmp_path / "nothing")
