from .cmod5n import cmod5n_forward
from .lut import InversionLut, build_inversion_lut, default_lut, fold_direction, load_lut, save_lut
from .model import (
    FLAG_CLAMPED_HIGH,
    FLAG_CLAMPED_LOW,
    FLAG_NAMES,
    FLAG_OK,
    SPEED_CEILING,
    SPEED_FLOOR,
    GmfInputs,
    Nrcs,
    SpeedEstimate,
    forward,
    get_gmf,
    invert_speed,
    invert_speed_array,
    register_gmf,
)

__all__ = [
    "FLAG_CLAMPED_HIGH",
    "FLAG_CLAMPED_LOW",
    "FLAG_NAMES",
    "FLAG_OK",
    "SPEED_CEILING",
    "SPEED_FLOOR",
    "GmfInputs",
    "InversionLut",
    "Nrcs",
    "SpeedEstimate",
    "build_inversion_lut",
    "cmod5n_forward",
    "default_lut",
    "fold_direction",
    "forward",
    "get_gmf",
    "invert_speed",
    "invert_speed_array",
    "load_lut",
    "register_gmf",
    "save_lut",
]
