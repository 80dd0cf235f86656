from .auto_update import update_config
from .config import BenchConfig, load_bins, load_detector_params, load_document, load_section

__all__ = ["BenchConfig", "load_bins", "load_detector_params", "load_document", "load_section", "update_config"]
