from .dark_spot import DetectorParams, dark_spot_mask, local_background
from .importer import import_prediction_mask
from .instances import (
    SlickInstance,
    group_fragments,
    instances_from_labels,
    instances_from_mask,
    labels_from_instances,
    union_mask,
)

__all__ = [
    "DetectorParams",
    "SlickInstance",
    "dark_spot_mask",
    "group_fragments",
    "import_prediction_mask",
    "instances_from_labels",
    "instances_from_mask",
    "labels_from_instances",
    "local_background",
    "union_mask",
]
