from .neighborhood import SlickWindContext, neighborhood_contexts, slick_neighborhood_wind
from .retrieval import read_wind_field, retrieve_wind, write_wind_field

__all__ = [
    "SlickWindContext",
    "neighborhood_contexts",
    "read_wind_field",
    "retrieve_wind",
    "slick_neighborhood_wind",
    "write_wind_field",
]
