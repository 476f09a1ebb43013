"""Random surfaces from uniform polygon gluings: samplers, explorations, exact oracles."""
from .rng import RngStream
from .surface import Configuration, LabeledMap, MapSummary, MultiGraph

__all__ = ["RngStream", "Configuration", "LabeledMap", "MapSummary", "MultiGraph"]
__version__ = "0.1.0"
