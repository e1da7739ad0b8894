"""Semantically structured image codec with importance-ordered region units."""

from .container import StructuredBitstream, RegionUnit, inspect, parse, serialize, truncate
from .errors import (
    BitstreamError,
    FormatError,
    PriorsError,
    RegionDecodeError,
    SdcompError,
    TransportError,
)
from .imagecore import Image, Rect, crop, load_ppm, save_ppm
from .pipeline import QualityProfile, decode_image, encode_image
from .priors import Level, Ranking, SemanticPriors, heuristic_rank, parse_priors

__version__ = "0.1.0"
