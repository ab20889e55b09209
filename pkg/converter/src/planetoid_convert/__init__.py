"""Citation-dataset conversion tools.

Turns the publicly distributed raw Planetoid files (pickled feature blocks,
a pickled adjacency dict and a test-index list) into a portable all-text
dataset directory, and generates small synthetic planted-partition datasets
for tests. The output format is documented in FORMAT.md and consumed by the
graphboot loader.
"""

from .convert import ConversionReport, convert
from .raw import RawBundleError, RawPlanetoidBundle
from .synth import synth

__version__ = "0.1.0"

__all__ = [
    "ConversionReport",
    "RawBundleError",
    "RawPlanetoidBundle",
    "convert",
    "synth",
]
