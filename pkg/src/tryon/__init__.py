"""Per-garment virtual try-on with temporal consistency.

The pipeline: extract a garment-invariant body representation, translate
it into a semantic map with a per-person body-map network, generate a
per-garment dataset, train a recurrent garment synthesizer on ordered
clips, then stream frames through perception -> synthesis -> compositing
in constant memory. A procedural avatar world supplies paired ground truth
for training and for verifying every claim end to end.
"""

__version__ = "0.1.0"

from .config import PipelineConfig
from .rasters import (
    FrameImage,
    MaskImage,
    Palette,
    SemanticMap,
    SYNTHETIC_PALETTE,
    concat_channels,
)

__all__ = [
    "__version__",
    "PipelineConfig",
    "FrameImage",
    "MaskImage",
    "Palette",
    "SemanticMap",
    "SYNTHETIC_PALETTE",
    "concat_channels",
]
