"""Hyperspectral degradation synthesis, frequency-domain analysis and restoration metrics."""

from .cube import (
    DEFAULT_EXCLUSION,
    BandExclusionList,
    HsiCube,
    SceneSpec,
    exclude_bands,
    export_band_pgm,
    random_crop,
    read_cube,
    synth_scene,
    write_cube,
    write_pgm,
)
from .degrade import GatedDegradation, degrade_pipeline, describe, sample_recipe
from .exceptions import (
    BoundsError,
    DegenerateBinError,
    HsiError,
    HsiFormatError,
    InvariantError,
    ParameterError,
    ShapeError,
    SizeMismatchError,
    VocabularyError,
)
from .freq import (
    AffineFreqModel,
    AffineFrequencyRestorer,
    apply_affine_model,
    fit_affine_model,
    invert_affine_model,
    split_low_high,
)
from .metrics import evaluate, psnr, rmse, sam, total_loss
from .modulate import PromptGuidedModulation, encode_tags, modulate_features

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EXCLUSION",
    "BandExclusionList",
    "HsiCube",
    "SceneSpec",
    "exclude_bands",
    "export_band_pgm",
    "random_crop",
    "read_cube",
    "synth_scene",
    "write_cube",
    "write_pgm",
    "GatedDegradation",
    "degrade_pipeline",
    "describe",
    "sample_recipe",
    "BoundsError",
    "DegenerateBinError",
    "HsiError",
    "HsiFormatError",
    "InvariantError",
    "ParameterError",
    "ShapeError",
    "SizeMismatchError",
    "VocabularyError",
    "AffineFreqModel",
    "AffineFrequencyRestorer",
    "apply_affine_model",
    "fit_affine_model",
    "invert_affine_model",
    "split_low_high",
    "evaluate",
    "psnr",
    "rmse",
    "sam",
    "total_loss",
    "PromptGuidedModulation",
    "encode_tags",
    "modulate_features",
]
