"""Degradation operators, gated recipes and prompt generation."""

from .operators import (
    THICK_CLOUD,
    THIN_CLOUD,
    CloudParams,
    apply_band_missing,
    apply_cloud,
    apply_noise,
    apply_spatial_blur,
    apply_spectral_blur,
    band_missing_mask,
    cloud_mask,
)
from .pipeline import (
    BandMissing,
    CloudOcclusion,
    GatedDegradation,
    GaussianNoise,
    SpatialBlur,
    SpectralBlur,
    degrade_pipeline,
    recipe_tags,
)
from .prompt import CANONICAL_TOKENS, PromptDescription, describe, render_prompt
from .recipe import (
    FAMILIES,
    DegradationRecipe,
    read_recipe,
    recipe_from_text,
    recipe_hash,
    recipe_to_text,
    sample_recipe,
    write_recipe,
)

__all__ = [
    "THICK_CLOUD",
    "THIN_CLOUD",
    "CloudParams",
    "apply_band_missing",
    "apply_cloud",
    "apply_noise",
    "apply_spatial_blur",
    "apply_spectral_blur",
    "band_missing_mask",
    "cloud_mask",
    "BandMissing",
    "CloudOcclusion",
    "GatedDegradation",
    "GaussianNoise",
    "SpatialBlur",
    "SpectralBlur",
    "degrade_pipeline",
    "recipe_tags",
    "CANONICAL_TOKENS",
    "PromptDescription",
    "describe",
    "render_prompt",
    "FAMILIES",
    "DegradationRecipe",
    "read_recipe",
    "recipe_from_text",
    "recipe_hash",
    "recipe_to_text",
    "sample_recipe",
    "write_recipe",
]
