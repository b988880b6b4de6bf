"""Composite degradation: recipe application and scikit-learn style transformers."""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ParameterError, ShapeError
from ..validation import as_cube, wrap_like
from .operators import apply_band_missing, apply_cloud, apply_noise, apply_spatial_blur, apply_spectral_blur
from .prompt import SUBTYPE_TOKEN, describe
from .recipe import DegradationRecipe, sample_recipe

__all__ = [
    "degrade_pipeline",
    "recipe_tags",
    "GatedDegradation",
    "CloudOcclusion",
    "SpatialBlur",
    "SpectralBlur",
    "GaussianNoise",
    "BandMissing",
]


def recipe_tags(recipe: DegradationRecipe) -> list[str]:
    """Canonical prompt tokens for the families that fired in ``recipe``."""
    tags = []
    if "cloud" in recipe.fired:
        tags.append(SUBTYPE_TOKEN["cloud", recipe.cloud_subtype])
    if "noise" in recipe.fired:
        tags.append(SUBTYPE_TOKEN["noise", None])
    if "blur" in recipe.fired:
        tags.append(SUBTYPE_TOKEN["blur", recipe.blur_subtype])
    if "band_missing" in recipe.fired:
        tags.append(SUBTYPE_TOKEN["band_missing", recipe.missing_subtype])
    return tags


def degrade_pipeline(cube, recipe: DegradationRecipe):
    """Apply the fired families in the order cloud, blur, noise, band-missing.

    Returns
    -------
    degraded : HsiCube
    prompt : PromptDescription
    """
    cube = as_cube(cube)
    if cube.bands != recipe.bands:
        raise ShapeError(f"recipe was drawn for {recipe.bands} bands, cube has {cube.bands}")
    out = cube
    if "cloud" in recipe.fired:
        out = apply_cloud(out, recipe.cloud_subtype, seed=recipe.cloud_seed)
    if "blur" in recipe.fired:
        out = apply_spatial_blur(out) if recipe.blur_subtype == "spatial" else apply_spectral_blur(out)
    if "noise" in recipe.fired:
        out = apply_noise(out, recipe.noise_snr, seed=recipe.noise_seed)
    n_missing = 0
    if "band_missing" in recipe.fired:
        out, chosen = apply_band_missing(out, recipe.missing_subtype, recipe.missing_k, seed=recipe.missing_seed)
        if tuple(chosen) != recipe.missing_bands:
            raise ParameterError("recipe band list disagrees with its seed")
        n_missing = len(chosen)
    return out, describe(recipe_tags(recipe), n_missing)


# --------------------------------------------------------------------------
# Transformers


class GatedDegradation(TransformerMixin, BaseEstimator):
    """Randomly composed degradation, drawn once per :meth:`fit`.

    Parameters
    ----------
    gate_prob : float, default=0.5
        Probability that each of the four families fires.
    random_state : int, default=0
        Recipe seed.
    max_missing : int, optional
        Upper bound for the number of missing bands (default half the bands).

    Attributes
    ----------
    recipe_ : DegradationRecipe
    prompt_ : PromptDescription
    """

    def __init__(self, gate_prob=0.5, random_state=0, max_missing=None):
        self.gate_prob = gate_prob
        self.random_state = random_state
        self.max_missing = max_missing

    def fit(self, X, y=None):
        cube = as_cube(X)
        self.recipe_ = sample_recipe(self.random_state, self.gate_prob, cube.bands, self.max_missing)
        self.prompt_ = describe(recipe_tags(self.recipe_), self.recipe_.missing_k or 0)
        return self

    def transform(self, X):
        check_is_fitted(self, "recipe_")
        out, _ = degrade_pipeline(as_cube(X), self.recipe_)
        return wrap_like(X, out.data)


class _StatelessDegradation(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        as_cube(X)
        self.n_bands_in_ = as_cube(X).bands
        return self

    def transform(self, X):
        return wrap_like(X, self._apply(as_cube(X)).data)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags


class CloudOcclusion(_StatelessDegradation):
    def __init__(self, subtype="thick", random_state=0):
        self.subtype = subtype
        self.random_state = random_state

    def _apply(self, cube):
        return apply_cloud(cube, self.subtype, seed=self.random_state)


class SpatialBlur(_StatelessDegradation):
    def __init__(self, factor=4):
        self.factor = factor

    def _apply(self, cube):
        return apply_spatial_blur(cube, self.factor)


class SpectralBlur(_StatelessDegradation):
    def _apply(self, cube):
        return apply_spectral_blur(cube)


class GaussianNoise(_StatelessDegradation):
    """Additive white Gaussian noise at a linear power SNR."""

    def __init__(self, snr=35.0, random_state=0):
        self.snr = snr
        self.random_state = random_state

    def _apply(self, cube):
        return apply_noise(cube, self.snr, seed=self.random_state)


class BandMissing(_StatelessDegradation):
    def __init__(self, subtype="complete", k=1, random_state=0):
        self.subtype = subtype
        self.k = k
        self.random_state = random_state

    def _apply(self, cube):
        return apply_band_missing(cube, self.subtype, self.k, seed=self.random_state)[0]
