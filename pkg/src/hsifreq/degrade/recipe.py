"""Probabilistic gated degradation recipes and their key=value serialisation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .._seeding import check_seed, mix64
from ..exceptions import HsiFormatError, ParameterError
from .operators import choose_bands

__all__ = [
    "FAMILIES",
    "DegradationRecipe",
    "sample_recipe",
    "recipe_to_text",
    "recipe_from_text",
    "read_recipe",
    "write_recipe",
    "recipe_hash",
    "SNR_MEAN",
    "SNR_STD",
]

FAMILIES = ("cloud", "blur", "noise", "band_missing")
CLOUD_SUBTYPES = ("thick", "thin")
BLUR_SUBTYPES = ("spatial", "spectral")
MISSING_SUBTYPES = ("complete", "band_wise", "partial")
SNR_MEAN = 35.0
SNR_STD = 5.0
SNR_FLOOR = 1.0

# Operator sub-seed streams derived from the recipe seed.
CLOUD_STREAM = 1
NOISE_STREAM = 3
MISSING_STREAM = 4


@dataclass(frozen=True)
class DegradationRecipe:
    """Resolved record of which degradation families fire and how.

    Subtype fields are ``None`` exactly when their family did not fire.
    """

    seed: int
    gate_prob: float
    bands: int
    fired: tuple[str, ...] = ()
    cloud_subtype: str | None = None
    blur_subtype: str | None = None
    noise_snr: float | None = None
    missing_subtype: str | None = None
    missing_k: int | None = None
    missing_bands: tuple[int, ...] | None = None

    def __post_init__(self):
        check_seed(self.seed)
        if not 0.0 <= self.gate_prob <= 1.0:
            raise ParameterError(f"gate_prob must be in [0, 1], got {self.gate_prob}")
        if self.bands < 1:
            raise ParameterError("bands must be >= 1")
        fired = tuple(f for f in FAMILIES if f in set(self.fired))
        if len(fired) != len(set(self.fired)) or len(set(self.fired)) != len(self.fired):
            raise ParameterError(f"unknown or repeated families in {self.fired}")
        object.__setattr__(self, "fired", fired)
        if self.missing_bands is not None:
            object.__setattr__(self, "missing_bands", tuple(int(b) for b in self.missing_bands))

        checks = (
            ("cloud", self.cloud_subtype, CLOUD_SUBTYPES),
            ("blur", self.blur_subtype, BLUR_SUBTYPES),
            ("band_missing", self.missing_subtype, MISSING_SUBTYPES),
        )
        for family, value, allowed in checks:
            if (family in fired) != (value is not None):
                raise ParameterError(f"{family} subtype must be set iff the family fired")
            if value is not None and value not in allowed:
                raise ParameterError(f"invalid {family} subtype {value!r}")
        if ("noise" in fired) != (self.noise_snr is not None):
            raise ParameterError("noise_snr must be set iff noise fired")
        if self.noise_snr is not None and not self.noise_snr > 0:
            raise ParameterError("noise_snr must be positive")
        has_missing = "band_missing" in fired
        if has_missing != (self.missing_k is not None) or has_missing != (self.missing_bands is not None):
            raise ParameterError("missing_k and missing_bands must be set iff band_missing fired")
        if has_missing:
            mb = self.missing_bands
            if self.missing_k != len(mb) or list(mb) != sorted(set(mb)):
                raise ParameterError("missing_bands must be sorted, unique and of length missing_k")
            if mb and (mb[0] < 0 or mb[-1] >= self.bands):
                raise ParameterError("missing_bands out of range")

    @property
    def cloud_seed(self) -> int:
        return mix64(self.seed, CLOUD_STREAM)

    @property
    def noise_seed(self) -> int:
        return mix64(self.seed, NOISE_STREAM)

    @property
    def missing_seed(self) -> int:
        return mix64(self.seed, MISSING_STREAM)


def sample_recipe(seed, gate_prob=0.5, bands=172, max_missing=None) -> DegradationRecipe:
    """Draw a gated degradation recipe.

    All four gates are drawn first so firing statistics do not depend on
    subtype draws. Fired families then draw, in order: cloud subtype, blur
    subtype, noise SNR (normal, re-drawn while below 1) and band-missing
    subtype and ``k`` (uniform on ``[1, max_missing]``, default
    ``bands // 2``).
    """
    seed = check_seed(seed)
    gate_prob = float(gate_prob)
    if not 0.0 <= gate_prob <= 1.0:
        raise ParameterError(f"gate_prob must be in [0, 1], got {gate_prob}")
    if max_missing is None:
        max_missing = max(bands // 2, 1)
    max_missing = min(int(max_missing), bands)

    rng = np.random.default_rng(seed)
    gates = rng.random(len(FAMILIES)) < gate_prob
    fired = tuple(f for f, g in zip(FAMILIES, gates) if g)
    kwargs = {}
    if "cloud" in fired:
        kwargs["cloud_subtype"] = CLOUD_SUBTYPES[rng.integers(len(CLOUD_SUBTYPES))]
    if "blur" in fired:
        kwargs["blur_subtype"] = BLUR_SUBTYPES[rng.integers(len(BLUR_SUBTYPES))]
    if "noise" in fired:
        snr = rng.normal(SNR_MEAN, SNR_STD)
        while snr < SNR_FLOOR:
            snr = rng.normal(SNR_MEAN, SNR_STD)
        kwargs["noise_snr"] = float(snr)
    if "band_missing" in fired:
        kwargs["missing_subtype"] = MISSING_SUBTYPES[rng.integers(len(MISSING_SUBTYPES))]
        k = int(rng.integers(1, max_missing + 1))
        kwargs["missing_k"] = k
        band_rng = np.random.default_rng(mix64(seed, MISSING_STREAM))
        kwargs["missing_bands"] = tuple(choose_bands(bands, k, band_rng))
    return DegradationRecipe(seed=seed, gate_prob=gate_prob, bands=bands, fired=fired, **kwargs)


# --------------------------------------------------------------------------
# key=value serialisation


def recipe_to_text(recipe: DegradationRecipe) -> str:
    lines = ["# hsifreq degradation recipe"]
    for f in fields(recipe):
        value = getattr(recipe, f.name)
        if value is None:
            continue
        if f.name == "fired" or f.name == "missing_bands":
            text = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name}={text}")
    return "\n".join(lines) + "\n"


_PARSERS = {
    "seed": int,
    "gate_prob": float,
    "bands": int,
    "fired": lambda s: tuple(v for v in s.split(",") if v),
    "cloud_subtype": str,
    "blur_subtype": str,
    "noise_snr": float,
    "missing_subtype": str,
    "missing_k": int,
    "missing_bands": lambda s: tuple(int(v) for v in s.split(",") if v),
}


def recipe_from_text(text: str) -> DegradationRecipe:
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in _PARSERS:
            raise HsiFormatError(f"recipe line {lineno}: unexpected entry {raw!r}")
        if key in kwargs:
            raise HsiFormatError(f"recipe line {lineno}: duplicate key {key!r}")
        try:
            kwargs[key] = _PARSERS[key](value.strip())
        except ValueError:
            raise HsiFormatError(f"recipe line {lineno}: bad value {raw!r}") from None
    for key in ("seed", "gate_prob", "bands"):
        if key not in kwargs:
            raise HsiFormatError(f"recipe lacks required key {key!r}")
    return DegradationRecipe(**kwargs)


def write_recipe(recipe: DegradationRecipe, path) -> None:
    Path(path).write_text(recipe_to_text(recipe), encoding="utf-8")


def read_recipe(path) -> DegradationRecipe:
    return recipe_from_text(Path(path).read_text(encoding="utf-8"))


def recipe_hash(recipe: DegradationRecipe) -> str:
    """Short SHA-256 digest of the serialised recipe."""
    return hashlib.sha256(recipe_to_text(recipe).encode("utf-8")).hexdigest()[:16]
