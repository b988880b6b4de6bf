"""Degradation prompt vocabulary and text rendering."""

from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import VocabularyError

__all__ = [
    "CANONICAL_TOKENS",
    "TOKEN_FAMILY",
    "PromptDescription",
    "canonical_order",
    "render_prompt",
    "describe",
]

CLEAN = "clean"

# Rendering order: cloud, noise, blur, band-missing.
CANONICAL_TOKENS = (
    "thickly cloudy",
    "thinly cloudy",
    "noisy",
    "spatial blurring",
    "spectral blurring",
    "complete missing",
    "band-wise missing",
    "partial missing",
)
TOKEN_FAMILY = {
    "thickly cloudy": "cloud",
    "thinly cloudy": "cloud",
    "noisy": "noise",
    "spatial blurring": "blur",
    "spectral blurring": "blur",
    "complete missing": "band_missing",
    "band-wise missing": "band_missing",
    "partial missing": "band_missing",
}
_FAMILY_RANK = {"cloud": 0, "noise": 1, "blur": 2, "band_missing": 3}

SUBTYPE_TOKEN = {
    ("cloud", "thick"): "thickly cloudy",
    ("cloud", "thin"): "thinly cloudy",
    ("noise", None): "noisy",
    ("blur", "spatial"): "spatial blurring",
    ("blur", "spectral"): "spectral blurring",
    ("band_missing", "complete"): "complete missing",
    ("band_missing", "band_wise"): "band-wise missing",
    ("band_missing", "partial"): "partial missing",
}


def canonical_order(tags) -> list[str]:
    """Deduplicate ``tags`` and sort them by family; one token per family."""
    unknown = [t for t in tags if t not in TOKEN_FAMILY]
    if unknown:
        raise VocabularyError(f"unknown prompt tokens: {unknown}")
    unique = sorted(set(tags), key=lambda t: _FAMILY_RANK[TOKEN_FAMILY[t]])
    families = [TOKEN_FAMILY[t] for t in unique]
    if len(set(families)) != len(families):
        raise VocabularyError(f"more than one token per degradation family: {unique}")
    return unique


def _long_text(tags, n_missing_bands):
    by_family = {TOKEN_FAMILY[t]: t for t in tags}
    listed = [f"'{by_family[f]}'" for f in ("cloud", "noise") if f in by_family]
    blur = by_family.get("blur")
    blur_clause = f"'blurring effect in {blur.split()[0]} domain'" if blur else None

    clauses = []
    if "band_missing" in by_family:
        clauses.append(f"faces with '{by_family['band_missing']}' on {n_missing_bands} bands")
        if listed:
            clauses.append("it also confronts " + ", ".join(listed))
    elif listed:
        clauses.append("faces with " + ", ".join(listed))
    if blur_clause:
        clauses.append(("besides, there exists " if clauses else "faces with ") + blur_clause)
    return "This hyperspectral image " + "; ".join(clauses) + "."


def render_prompt(tags, n_missing_bands=0, format="short") -> str:
    """Render degradation tokens as a short or long text prompt.

    Examples
    --------
    >>> render_prompt(["noisy", "thickly cloudy"])
    'thickly cloudy, noisy'
    >>> render_prompt(["partial missing", "noisy"], 5, format="long")
    "This hyperspectral image faces with 'partial missing' on 5 bands; it also confronts 'noisy'."
    """
    if format not in ("short", "long"):
        raise ValueError(f"format must be 'short' or 'long', got {format!r}")
    tags = canonical_order(tags)
    if not tags:
        return CLEAN
    if format == "short":
        return ", ".join(tags)
    return _long_text(tags, n_missing_bands)


@dataclass(frozen=True)
class PromptDescription:
    tags: tuple[str, ...]
    n_missing_bands: int
    short_text: str
    long_text: str

    def text(self, format="short") -> str:
        return self.short_text if format == "short" else self.long_text


def describe(tags, n_missing_bands=0) -> PromptDescription:
    tags = tuple(canonical_order(tags))
    return PromptDescription(
        tags=tags,
        n_missing_bands=int(n_missing_bands),
        short_text=render_prompt(tags, n_missing_bands, "short"),
        long_text=render_prompt(tags, n_missing_bands, "long"),
    )
