"""Hyperspectral cube container, HSC file I/O, band exclusion and test scenes.

The HSC format is a small ASCII header followed by a raw little-endian
float32 payload in band-sequential order::

    HSC1
    height=<int>
    width=<int>
    bands=<int>
    dtype=f32le
    order=bsq
    wavelengths=<comma separated reals>     (optional)
    <blank line>
    <height * width * bands float32 values, band-major then row-major>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._noise import LACUNARITY, fractal_noise
from ._seeding import check_seed, mix64
from .exceptions import BoundsError, HsiFormatError, InvariantError, ParameterError, SizeMismatchError

__all__ = [
    "HsiCube",
    "BandExclusionList",
    "DEFAULT_EXCLUSION",
    "SceneSpec",
    "read_cube",
    "write_cube",
    "exclude_bands",
    "synth_scene",
    "random_crop",
    "export_band_pgm",
    "write_pgm",
]

MAGIC = "HSC1"
_REQUIRED_KEYS = ("height", "width", "bands", "dtype", "order")


@dataclass(frozen=True, eq=False)
class HsiCube:
    """Immutable ``(height, width, bands)`` reflectance cube stored as float32.

    Parameters
    ----------
    data : array_like of shape (height, width, bands)
        Cube values. Copied and cast to float32; the stored array is
        read-only.
    wavelengths_nm : sequence of float, optional
        Band centre wavelengths, strictly increasing, one per band.
    """

    data: np.ndarray
    wavelengths_nm: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 3:
            raise InvariantError(f"cube data must be 3-D (height, width, bands), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise InvariantError(f"cube dimensions must all be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvariantError("cube contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

        if self.wavelengths_nm is not None:
            wl = tuple(float(w) for w in self.wavelengths_nm)
            if len(wl) != arr.shape[2]:
                raise InvariantError(f"{len(wl)} wavelengths given for {arr.shape[2]} bands")
            if any(b <= a for a, b in zip(wl, wl[1:])):
                raise InvariantError("wavelengths must be strictly increasing")
            if not all(np.isfinite(wl)):
                raise InvariantError("wavelengths must be finite")
            object.__setattr__(self, "wavelengths_nm", wl)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data) -> HsiCube:
        """Return a new cube with ``data`` and this cube's wavelengths."""
        data = np.asarray(data)
        wl = self.wavelengths_nm if data.ndim == 3 and data.shape[2] == self.bands else None
        return HsiCube(data, wl)

    def select_bands(self, indices) -> HsiCube:
        """Return a cube holding only the given 0-based band indices."""
        idx = np.asarray(indices, dtype=np.intp).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.bands):
            raise BoundsError(f"band indices out of range for {self.bands} bands")
        wl = None if self.wavelengths_nm is None else tuple(self.wavelengths_nm[i] for i in idx)
        return HsiCube(self.data[:, :, idx], wl)

    def crop(self, top: int, left: int, height: int, width: int) -> HsiCube:
        if top < 0 or left < 0 or height < 1 or width < 1 or top + height > self.height or left + width > self.width:
            raise BoundsError(
                f"crop ({top}, {left}, {height}, {width}) exceeds cube of size {self.height}x{self.width}"
            )
        return HsiCube(self.data[top : top + height, left : left + width, :], self.wavelengths_nm)

    def identical(self, other: HsiCube) -> bool:
        """Bit-exact comparison of shape, payload and wavelengths."""
        return (
            self.shape == other.shape
            and self.data.tobytes() == other.data.tobytes()
            and self.wavelengths_nm == other.wavelengths_nm
        )

    def __repr__(self):
        wl = "" if self.wavelengths_nm is None else ", wavelengths"
        return f"HsiCube({self.height}x{self.width}x{self.bands}{wl})"


# --------------------------------------------------------------------------
# HSC I/O


def _encode(cube: HsiCube) -> bytes:
    lines = [
        MAGIC,
        f"height={cube.height}",
        f"width={cube.width}",
        f"bands={cube.bands}",
        "dtype=f32le",
        "order=bsq",
    ]
    if cube.wavelengths_nm is not None:
        lines.append("wavelengths=" + ",".join(repr(w) for w in cube.wavelengths_nm))
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    payload = np.ascontiguousarray(cube.data.transpose(2, 0, 1)).astype("<f4").tobytes()
    return header + payload


def write_cube(cube, path) -> None:
    """Write ``cube`` to ``path`` in HSC format.

    The payload is encoded in memory first, so an invalid cube never leaves a
    partial file behind.
    """
    if not isinstance(cube, HsiCube):
        cube = HsiCube(cube)
    blob = _encode(cube)
    Path(path).write_bytes(blob)


def _parse_uint(key, value, lineno, line):
    try:
        n = int(value)
    except ValueError:
        raise HsiFormatError(f"header line {lineno}: bad value for {key!r}: {line!r}") from None
    if n < 1:
        raise HsiFormatError(f"header line {lineno}: {key} must be >= 1: {line!r}")
    return n


def read_cube(path) -> HsiCube:
    """Read an HSC file written by :func:`write_cube`.

    Raises
    ------
    HsiFormatError
        Missing magic, malformed or unknown header lines.
    SizeMismatchError
        Payload length does not match ``height * width * bands * 4``.
    """
    blob = Path(path).read_bytes()
    end = blob.find(b"\n\n")
    if end < 0:
        raise HsiFormatError(f"{path}: header is not terminated by a blank line")
    try:
        header = blob[:end].decode("ascii").split("\n")
    except UnicodeDecodeError:
        raise HsiFormatError(f"{path}: header is not ASCII") from None
    if header[0] != MAGIC:
        raise HsiFormatError(f"header line 1: expected {MAGIC!r}, got {header[0]!r}")

    meta = {}
    wavelengths = None
    for lineno, line in enumerate(header[1:], start=2):
        key, sep, value = line.partition("=")
        if not sep or not key:
            raise HsiFormatError(f"header line {lineno}: expected key=value, got {line!r}")
        if key in meta or (key == "wavelengths" and wavelengths is not None):
            raise HsiFormatError(f"header line {lineno}: duplicate key {key!r}")
        if key in ("height", "width", "bands"):
            meta[key] = _parse_uint(key, value, lineno, line)
        elif key == "dtype":
            if value != "f32le":
                raise HsiFormatError(f"header line {lineno}: unsupported dtype: {line!r}")
            meta[key] = value
        elif key == "order":
            if value != "bsq":
                raise HsiFormatError(f"header line {lineno}: unsupported order: {line!r}")
            meta[key] = value
        elif key == "wavelengths":
            try:
                wavelengths = [float(v) for v in value.split(",")]
            except ValueError:
                raise HsiFormatError(f"header line {lineno}: bad wavelengths: {line!r}") from None
        else:
            raise HsiFormatError(f"header line {lineno}: unknown key {key!r}")

    missing = [k for k in _REQUIRED_KEYS if k not in meta]
    if missing:
        raise HsiFormatError(f"{path}: header lacks required keys {missing}")

    h, w, b = meta["height"], meta["width"], meta["bands"]
    payload = blob[end + 2 :]
    expected = h * w * b * 4
    if len(payload) != expected:
        raise SizeMismatchError(
            f"{path}: header declares {h}x{w}x{b} ({expected} bytes) but payload has {len(payload)} bytes"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(b, h, w).transpose(1, 2, 0)
    return HsiCube(data, wavelengths)


# --------------------------------------------------------------------------
# Band exclusion


@dataclass(frozen=True)
class BandExclusionList:
    """Inclusive 1-based band ranges to drop, e.g. ``((1, 10), (104, 116))``."""

    excluded_ranges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        ranges = tuple(sorted((int(lo), int(hi)) for lo, hi in self.excluded_ranges))
        for lo, hi in ranges:
            if lo < 1 or hi < lo:
                raise BoundsError(f"invalid band range [{lo}, {hi}]")
        for (_, hi_a), (lo_b, _) in zip(ranges, ranges[1:]):
            if lo_b <= hi_a:
                raise BoundsError(f"band ranges overlap near band {lo_b}")
        object.__setattr__(self, "excluded_ranges", ranges)

    def excluded_indices(self, bands: int) -> np.ndarray:
        """0-based indices removed from a cube with ``bands`` bands."""
        for lo, hi in self.excluded_ranges:
            if hi > bands:
                raise BoundsError(f"band range [{lo}, {hi}] exceeds band count {bands}")
        if not self.excluded_ranges:
            return np.zeros(0, dtype=np.intp)
        return np.concatenate([np.arange(lo - 1, hi) for lo, hi in self.excluded_ranges])

    def kept_indices(self, bands: int) -> np.ndarray:
        keep = np.ones(bands, dtype=bool)
        keep[self.excluded_indices(bands)] = False
        return np.flatnonzero(keep)


# Low-SNR and water-absorption bands of 224-band AVIRIS scenes.
DEFAULT_EXCLUSION = BandExclusionList(((1, 10), (104, 116), (152, 170), (215, 224)))


def exclude_bands(cube: HsiCube, exclusion: BandExclusionList = DEFAULT_EXCLUSION) -> HsiCube:
    """Drop the listed bands, keeping the order of the remaining ones."""
    if not exclusion.excluded_ranges:
        return cube
    return cube.select_bands(exclusion.kept_indices(cube.bands))


# --------------------------------------------------------------------------
# Procedural scenes


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    bands: int
    seed: int = 0
    n_materials: int = 6

    def __post_init__(self):
        for name in ("height", "width", "bands", "n_materials"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.n_materials > 16:
            raise ParameterError("n_materials must be <= 16")
        check_seed(self.seed)


def _endmembers(n, bands, rng):
    # Smooth, fairly bright spectra: baseline plus a few broad Gaussian features.
    t = np.linspace(0.0, 1.0, bands)
    spectra = np.empty((n, bands))
    for m in range(n):
        s = np.full(bands, rng.uniform(0.7, 0.95))
        for _ in range(3):
            amp = rng.uniform(-0.2, 0.2)
            centre = rng.uniform(0.0, 1.0)
            width = rng.uniform(0.05, 0.3)
            s += amp * np.exp(-0.5 * ((t - centre) / width) ** 2)
        spectra[m] = np.clip(s, 0.02, 1.0)
    return spectra


def _octaves_to_pixel(base_cell, finest=2.0):
    return max(1, int(np.floor(np.log(base_cell / finest) / np.log(LACUNARITY))) + 1)


def synth_scene(spec: SceneSpec) -> HsiCube:
    """Generate a deterministic linear-mixture scene from ``spec``.

    Abundances are softmax-sharpened fractal value-noise fields, so every
    pixel is a convex combination of ``n_materials`` endmember spectra. A
    multiplicative shading field in ``[0.9, 1]`` adds fine texture without
    changing any pixel's spectral angle. All values lie in ``[0, 1]``.
    """
    rng_spectra = np.random.default_rng(mix64(spec.seed, 0))
    rng_maps = np.random.default_rng(mix64(spec.seed, 1))
    rng_shade = np.random.default_rng(mix64(spec.seed, 2))
    endmembers = _endmembers(spec.n_materials, spec.bands, rng_spectra)

    base_cell = max(spec.height, spec.width) / 2.0
    octaves = _octaves_to_pixel(base_cell)
    fields = np.stack(
        [fractal_noise(spec.height, spec.width, octaves, base_cell, rng_maps) for _ in range(spec.n_materials)],
        axis=-1,
    )
    logits = 12.0 * fields
    logits -= logits.max(axis=-1, keepdims=True)
    weights = np.exp(logits)
    abundances = weights / weights.sum(axis=-1, keepdims=True)
    shading = 1.0 - 0.1 * fractal_noise(spec.height, spec.width, octaves, base_cell / 4.0, rng_shade)
    cube = np.clip((abundances @ endmembers) * shading[:, :, None], 0.0, 1.0)
    return HsiCube(cube)


def random_crop(cube: HsiCube, height: int, width: int, seed: int = 0) -> HsiCube:
    """Crop a ``height x width`` window at a seeded position; edges are discarded."""
    if height > cube.height or width > cube.width:
        raise BoundsError(f"crop {height}x{width} larger than cube {cube.height}x{cube.width}")
    rng = np.random.default_rng(check_seed(seed))
    top = int(rng.integers(0, cube.height - height + 1))
    left = int(rng.integers(0, cube.width - width + 1))
    return cube.crop(top, left, height, width)


# --------------------------------------------------------------------------
# PGM export


def write_pgm(image, path) -> None:
    """Write a 2-D real array as an 8-bit binary PGM, min-max normalised.

    A constant image maps to mid-grey (128).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ParameterError(f"PGM export needs a 2-D array, got shape {img.shape}")
    lo, hi = img.min(), img.max()
    if hi > lo:
        pix = np.floor((img - lo) / (hi - lo) * 255.0 + 0.5).astype(np.uint8)
    else:
        pix = np.full(img.shape, 128, dtype=np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pix.tobytes())


def export_band_pgm(cube: HsiCube, band: int, path) -> None:
    if not 0 <= band < cube.bands:
        raise BoundsError(f"band {band} out of range for {cube.bands} bands")
    write_pgm(cube.data[:, :, band], path)
