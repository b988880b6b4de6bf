"""Individual degradation operators.

Every operator is a pure function of its inputs (including an explicit
seed where randomness is involved) and returns a new :class:`HsiCube`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .._noise import fractal_noise
from .._seeding import check_seed
from ..cube import HsiCube
from ..exceptions import ParameterError, ShapeError
from ..validation import as_cube

__all__ = [
    "CloudParams",
    "THICK_CLOUD",
    "THIN_CLOUD",
    "cloud_mask",
    "apply_cloud",
    "apply_spatial_blur",
    "apply_spectral_blur",
    "apply_noise",
    "choose_bands",
    "band_missing_mask",
    "apply_band_missing",
    "SPATIAL_FACTOR",
    "SPECTRAL_WINDOW",
    "SPECTRAL_STRIDE",
    "PARTIAL_ROW_PROB",
]

SPATIAL_FACTOR = 4
SPECTRAL_WINDOW = 5
SPECTRAL_STRIDE = 4
SPECTRAL_SIGMA = 1.0
PARTIAL_ROW_PROB = 0.3


# --------------------------------------------------------------------------
# Cloud occlusion


def _as_range(value, cast=float):
    if np.ndim(value) == 0:
        return (cast(value), cast(value))
    lo, hi = value
    return (cast(lo), cast(hi))


@dataclass(frozen=True)
class CloudParams:
    """Parameter ranges of the procedural cloud generator.

    Scalars are promoted to degenerate ``(v, v)`` ranges; each range is
    sampled uniformly once per call.

    Attributes
    ----------
    locality_degree : (int, int)
        Number of noise octaves. Values above one also multiply in
        ``locality_degree - 1`` coarse envelope fields, which confines
        clouds to fewer, denser patches.
    min_lvl, max_lvl : (float, float)
        Range the thresholded noise is rescaled to.
    clear_threshold : (float, float)
        Noise level below which a pixel is cloud free.
    blur_scaling : float
        Gaussian sigma (pixels) applied to the final mask.
    decay_factor : float
        Cloud plate amplitude at the last band is ``1 / decay_factor``.
    channel_offset : int
        Horizontal mask shift, in pixels, per band index.
    """

    locality_degree: tuple[int, int] = (1, 1)
    min_lvl: tuple[float, float] = (0.0, 0.0)
    max_lvl: tuple[float, float] = (1.0, 1.0)
    clear_threshold: tuple[float, float] = (0.0, 0.0)
    blur_scaling: float = 1.0
    decay_factor: float = 1.0
    channel_offset: int = 0

    def __post_init__(self):
        loc = _as_range(self.locality_degree, int)
        mn = _as_range(self.min_lvl)
        mx = _as_range(self.max_lvl)
        thr = _as_range(self.clear_threshold)
        object.__setattr__(self, "locality_degree", loc)
        object.__setattr__(self, "min_lvl", mn)
        object.__setattr__(self, "max_lvl", mx)
        object.__setattr__(self, "clear_threshold", thr)

        if loc[0] < 1 or loc[1] < loc[0]:
            raise ParameterError(f"locality_degree range invalid: {loc}")
        for name, (lo, hi) in (("min_lvl", mn), ("max_lvl", mx), ("clear_threshold", thr)):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ParameterError(f"{name} range must satisfy 0 <= lo <= hi <= 1, got {(lo, hi)}")
        if mn[0] > mx[0] or mn[1] > mx[1]:
            raise ParameterError(f"min_lvl {mn} must not exceed max_lvl {mx}")
        if self.blur_scaling < 0:
            raise ParameterError("blur_scaling must be non-negative")
        if self.decay_factor <= 0:
            raise ParameterError("decay_factor must be positive")


THICK_CLOUD = CloudParams(
    locality_degree=(2, 4),
    min_lvl=0.0,
    max_lvl=1.0,
    clear_threshold=(0.0, 0.4),
    blur_scaling=1.0,
    decay_factor=1.0,
    channel_offset=0,
)
THIN_CLOUD = CloudParams(
    locality_degree=1,
    min_lvl=(0.0, 0.4),
    max_lvl=(0.4, 0.6),
    clear_threshold=0.0,
    blur_scaling=2.0,
    decay_factor=1.0,
    channel_offset=0,
)
_CLOUD_PRESETS = {"thick": THICK_CLOUD, "thin": THIN_CLOUD}


def cloud_mask(height, width, params: CloudParams, seed=0):
    """Seeded cloud transparency mask with values in ``[0, 1]``."""
    rng = np.random.default_rng(check_seed(seed))
    locality = int(rng.integers(params.locality_degree[0], params.locality_degree[1] + 1))
    lo = rng.uniform(*params.min_lvl)
    hi = rng.uniform(*params.max_lvl)
    hi = max(hi, lo)
    threshold = rng.uniform(*params.clear_threshold)

    base_cell = max(height, width) / 2.0
    noise = fractal_noise(height, width, locality, base_cell, rng)
    for _ in range(locality - 1):
        noise = noise * fractal_noise(height, width, 1, base_cell, rng)
    peak = noise.max()
    if peak > 0:
        noise = noise / peak

    if threshold >= 1.0:
        level = np.zeros_like(noise)
    else:
        level = np.where(noise > threshold, (noise - threshold) / (1.0 - threshold), 0.0)
    mask = lo + (hi - lo) * level
    if params.blur_scaling > 0:
        mask = gaussian_filter(mask, sigma=params.blur_scaling, mode="reflect")
    return np.clip(mask, 0.0, 1.0)


def apply_cloud(cube, subtype="thick", params: CloudParams | None = None, seed=0) -> HsiCube:
    """Blend a bright cloud plate into ``cube`` through a procedural mask.

    ``out = (1 - M) * I + M * I_cloud``, clamped to ``[0, 1]``.
    """
    cube = as_cube(cube)
    if params is None:
        if subtype not in _CLOUD_PRESETS:
            raise ParameterError(f"unknown cloud subtype {subtype!r}")
        params = _CLOUD_PRESETS[subtype]
    mask = cloud_mask(cube.height, cube.width, params, seed)

    b = np.arange(cube.bands)
    plate = params.decay_factor ** (-b / max(cube.bands - 1, 1))
    if params.channel_offset:
        masks = np.stack([np.roll(mask, params.channel_offset * i, axis=1) for i in b], axis=-1)
    else:
        masks = mask[:, :, None]

    img = cube.data.astype(np.float64)
    out = (1.0 - masks) * img + masks * plate[None, None, :]
    return cube.with_data(np.clip(out, 0.0, 1.0))


# --------------------------------------------------------------------------
# Blurring


def _bilinear_matrix(n_in, n_out, scale):
    """Interpolation matrix for half-pixel-centre bilinear resampling."""
    m = np.zeros((n_out, n_in))
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.maximum(src, 0.0)
    i0 = np.minimum(np.floor(src).astype(np.intp), n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = src - i0
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1.0 - w1)
    np.add.at(m, (rows, i1), w1)
    return m


def apply_spatial_blur(cube, factor=SPATIAL_FACTOR) -> HsiCube:
    """Bilinear downsample by ``factor`` then bilinear upsample to the original size."""
    cube = as_cube(cube)
    h, w = cube.height, cube.width
    if h < factor or w < factor:
        raise ShapeError(f"spatial blur needs height and width >= {factor}, got {h}x{w}")
    hs, ws = h // factor, w // factor
    down_h = _bilinear_matrix(h, hs, float(factor))
    down_w = _bilinear_matrix(w, ws, float(factor))
    up_h = _bilinear_matrix(hs, h, hs / h)
    up_w = _bilinear_matrix(ws, w, ws / w)
    rows = up_h @ down_h
    cols = up_w @ down_w
    img = cube.data.astype(np.float64)
    out = np.einsum("ih,hwb->iwb", rows, img)
    out = np.einsum("jw,iwb->ijb", cols, out)
    return cube.with_data(out)


def spectral_window():
    x = np.arange(SPECTRAL_WINDOW) - SPECTRAL_WINDOW // 2
    g = np.exp(-0.5 * (x / SPECTRAL_SIGMA) ** 2)
    return g / g.sum()


def apply_spectral_blur(cube) -> HsiCube:
    """Strided Gaussian smoothing along bands, then nearest-neighbour upsampling.

    Window ``k`` is centred on band ``4k`` and covers ``4k-2 .. 4k+2``
    (indices clamped at both edges, i.e. replicate padding); its value is
    replicated over bands ``4k .. 4k+3``.
    """
    cube = as_cube(cube)
    bands = cube.bands
    if bands < SPECTRAL_WINDOW:
        raise ShapeError(f"spectral blur needs at least {SPECTRAL_WINDOW} bands, got {bands}")
    g = spectral_window()
    n_low = -(-bands // SPECTRAL_STRIDE)
    centres = np.arange(n_low) * SPECTRAL_STRIDE
    idx = np.clip(centres[:, None] + np.arange(SPECTRAL_WINDOW)[None, :] - SPECTRAL_WINDOW // 2, 0, bands - 1)
    img = cube.data.astype(np.float64)
    low = np.einsum("hwkj,j->hwk", img[:, :, idx], g)
    out = low[:, :, np.arange(bands) // SPECTRAL_STRIDE]
    return cube.with_data(out)


# --------------------------------------------------------------------------
# Noise


def apply_noise(cube, snr_linear, seed=0) -> HsiCube:
    """Additive white Gaussian noise at a linear power SNR.

    Noise standard deviation is ``sqrt(mean(I**2) / snr_linear)``.  The
    result is not clamped.
    """
    cube = as_cube(cube)
    snr_linear = float(snr_linear)
    if not snr_linear > 0 or not np.isfinite(snr_linear):
        raise ParameterError(f"snr_linear must be positive and finite, got {snr_linear}")
    rng = np.random.default_rng(check_seed(seed))
    img = cube.data.astype(np.float64)
    power = np.mean(img * img)
    eps = rng.standard_normal(img.shape)
    return cube.with_data(img + eps * np.sqrt(power / snr_linear))


# --------------------------------------------------------------------------
# Band missing

_MISSING_SUBTYPES = ("complete", "band_wise", "partial")


def choose_bands(bands, k, rng) -> list[int]:
    """Pick ``k`` distinct band indices, returned sorted."""
    return sorted(int(i) for i in rng.choice(bands, size=k, replace=False))


def band_missing_mask(shape, subtype, k, seed=0):
    """Boolean ``(height, width, bands)`` mask of zeroed locations and the chosen bands.

    Draw order: band choice first, then (``partial`` only) one Bernoulli row
    vector per chosen band in ascending band order.
    """
    h, w, bands = shape
    if subtype not in _MISSING_SUBTYPES:
        raise ParameterError(f"unknown band-missing subtype {subtype!r}")
    k = int(k)
    if not 0 <= k <= bands:
        raise ParameterError(f"k must be in [0, {bands}], got {k}")
    rng = np.random.default_rng(check_seed(seed))
    chosen = choose_bands(bands, k, rng)
    mask = np.zeros(shape, dtype=bool)
    for b in chosen:
        if subtype == "complete":
            mask[:, :, b] = True
        elif subtype == "band_wise":
            mask[0::2, :, b] = True
        else:
            rows = rng.random(h) < PARTIAL_ROW_PROB
            mask[rows, :, b] = True
    return mask, chosen


def apply_band_missing(cube, subtype, k, seed=0):
    """Zero all pixels, even rows, or random rows of ``k`` random bands.

    Returns
    -------
    cube : HsiCube
    chosen : list of int
        Sorted 0-based indices of the affected bands.
    """
    cube = as_cube(cube)
    mask, chosen = band_missing_mask(cube.shape, subtype, k, seed)
    if not chosen:
        return cube, chosen
    out = np.where(mask, np.float32(0.0), cube.data)
    return cube.with_data(out), chosen
