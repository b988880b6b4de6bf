"""Image quality metrics and restoration loss terms for hyperspectral cubes.

All functions accept :class:`~hsifreq.cube.HsiCube` objects or 3-D arrays of
shape ``(height, width, bands)`` and compute in float64.
"""

from __future__ import annotations

import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .exceptions import ParameterError, ShapeError
from .validation import check_pair

__all__ = [
    "MetricsReport",
    "LossReport",
    "DEFAULT_LOSS_WEIGHTS",
    "PSNR_CAP",
    "psnr",
    "sam",
    "rmse",
    "ergas",
    "l1_loss",
    "sam_loss",
    "swt2_haar",
    "iswt2_haar",
    "swt_loss",
    "bmse_loss",
    "total_loss",
    "evaluate",
    "append_csv",
]

PSNR_CAP = 100.0
EPS = 1e-8
DEFAULT_LOSS_WEIGHTS = (1.0, 0.001, 0.01, 0.01)


def psnr(ref, test, data_range=1.0) -> float:
    """Whole-cube PSNR in dB, capped at 100 dB."""
    if not data_range > 0:
        raise ParameterError("data_range must be positive")
    r, t = check_pair(ref, test)
    mse = np.mean((r - t) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(data_range**2 / mse), PSNR_CAP))


def _spectral_angles(r, t):
    r = r.reshape(-1, r.shape[-1])
    t = t.reshape(-1, t.shape[-1])
    dot = np.einsum("ij,ij->i", r, t)
    norms = np.linalg.norm(r, axis=1) * np.linalg.norm(t, axis=1)
    return np.arccos(np.clip((dot + EPS) / (norms + EPS), -1.0, 1.0))


def sam_loss(ref, test) -> float:
    """Mean spectral angle in radians."""
    r, t = check_pair(ref, test, min_bands=2)
    return float(np.mean(_spectral_angles(r, t)))


def sam(ref, test) -> float:
    """Mean spectral angle mapper in degrees."""
    return float(np.degrees(sam_loss(ref, test)))


def rmse(ref, test) -> float:
    r, t = check_pair(ref, test)
    return float(np.sqrt(np.mean((r - t) ** 2)))


def ergas(ref, test, scale_ratio=1.0) -> float:
    """Relative dimensionless global error.

    ``100 * scale_ratio * sqrt(mean_b (rmse_b / mean_b)**2)`` where the band
    means come from ``ref``; means smaller than 1e-8 in magnitude are
    replaced by 1e-8.
    """
    r, t = check_pair(ref, test)
    band_rmse = np.sqrt(np.mean((r - t) ** 2, axis=(0, 1)))
    band_mean = np.mean(r, axis=(0, 1))
    denom = np.where(np.abs(band_mean) < EPS, EPS, band_mean)
    return float(100.0 * scale_ratio * np.sqrt(np.mean((band_rmse / denom) ** 2)))


def l1_loss(ref, test) -> float:
    r, t = check_pair(ref, test)
    return float(np.mean(np.abs(r - t)))


# --------------------------------------------------------------------------
# Stationary wavelet transform


def _haar_step(x, axis, dilation):
    shifted = np.roll(x, -dilation, axis=axis)
    return 0.5 * (x + shifted), 0.5 * (x - shifted)


def swt2_haar(image, levels=1) -> list[np.ndarray]:
    """Undecimated 2-D Haar transform with periodic boundaries.

    Filters ``(1/2, 1/2)`` and ``(1/2, -1/2)`` are dilated by ``2**(j-1)`` at
    level ``j`` (a trous). Returns ``[LH_1, HL_1, HH_1, ..., LH_L, HL_L, HH_L,
    LL_L]``, so the sub-bands sum back to the input exactly.
    """
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"swt2_haar expects a 2-D array, got shape {x.shape}")
    levels = int(levels)
    if levels < 1:
        raise ParameterError("levels must be >= 1")
    if min(x.shape) < 2**levels:
        raise ShapeError(f"image {x.shape} too small for {levels} SWT levels")
    out = []
    approx = x
    for j in range(levels):
        d = 2**j
        lo_r, hi_r = _haar_step(approx, 0, d)
        ll, lh = _haar_step(lo_r, 1, d)
        hl, hh = _haar_step(hi_r, 1, d)
        out.extend([lh, hl, hh])
        approx = ll
    out.append(approx)
    return out


def iswt2_haar(subbands) -> np.ndarray:
    """Inverse of :func:`swt2_haar`."""
    return np.sum(subbands, axis=0)


def swt_loss(ref, test, levels=1, weights=None) -> float:
    """Weighted L1 distance between SWT sub-bands, averaged over spectral bands.

    ``weights`` has one entry per sub-band in :func:`swt2_haar` order
    (``3 * levels + 1`` entries); all ones by default.
    """
    r, t = check_pair(ref, test)
    n_sub = 3 * int(levels) + 1
    w = np.ones(n_sub) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (n_sub,):
        raise ParameterError(f"expected {n_sub} sub-band weights, got {w.shape}")
    per_band = []
    for b in range(r.shape[2]):
        sr = swt2_haar(r[:, :, b], levels)
        st = swt2_haar(t[:, :, b], levels)
        per_band.append(sum(wj * np.mean(np.abs(a - c)) for wj, a, c in zip(w, sr, st)))
    return float(np.mean(per_band))


def bmse_loss(ref, test) -> float:
    """Mean over bands of each band's RMS error (L2 norm / sqrt(pixels))."""
    r, t = check_pair(ref, test)
    n_pix = r.shape[0] * r.shape[1]
    norms = np.sqrt(np.sum((r - t) ** 2, axis=(0, 1)))
    return float(np.mean(norms / np.sqrt(n_pix)))


# --------------------------------------------------------------------------
# Reports


class _CsvRow:
    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def csv_row(self) -> str:
        return ",".join(repr(float(v)) for v in astuple(self))


@dataclass(frozen=True)
class MetricsReport(_CsvRow):
    psnr_db: float
    sam_deg: float
    rmse: float
    ergas: float


@dataclass(frozen=True)
class LossReport(_CsvRow):
    l1: float
    sam_loss_rad: float
    swt: float
    bmse: float
    total: float
    w1: float = DEFAULT_LOSS_WEIGHTS[0]
    w2: float = DEFAULT_LOSS_WEIGHTS[1]
    w3: float = DEFAULT_LOSS_WEIGHTS[2]
    w4: float = DEFAULT_LOSS_WEIGHTS[3]

    @property
    def weights(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)


def evaluate(ref, test, data_range=1.0, scale_ratio=1.0) -> MetricsReport:
    return MetricsReport(
        psnr_db=psnr(ref, test, data_range),
        sam_deg=sam(ref, test),
        rmse=rmse(ref, test),
        ergas=ergas(ref, test, scale_ratio),
    )


def total_loss(ref, test, weights=DEFAULT_LOSS_WEIGHTS, swt_levels=1, swt_weights=None) -> LossReport:
    """All four loss terms and their weighted sum (SAM term in radians)."""
    w = tuple(float(v) for v in weights)
    if len(w) != 4:
        raise ParameterError("weights must have four entries")
    terms = (
        l1_loss(ref, test),
        sam_loss(ref, test),
        swt_loss(ref, test, swt_levels, swt_weights),
        bmse_loss(ref, test),
    )
    total = sum(wi * ti for wi, ti in zip(w, terms))
    return LossReport(*terms, total, *w)


def append_csv(report, path) -> None:
    """Append ``report`` as a row, writing the header first for a new file."""
    path = Path(path)
    buf = io.StringIO()
    if not path.exists() or path.stat().st_size == 0:
        buf.write(type(report).csv_header() + "\n")
    buf.write(report.csv_row() + "\n")
    with path.open("a", encoding="ascii") as fh:
        fh.write(buf.getvalue())
