"""Fourier analysis of degradations and the per-radial-bin affine spectrum model.

A degraded cube is modelled band by band as::

    F(degraded) = (1 + lambda_b) * F(clean) + mu_b

where ``b`` is the radial frequency bin of each coefficient. Transforms use
unitary (``norm="ortho"``) scaling with the DC term shifted to the centre.
Frequencies are measured in cycles per sample, so radii range over
``[0, sqrt(2)/2]``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateBinError, HsiFormatError, ParameterError, ShapeError
from .validation import check_cube_array, check_same_shape, wrap_like

__all__ = [
    "BandSpectrum",
    "FreqSplit",
    "AffineFreqModel",
    "MAX_RADIUS",
    "fft2_band",
    "ifft2_band",
    "radius_grid",
    "radial_bin_index",
    "radial_profile",
    "residual_spectrum",
    "fit_affine_model",
    "apply_affine_model",
    "invert_affine_model",
    "split_low_high",
    "AffineFrequencyRestorer",
]

MAX_RADIUS = np.sqrt(2.0) / 2.0
NYQUIST = 0.5


def _fft2(stack):
    """Centred unitary 2-D FFT over the last two axes."""
    return np.fft.fftshift(np.fft.fft2(stack, norm="ortho"), axes=(-2, -1))


def _ifft2(stack):
    return np.fft.ifft2(np.fft.ifftshift(stack, axes=(-2, -1)), norm="ortho")


@dataclass(frozen=True, eq=False)
class BandSpectrum:
    """DC-centred unitary spectrum of a single band."""

    coeffs: np.ndarray

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    def to_band(self) -> np.ndarray:
        """Inverse transform, returning the real part."""
        return ifft2_band(self)


def fft2_band(band) -> BandSpectrum:
    band = np.asarray(band, dtype=np.float64)
    if band.ndim != 2 or min(band.shape) < 2:
        raise ShapeError(f"fft2_band needs a 2-D array with both sides >= 2, got {band.shape}")
    return BandSpectrum(_fft2(band))


def ifft2_band(spectrum) -> np.ndarray:
    coeffs = spectrum.coeffs if isinstance(spectrum, BandSpectrum) else np.asarray(spectrum)
    return _ifft2(coeffs).real


def radius_grid(height, width) -> np.ndarray:
    """Radial frequency (cycles/sample) of each coefficient in centred layout."""
    fy = np.fft.fftshift(np.fft.fftfreq(height))
    fx = np.fft.fftshift(np.fft.fftfreq(width))
    return np.hypot(fy[:, None], fx[None, :])


def _bin_edges(n_bins):
    return np.linspace(0.0, MAX_RADIUS, int(n_bins) + 1)


def radial_bin_index(height, width, bin_edges) -> np.ndarray:
    """Bin index of every coefficient; radii beyond the last edge join the last bin."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    idx = np.searchsorted(edges, radius_grid(height, width), side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def radial_profile(matrix, n_bins=16) -> np.ndarray:
    """Mean of ``matrix`` over each radial bin (empty bins give NaN)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    idx = radial_bin_index(*matrix.shape, _bin_edges(n_bins))
    sums = np.bincount(idx.ravel(), weights=matrix.ravel(), minlength=n_bins)
    counts = np.bincount(idx.ravel(), minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts


def residual_spectrum(clean, degraded, band) -> np.ndarray:
    """``log(1 + |F(clean - degraded)|)`` of one band, DC-centred."""
    check_same_shape(clean, degraded, ("clean", "degraded"))
    c = check_cube_array(clean, "clean")
    d = check_cube_array(degraded, "degraded")
    if not 0 <= band < c.shape[2]:
        raise ParameterError(f"band {band} out of range for {c.shape[2]} bands")
    return np.log1p(np.abs(_fft2(c[:, :, band] - d[:, :, band])))


# --------------------------------------------------------------------------
# Affine model


@dataclass(frozen=True, eq=False)
class AffineFreqModel:
    """Per-radial-bin complex intensity (``lam``) and bias (``mu``) coefficients.

    ``nsr`` holds, per bin, the fit's residual power divided by the clean
    signal variance. It drives the Wiener term of :func:`invert_affine_model`
    and is zero for hand-built or CSV-loaded models.
    """

    bin_edges: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    nsr: np.ndarray | None = None

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        lam = np.asarray(self.lam, dtype=np.complex128)
        mu = np.asarray(self.mu, dtype=np.complex128)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ParameterError("bin_edges must be a strictly increasing vector of length >= 2")
        if lam.shape != (len(edges) - 1,) or mu.shape != lam.shape:
            raise ShapeError("lam and mu need one entry per bin")
        nsr = np.zeros(lam.shape) if self.nsr is None else np.asarray(self.nsr, dtype=np.float64)
        if nsr.shape != lam.shape or np.any(nsr < 0):
            raise ShapeError("nsr needs one non-negative entry per bin")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nsr", nsr)

    @property
    def n_bins(self) -> int:
        return len(self.lam)

    @classmethod
    def uniform(cls, lam, mu, n_bins=16) -> AffineFreqModel:
        """Model with the same coefficients in every bin."""
        return cls(_bin_edges(n_bins), np.full(n_bins, lam, dtype=complex), np.full(n_bins, mu, dtype=complex))

    def non_invertible_bins(self, epsilon=1e-3) -> list[int]:
        """Bins where ``|1 + lam|**2 < epsilon`` (the inversion guard takes over)."""
        return [int(i) for i in np.flatnonzero(np.abs(1.0 + self.lam) ** 2 < epsilon)]

    def coefficient_maps(self, height, width):
        """Per-coefficient ``(1 + lam, mu)`` maps for a ``height x width`` spectrum."""
        idx = radial_bin_index(height, width, self.bin_edges)
        return 1.0 + self.lam[idx], self.mu[idx]

    def to_csv(self, path=None):
        """Serialise to CSV; returns the text when ``path`` is None.

        ``nsr`` is not part of the CSV layout and is dropped.
        """
        buf = io.StringIO()
        buf.write("bin,edge_lo,edge_hi,lambda_re,lambda_im,mu_re,mu_im\n")
        for b in range(self.n_bins):
            row = (
                self.bin_edges[b],
                self.bin_edges[b + 1],
                self.lam[b].real,
                self.lam[b].imag,
                self.mu[b].real,
                self.mu[b].imag,
            )
            buf.write(f"{b}," + ",".join(repr(float(v)) for v in row) + "\n")
        text = buf.getvalue()
        if path is None:
            return text
        Path(path).write_text(text, encoding="ascii")

    @classmethod
    def from_csv(cls, path_or_text) -> AffineFreqModel:
        if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
            text = Path(path_or_text).read_text(encoding="ascii")
        else:
            text = path_or_text
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "bin,edge_lo,edge_hi,lambda_re,lambda_im,mu_re,mu_im":
            raise HsiFormatError("affine model CSV: unexpected header")
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != 7:
                raise HsiFormatError(f"affine model CSV line {lineno}: expected 7 fields: {line!r}")
            try:
                if int(parts[0]) != len(rows):
                    raise HsiFormatError(f"affine model CSV line {lineno}: bins out of order")
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise HsiFormatError(f"affine model CSV line {lineno}: bad number in {line!r}") from None
        if not rows:
            raise HsiFormatError("affine model CSV has no bins")
        r = np.array(rows)
        if np.any(r[1:, 0] != r[:-1, 1]):
            raise HsiFormatError("affine model CSV: bin edges are not contiguous")
        edges = np.append(r[:, 0], r[-1, 1])
        return cls(edges, r[:, 2] + 1j * r[:, 3], r[:, 4] + 1j * r[:, 5])


def _band_stack(x, name):
    """(bands, height, width) float64 view of a cube-like input."""
    return check_cube_array(x, name).transpose(2, 0, 1)


def fit_affine_model(clean, degraded, n_bins=16) -> AffineFreqModel:
    """Least-squares fit of ``(lam, mu)`` in each radial bin.

    For bin ``b`` solves ``min sum |F(d) - (1 + lam_b) F(c) - mu_b|**2`` over
    every band and every coefficient in the bin, via the closed-form 2x2
    normal equations.

    Raises
    ------
    DegenerateBinError
        A bin holds fewer than two samples or its clean coefficients are all
        equal (singular normal equations).
    """
    check_same_shape(clean, degraded, ("clean", "degraded"))
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ParameterError("n_bins must be >= 1")
    c = _band_stack(clean, "clean")
    d = _band_stack(degraded, "degraded")
    if min(c.shape[1:]) < 2:
        raise ShapeError("spatial size must be at least 2x2")
    fc, fd = _fft2(c), _fft2(d)
    edges = _bin_edges(n_bins)
    idx = radial_bin_index(c.shape[1], c.shape[2], edges)

    lam = np.zeros(n_bins, dtype=complex)
    mu = np.zeros(n_bins, dtype=complex)
    nsr = np.zeros(n_bins)
    bad = []
    for b in range(n_bins):
        sel = idx == b
        # band-major, then row-major summation order
        cb = fc[:, sel].ravel()
        db = fd[:, sel].ravel()
        n = cb.size
        if n < 2:
            bad.append(b)
            continue
        s_c, s_d = cb.sum(), db.sum()
        s_cc = np.vdot(cb, cb).real
        s_cd = np.vdot(cb, db)
        det = n * s_cc - abs(s_c) ** 2
        if not det > 1e-12 * n * s_cc:
            bad.append(b)
            continue
        a = (n * s_cd - np.conj(s_c) * s_d) / det
        lam[b] = a - 1.0
        mu[b] = (s_d - a * s_c) / n
        resid = db - a * cb - mu[b]
        nsr[b] = np.vdot(resid, resid).real / (det / n)
    if bad:
        raise DegenerateBinError(bad)
    return AffineFreqModel(edges, lam, mu, nsr)


def bin_residuals(clean, degraded, model: AffineFreqModel) -> np.ndarray:
    """Residual sum of squares of ``model`` in each bin."""
    c = _band_stack(clean, "clean")
    d = _band_stack(degraded, "degraded")
    lam_hat, mu = model.coefficient_maps(c.shape[1], c.shape[2])
    r = np.abs(_fft2(d) - lam_hat * _fft2(c) - mu) ** 2
    idx = radial_bin_index(c.shape[1], c.shape[2], model.bin_edges)
    return np.array([r[:, idx == b].sum() for b in range(model.n_bins)])


def apply_affine_model(cube, model: AffineFreqModel):
    """Forward model: transform every band by ``(1 + lam) F + mu``; real part kept."""
    x = _band_stack(cube, "cube")
    lam_hat, mu = model.coefficient_maps(x.shape[1], x.shape[2])
    out = _ifft2(lam_hat * _fft2(x) + mu).real.transpose(1, 2, 0)
    return wrap_like(cube, out)


def invert_affine_model(degraded, model: AffineFreqModel, epsilon=1e-3):
    """Regularised (Wiener) inverse of the affine model.

    ``F_rest = (F_deg - mu) * conj(lam_hat) / max(|lam_hat|**2 + nsr, epsilon)``
    with ``lam_hat = 1 + lam``. For models without residual statistics
    (``nsr == 0``) this is the plain inverse guarded by ``epsilon``.
    """
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    x = _band_stack(degraded, "degraded")
    lam_hat, mu = model.coefficient_maps(x.shape[1], x.shape[2])
    nsr = model.nsr[radial_bin_index(x.shape[1], x.shape[2], model.bin_edges)]
    gain = np.conj(lam_hat) / np.maximum(np.abs(lam_hat) ** 2 + nsr, epsilon)
    out = _ifft2((_fft2(x) - mu) * gain).real.transpose(1, 2, 0)
    return wrap_like(degraded, out)


# --------------------------------------------------------------------------
# Low/high split


@dataclass(frozen=True, eq=False)
class FreqSplit:
    low: np.ndarray
    high: np.ndarray
    cutoff_radius: float


def low_pass_mask(height, width, cutoff_radius=0.25) -> np.ndarray:
    """True where the Nyquist-normalised radius is below ``cutoff_radius``."""
    return radius_grid(height, width) / NYQUIST < cutoff_radius


def split_low_high(spectrum, cutoff_radius=0.25) -> FreqSplit:
    """Split a centred spectrum with complementary binary radial masks.

    ``cutoff_radius`` is a fraction of the Nyquist radius, so corner
    frequencies (radius above Nyquist) are always in the high part.
    """
    if not 0.0 < cutoff_radius < 1.0:
        raise ParameterError(f"cutoff_radius must lie in (0, 1), got {cutoff_radius}")
    coeffs = spectrum.coeffs if isinstance(spectrum, BandSpectrum) else np.asarray(spectrum)
    mask = low_pass_mask(coeffs.shape[-2], coeffs.shape[-1], cutoff_radius)
    zero = np.zeros((), dtype=coeffs.dtype)
    return FreqSplit(np.where(mask, coeffs, zero), np.where(mask, zero, coeffs), float(cutoff_radius))


# --------------------------------------------------------------------------
# Estimator


class AffineFrequencyRestorer(RegressorMixin, BaseEstimator):
    """Fit the affine spectrum model on a degraded/clean pair and invert it.

    Parameters
    ----------
    n_bins : int, default=16
        Number of radial frequency bins.
    epsilon : float, default=1e-3
        Floor on ``|1 + lam|**2`` during inversion.

    Attributes
    ----------
    model_ : AffineFreqModel
    lambda_, mu_ : ndarray of complex
        Fitted per-bin coefficients.

    Examples
    --------
    >>> restorer = AffineFrequencyRestorer().fit(degraded, clean)  # doctest: +SKIP
    >>> restored = restorer.predict(degraded)                      # doctest: +SKIP
    """

    def __init__(self, n_bins=16, epsilon=1e-3):
        self.n_bins = n_bins
        self.epsilon = epsilon

    def fit(self, X, y):
        """``X`` is the degraded cube, ``y`` the clean reference."""
        self.model_ = fit_affine_model(y, X, self.n_bins)
        self.lambda_ = self.model_.lam
        self.mu_ = self.model_.mu
        self.n_bands_in_ = np.shape(X.data if hasattr(X, "data") else X)[2]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return invert_affine_model(X, self.model_, self.epsilon)

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y, sample_weight=None):
        """PSNR (dB, data range 1) of the restoration against ``y``."""
        from .metrics import psnr

        return psnr(y, self.predict(X))
