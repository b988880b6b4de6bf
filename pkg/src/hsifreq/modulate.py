"""Forward-only reference for prompt-guided feature modulation and attention fusion.

The chain is::

    tags -> encode_tags -> adapt -> make_controllers -> modulate_features

A fixed multi-hot encoder over the eight degradation tokens stands in for a
learned text encoder. Adapter and projection weights can be stored in and
loaded from HSW weight files, so trained values can be dropped in later.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .degrade.prompt import CANONICAL_TOKENS
from .exceptions import HsiFormatError, InvariantError, ParameterError, ShapeError, SizeMismatchError, VocabularyError
from .freq import _fft2, _ifft2, low_pass_mask

__all__ = [
    "D_TEXT",
    "D_HIDDEN",
    "LEAKY_SLOPE",
    "TaskDescriptor",
    "AdapterWeights",
    "ControllerProjection",
    "ControllerPair",
    "FeatureMap",
    "QKVProjection",
    "encode_tags",
    "adapt",
    "make_controllers",
    "modulate_features",
    "feature_tokens",
    "softmax_rows",
    "attention_weights",
    "cross_attend",
    "self_attend",
    "save_weights",
    "load_weights",
    "PromptGuidedModulation",
]

D_TEXT = 512
D_HIDDEN = 64
LEAKY_SLOPE = 0.01
IMAG_TOL = 1e-5
WEIGHT_MAGIC = "HSW1"


def _finite(name, arr):
    if not np.isfinite(arr).all():
        raise InvariantError(f"{name} contains non-finite values")
    return arr


def _readonly(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# Descriptor and adapter


@dataclass(frozen=True, eq=False)
class TaskDescriptor:
    embedding: np.ndarray

    def __post_init__(self):
        emb = _readonly(self.embedding)
        if emb.ndim != 1:
            raise ShapeError(f"descriptor must be a vector, got shape {emb.shape}")
        _finite("descriptor", emb)
        object.__setattr__(self, "embedding", emb)

    def __len__(self):
        return self.embedding.shape[0]


def encode_tags(tags, vocab=CANONICAL_TOKENS, d_text=D_TEXT) -> TaskDescriptor:
    """Multi-hot embedding of a tag set, tiled to ``d_text`` entries.

    Entry ``i`` is 1 when ``vocab[i % len(vocab)]`` is among ``tags``. Duplicate
    tags and tag order have no effect.
    """
    vocab = tuple(vocab)
    tag_set = set(tags)
    unknown = sorted(tag_set - set(vocab))
    if unknown:
        raise VocabularyError(f"unknown prompt tokens: {unknown}")
    if d_text < 1:
        raise ParameterError("d_text must be positive")
    hot = np.array([t in tag_set for t in vocab], dtype=np.float64)
    return TaskDescriptor(np.resize(hot, d_text))


@dataclass(frozen=True, eq=False)
class AdapterWeights:
    """Two dense layers with a leaky rectifier between them.

    ``layer1`` is ``(d_hidden, d_in)``, ``layer2`` is ``(d_out, d_hidden)``.
    Weights are held in float32 so they survive a weight-file round trip
    bit for bit.
    """

    layer1: np.ndarray
    bias1: np.ndarray
    layer2: np.ndarray
    bias2: np.ndarray
    slope: float = LEAKY_SLOPE

    def __post_init__(self):
        for name in ("layer1", "bias1", "layer2", "bias2"):
            object.__setattr__(self, name, _finite(name, _readonly(getattr(self, name), np.float32)))
        w1, b1, w2, b2 = self.layer1, self.bias1, self.layer2, self.bias2
        if w1.ndim != 2 or w2.ndim != 2 or b1.ndim != 1 or b2.ndim != 1:
            raise ShapeError("adapter layers must be matrices and biases vectors")
        if b1.shape[0] != w1.shape[0] or w2.shape[1] != w1.shape[0] or b2.shape[0] != w2.shape[0]:
            raise ShapeError(
                f"inconsistent adapter shapes: layer1 {w1.shape}, bias1 {b1.shape}, "
                f"layer2 {w2.shape}, bias2 {b2.shape}"
            )
        if not np.isfinite(self.slope):
            raise ParameterError("slope must be finite")

    @property
    def d_in(self) -> int:
        return self.layer1.shape[1]

    @property
    def d_hidden(self) -> int:
        return self.layer1.shape[0]

    @property
    def d_out(self) -> int:
        return self.layer2.shape[0]

    @classmethod
    def zeros(cls, d_in=D_TEXT, d_hidden=D_HIDDEN, d_out=D_TEXT):
        return cls(np.zeros((d_hidden, d_in)), np.zeros(d_hidden), np.zeros((d_out, d_hidden)), np.zeros(d_out))

    @classmethod
    def random(cls, seed=0, d_in=D_TEXT, d_hidden=D_HIDDEN, d_out=D_TEXT, scale=0.1):
        rng = np.random.default_rng(seed)
        return cls(
            rng.normal(0, scale, (d_hidden, d_in)),
            rng.normal(0, scale, d_hidden),
            rng.normal(0, scale, (d_out, d_hidden)),
            rng.normal(0, scale, d_out),
        )

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "adapter.layer1": self.layer1,
            "adapter.bias1": self.bias1,
            "adapter.layer2": self.layer2,
            "adapter.bias2": self.bias2,
        }

    @classmethod
    def from_tensors(cls, tensors, slope=LEAKY_SLOPE):
        try:
            return cls(
                tensors["adapter.layer1"],
                tensors["adapter.bias1"],
                tensors["adapter.layer2"],
                tensors["adapter.bias2"],
                slope,
            )
        except KeyError as exc:
            raise HsiFormatError(f"weight file lacks tensor {exc.args[0]!r}") from None


def _leaky(x, slope):
    return np.where(x >= 0, x, slope * x)


def adapt(descriptor: TaskDescriptor, weights: AdapterWeights) -> TaskDescriptor:
    x = descriptor.embedding
    if x.shape[0] != weights.d_in:
        raise ShapeError(f"descriptor length {x.shape[0]} does not match adapter input {weights.d_in}")
    hidden = _leaky(weights.layer1.astype(np.float64) @ x + weights.bias1, weights.slope)
    return TaskDescriptor(weights.layer2.astype(np.float64) @ hidden + weights.bias2)


# --------------------------------------------------------------------------
# Controllers


@dataclass(frozen=True, eq=False)
class ControllerPair:
    lambda_low: np.ndarray
    lambda_high: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        for name in ("lambda_low", "lambda_high", "mu"):
            arr = _finite(name, _readonly(getattr(self, name)))
            if arr.ndim != 1:
                raise ShapeError(f"{name} must be a vector")
            object.__setattr__(self, name, arr)
        if not self.lambda_low.shape == self.lambda_high.shape == self.mu.shape:
            raise ShapeError("controller vectors must share one length")

    @property
    def channels(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def zeros(cls, channels):
        z = np.zeros(channels)
        return cls(z, z, z)

    def concat(self) -> np.ndarray:
        return np.concatenate([self.lambda_low, self.lambda_high, self.mu])


@dataclass(frozen=True, eq=False)
class ControllerProjection:
    """Affine map from a descriptor to ``3 * d_feat`` controller values."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _finite("weight", _readonly(self.weight, np.float32))
        b = _finite("bias", _readonly(self.bias, np.float32))
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[0]:
            raise ShapeError(f"projection weight {w.shape} and bias {b.shape} are inconsistent")
        if w.shape[0] % 3:
            raise ShapeError(f"projection output length {w.shape[0]} is not a multiple of 3")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def d_feat(self) -> int:
        return self.weight.shape[0] // 3

    @classmethod
    def zeros(cls, d_feat, d_text=D_TEXT):
        return cls(np.zeros((3 * d_feat, d_text)), np.zeros(3 * d_feat))

    def tensors(self) -> dict[str, np.ndarray]:
        return {"projection.weight": self.weight, "projection.bias": self.bias}

    @classmethod
    def from_tensors(cls, tensors):
        try:
            return cls(tensors["projection.weight"], tensors["projection.bias"])
        except KeyError as exc:
            raise HsiFormatError(f"weight file lacks tensor {exc.args[0]!r}") from None


def make_controllers(descriptor: TaskDescriptor, projection: ControllerProjection) -> ControllerPair:
    """Project once, then cut the output into (lambda_low, lambda_high, mu)."""
    x = descriptor.embedding
    if x.shape[0] != projection.weight.shape[1]:
        raise ShapeError(f"descriptor length {x.shape[0]} does not match projection input {projection.weight.shape[1]}")
    out = projection.weight.astype(np.float64) @ x + projection.bias
    lo, hi, mu = np.split(out, 3)
    return ControllerPair(lo, hi, mu)


# --------------------------------------------------------------------------
# Feature modulation


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Channel-first feature tensor ``(channels, height, width)``."""

    data: np.ndarray

    def __post_init__(self):
        arr = _finite("feature map", _readonly(self.data))
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeError(f"feature map must be (channels, height, width), got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def modulate_features(f: FeatureMap, ctrl: ControllerPair, cutoff_radius=0.25) -> FeatureMap:
    """Per channel ``c``: ``(1 + lambda_low[c]) * low + (1 + lambda_high[c]) * high + mu[c]``.

    ``low``/``high`` are the parts of the channel spectrum below and above
    ``cutoff_radius`` (fraction of Nyquist). The bias is added after the
    inverse transform, which amounts to a DC shift.
    """
    if ctrl.channels != f.channels:
        raise ShapeError(f"controllers have length {ctrl.channels}, feature map has {f.channels} channels")
    if not 0.0 < cutoff_radius < 1.0:
        raise ParameterError(f"cutoff_radius must lie in (0, 1), got {cutoff_radius}")
    low = low_pass_mask(f.height, f.width, cutoff_radius)
    gain = np.where(low, 1.0 + ctrl.lambda_low[:, None, None], 1.0 + ctrl.lambda_high[:, None, None])
    out = _ifft2(gain * _fft2(f.data))
    residue = np.max(np.abs(out.imag))
    if residue >= IMAG_TOL:
        raise InvariantError(f"modulated feature map has imaginary residue {residue:.3g}")
    return FeatureMap(out.real + ctrl.mu[:, None, None])


# --------------------------------------------------------------------------
# Attention


def feature_tokens(f: FeatureMap) -> np.ndarray:
    """Row-major spatial tokens: shape ``(height * width, channels)``."""
    return f.data.reshape(f.channels, -1).T.copy()


@dataclass(frozen=True, eq=False)
class QKVProjection:
    """Affine query/key/value maps; each weight is ``(d_out, d_in)``."""

    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray

    def __post_init__(self):
        for name in ("wq", "bq", "wk", "bk", "wv", "bv"):
            object.__setattr__(self, name, _finite(name, _readonly(getattr(self, name))))
        for w, b, tag in ((self.wq, self.bq, "q"), (self.wk, self.bk, "k"), (self.wv, self.bv, "v")):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"{tag} projection weight {w.shape} and bias {b.shape} are inconsistent")
        if self.wq.shape != self.wk.shape:
            raise ShapeError("query and key projections must share a shape")
        if self.wv.shape[1] != self.wq.shape[1]:
            raise ShapeError("value projection input width differs from query/key")

    @property
    def d_in(self) -> int:
        return self.wq.shape[1]

    @classmethod
    def random(cls, d_in, d_qk, d_v=None, seed=0):
        rng = np.random.default_rng(seed)
        d_v = d_qk if d_v is None else d_v
        return cls(
            rng.standard_normal((d_qk, d_in)),
            rng.standard_normal(d_qk),
            rng.standard_normal((d_qk, d_in)),
            rng.standard_normal(d_qk),
            rng.standard_normal((d_v, d_in)),
            rng.standard_normal(d_v),
        )

    def project(self, tokens):
        x = np.asarray(tokens, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.d_in:
            raise ShapeError(f"tokens of shape {x.shape} do not match projection input {self.d_in}")
        return x @ self.wq.T + self.bq, x @ self.wk.T + self.bk, x @ self.wv.T + self.bv


def softmax_rows(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = np.exp(z - z.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def attention_weights(q, k, d_k) -> np.ndarray:
    """``softmax(q @ k.T / d_k)``; ``d_k`` divides the logits directly."""
    if not d_k > 0:
        raise ParameterError("d_k must be positive")
    if q.shape[1] != k.shape[1]:
        raise ShapeError(f"query width {q.shape[1]} differs from key width {k.shape[1]}")
    return softmax_rows(q @ k.T / d_k)


def cross_attend(f_alpha, f_beta, proj_alpha: QKVProjection, proj_beta: QKVProjection, d_k):
    """Exchange queries between two token branches.

    Returns ``(softmax(Q_a K_b^T / d_k) V_b, softmax(Q_b K_a^T / d_k) V_a)``.
    """
    qa, ka, va = proj_alpha.project(f_alpha)
    qb, kb, vb = proj_beta.project(f_beta)
    if va.shape[1] != vb.shape[1]:
        raise ShapeError("branch value widths differ")
    return attention_weights(qa, kb, d_k) @ vb, attention_weights(qb, ka, d_k) @ va


def self_attend(f_gamma, proj: QKVProjection, d_k) -> np.ndarray:
    q, k, v = proj.project(f_gamma)
    return attention_weights(q, k, d_k) @ v


# --------------------------------------------------------------------------
# Weight files
#
# HSW1
# name=dim0xdim1...
# ...
# <blank line>
# little-endian float32 payloads, concatenated in header order


def save_weights(tensors, path) -> None:
    lines = [WEIGHT_MAGIC]
    payload = []
    for name, arr in tensors.items():
        if not name or any(c in name for c in "=\n"):
            raise ParameterError(f"invalid tensor name {name!r}")
        arr = np.asarray(arr)
        lines.append(f"{name}=" + "x".join(str(d) for d in arr.shape))
        payload.append(np.ascontiguousarray(arr).astype("<f4").tobytes())
    Path(path).write_bytes(("\n".join(lines) + "\n\n").encode("ascii") + b"".join(payload))


def load_weights(path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    end = blob.find(b"\n\n")
    if end < 0:
        raise HsiFormatError(f"{path}: header is not terminated by a blank line")
    header = blob[:end].decode("ascii", errors="replace").split("\n")
    if header[0] != WEIGHT_MAGIC:
        raise HsiFormatError(f"header line 1: expected {WEIGHT_MAGIC!r}, got {header[0]!r}")
    shapes = {}
    for lineno, line in enumerate(header[1:], start=2):
        name, sep, dims = line.partition("=")
        if not sep or not name or name in shapes:
            raise HsiFormatError(f"header line {lineno}: bad or duplicate tensor entry {line!r}")
        try:
            shape = tuple(int(d) for d in dims.split("x")) if dims else ()
        except ValueError:
            raise HsiFormatError(f"header line {lineno}: bad shape {line!r}") from None
        if any(d < 0 for d in shape):
            raise HsiFormatError(f"header line {lineno}: negative dimension {line!r}")
        shapes[name] = shape
    payload = blob[end + 2 :]
    expected = 4 * sum(int(np.prod(s)) for s in shapes.values())
    if len(payload) != expected:
        raise SizeMismatchError(f"{path}: header declares {expected} payload bytes, found {len(payload)}")
    out, offset = {}, 0
    for name, shape in shapes.items():
        n = int(np.prod(shape))
        out[name] = np.frombuffer(payload, dtype="<f4", count=n, offset=offset).reshape(shape).astype(np.float32)
        offset += 4 * n
    return out


# --------------------------------------------------------------------------
# Estimator


class PromptGuidedModulation(TransformerMixin, BaseEstimator):
    """Modulate ``(channels, height, width)`` feature maps from a tag set.

    Parameters
    ----------
    tags : sequence of str, default=()
        Degradation tokens describing the input.
    adapter : AdapterWeights, optional
        Defaults to zero weights, which yields zero controllers.
    projection : ControllerProjection, optional
        Defaults to a zero projection sized from the first fitted input.
    cutoff_radius : float, default=0.25
    """

    def __init__(self, tags=(), adapter=None, projection=None, cutoff_radius=0.25):
        self.tags = tags
        self.adapter = adapter
        self.projection = projection
        self.cutoff_radius = cutoff_radius

    def fit(self, X, y=None):
        f = X if isinstance(X, FeatureMap) else FeatureMap(X)
        adapter = self.adapter if self.adapter is not None else AdapterWeights.zeros()
        projection = self.projection
        if projection is None:
            projection = ControllerProjection.zeros(f.channels, adapter.d_out)
        descriptor = adapt(encode_tags(self.tags, d_text=adapter.d_in), adapter)
        self.controllers_ = make_controllers(descriptor, projection)
        if self.controllers_.channels != f.channels:
            raise ShapeError(f"projection yields {self.controllers_.channels} channels, input has {f.channels}")
        self.n_channels_in_ = f.channels
        return self

    def transform(self, X):
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "controllers_")
        f = X if isinstance(X, FeatureMap) else FeatureMap(X)
        out = modulate_features(f, self.controllers_, self.cutoff_radius)
        return out if isinstance(X, FeatureMap) else out.data
