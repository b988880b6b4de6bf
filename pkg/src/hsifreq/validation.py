"""Input validation helpers in the spirit of ``sklearn.utils.check_array``."""

import numpy as np

from .cube import HsiCube
from .exceptions import InvariantError, ShapeError


def as_cube(X, name="X") -> HsiCube:
    """Return ``X`` as an :class:`HsiCube`, accepting cubes or 3-D array-likes."""
    if isinstance(X, HsiCube):
        return X
    arr = np.asarray(X)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be 3-D (height, width, bands), got shape {arr.shape}")
    return HsiCube(arr)


def check_cube_array(X, name="X", dtype=np.float64, min_bands=1, min_size=1) -> np.ndarray:
    """Validate ``X`` and return it as a 3-D array of ``dtype``.

    Unlike :func:`as_cube` this keeps the caller's precision (float64 by
    default), which matters when comparing hand-computed metric values.
    """
    arr = np.asarray(X.data if isinstance(X, HsiCube) else X, dtype=dtype)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be 3-D (height, width, bands), got shape {arr.shape}")
    if arr.shape[2] < min_bands:
        raise ShapeError(f"{name} needs at least {min_bands} bands, got {arr.shape[2]}")
    if min(arr.shape[:2]) < min_size:
        raise ShapeError(f"{name} spatial size {arr.shape[:2]} below minimum {min_size}")
    if not np.isfinite(arr).all():
        raise InvariantError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a, b, names=("reference", "test")):
    sa, sb = np.shape(a.data if isinstance(a, HsiCube) else a), np.shape(b.data if isinstance(b, HsiCube) else b)
    if sa != sb:
        raise ShapeError(f"shape mismatch: {names[0]} {sa} vs {names[1]} {sb}")


def check_pair(ref, test, dtype=np.float64, min_bands=1):
    """Validate a reference/test pair and return both as arrays."""
    check_same_shape(ref, test)
    return (
        check_cube_array(ref, "reference", dtype=dtype, min_bands=min_bands),
        check_cube_array(test, "test", dtype=dtype, min_bands=min_bands),
    )


def wrap_like(template, data):
    """Return ``data`` as a cube if ``template`` is a cube, else as a plain array."""
    if isinstance(template, HsiCube):
        return template.with_data(data)
    return np.asarray(data)
