"""Seeded lattice value noise used for abundance maps and cloud masks."""

import numpy as np


LACUNARITY = 1.0 + np.sqrt(1.07)


def _fade(t):
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def value_noise(height, width, cell, rng):
    """Smoothly interpolated lattice noise in ``[0, 1]``.

    Parameters
    ----------
    height, width : int
        Output size in pixels.
    cell : float
        Lattice spacing in pixels; larger values give smoother fields.
    rng : numpy.random.Generator
        Source of the lattice values.
    """
    cell = max(float(cell), 1.0)
    gh = int(np.ceil(height / cell)) + 3
    gw = int(np.ceil(width / cell)) + 3
    grid = rng.random((gh, gw))
    # random sub-cell phase so lattice nodes do not sit on the pixel grid
    oy, ox = rng.random(2)

    y = np.arange(height) / cell + oy
    x = np.arange(width) / cell + ox
    yi = np.floor(y).astype(np.intp)
    xi = np.floor(x).astype(np.intp)
    ty = _fade(y - yi)[:, None]
    tx = _fade(x - xi)[None, :]

    v00 = grid[yi[:, None], xi[None, :]]
    v01 = grid[yi[:, None], xi[None, :] + 1]
    v10 = grid[yi[:, None] + 1, xi[None, :]]
    v11 = grid[yi[:, None] + 1, xi[None, :] + 1]
    top = v00 + tx * (v01 - v00)
    bottom = v10 + tx * (v11 - v10)
    return top + ty * (bottom - top)


def fractal_noise(height, width, octaves, base_cell, rng, persistence=0.5):
    """Sum of ``octaves`` value-noise layers, min-max normalised to ``[0, 1]``.

    Each octave shrinks the lattice spacing by an irrational factor (about
    2.03) and scales the amplitude by ``persistence``; the irrational ratio
    keeps octave lattices from sharing a common period.
    """
    total = np.zeros((height, width))
    amplitude = 1.0
    cell = float(base_cell)
    for _ in range(int(octaves)):
        total += amplitude * value_noise(height, width, cell, rng)
        amplitude *= persistence
        cell /= LACUNARITY
    lo, hi = total.min(), total.max()
    if hi - lo <= 0:
        return np.zeros_like(total)
    return (total - lo) / (hi - lo)
