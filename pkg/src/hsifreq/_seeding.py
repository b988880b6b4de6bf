"""Sub-seed derivation.

Item and operator seeds are derived from a master seed with a SplitMix64
style avalanche so that every item can be generated independently of
scheduling order.  The constants are part of the public contract:

* golden-ratio increment ``0x9E3779B97F4A7C15``
* multipliers ``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``
* shifts 30, 27, 31
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


def mix64(seed: int, index: int) -> int:
    """Return the 64-bit sub-seed of ``seed`` for stream ``index``."""
    z = (int(seed) + (int(index) + 1) * GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed
