"""Seedable noise source shared by the noise transform and the random explainer.

A splitmix64 stream keeps the generated values identical across platforms and
numpy versions; everything that consumes randomness goes through here so one
seed reproduces a whole run.
"""

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_MASK64 = 0xFFFFFFFFFFFFFFFF


def uniform_signed(seed: int, n: int) -> np.ndarray:
    """n float64 values uniform in [-1, 1), deterministic per seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    # uint64 arithmetic wraps by design; silence the overflow warning only here
    with np.errstate(over="ignore"):
        state = np.uint64(seed & _MASK64) + np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        z = state
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    # top 53 bits -> [0, 1) with full double precision
    u = (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return 2.0 * u - 1.0


def derive_seed(*parts) -> int:
    """Collapse a tuple of labels/ints into a stable 64-bit child seed.

    Hash-based so unrelated derivations ("noise" vs "round 3") cannot
    collide the way additive offsets would.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
