"""Stateless counter-based uniforms for graph edge sampling.

Each (seed, k, l) triple maps to one uniform in [0, 1) through a splitmix64
finalizer chain, so the draw for a vertex pair does not depend on the graph
size or on evaluation order, and generation vectorizes over index arrays.
"""

from __future__ import annotations

import numpy as np

__all__ = ["pair_uniform"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z + _GOLDEN).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def pair_uniform(seed: int, k, l) -> np.ndarray:
    """Uniform in [0,1) keyed by (seed, k, l); vectorized over k, l.

    k and l must be nonnegative and below 2**32 so the pair packs into one
    64-bit counter.
    """
    ka = np.asarray(k, dtype=np.uint64)
    la = np.asarray(l, dtype=np.uint64)
    key = _splitmix64(np.uint64(seed) & np.uint64(0xFFFFFFFFFFFFFFFF))
    counter = (ka << np.uint64(32)) | la
    with np.errstate(over="ignore"):
        h = _splitmix64(_splitmix64(counter ^ key) ^ _MIX2)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
