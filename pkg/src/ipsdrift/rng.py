"""Counter-based random streams keyed by (seed, stream, particle, step).

Every variate is a pure function of its coordinates, so draws do not depend
on how many particles are simulated, in what order, or in which process.
The mixer is the SplitMix64 finalizer applied in a chain over the counter
fields; uniforms take the top 53 bits and normals use the inverse normal CDF.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

# stream tags
INIT = 1
NOISE = 2


def _mix(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream: int) -> np.uint64:
    k = _mix(np.uint64(int(seed) & _MASK))
    return _mix(k ^ np.uint64(stream))


def derive_seed(*parts: int) -> int:
    """Deterministic 63-bit child seed from integer parts."""
    h = np.uint64(0x6A09E667F3BCC908)
    for p in parts:
        with np.errstate(over="ignore"):
            h = _mix(h ^ np.uint64(int(p) & _MASK))
    return int(h) >> 1


class CounterStream:
    """Per-particle streams for one ``(seed, stream)`` pair.

    The particle part of the counter hash is precomputed, so each call only
    mixes in the step and lane.
    """

    def __init__(self, seed: int, stream: int, ids):
        ids = np.asarray(ids, dtype=np.uint64)
        with np.errstate(over="ignore"):
            self._base = _mix(stream_key(seed, stream) + _mix(ids))

    def uniforms(self, step: int, n_lanes: int, lane0: int = 0) -> np.ndarray:
        """Uniforms on ``(0, 1)``, shape ``(n_particles, n_lanes)``."""
        with np.errstate(over="ignore"):
            h = _mix(self._base + np.uint64(step))
            lanes = _mix(np.arange(lane0, lane0 + n_lanes, dtype=np.uint64))
            h = _mix(h[:, None] ^ lanes[None, :])
        return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, step: int, n: int, lane0: int = 0) -> np.ndarray:
        """Standard normals by inverse CDF, shape ``(n_particles, n)``."""
        return ndtri(self.uniforms(step, n, lane0))


def uniforms(seed: int, stream: int, ids, step: int, n_lanes: int, lane0: int = 0) -> np.ndarray:
    return CounterStream(seed, stream, ids).uniforms(step, n_lanes, lane0)


def normals(seed: int, stream: int, ids, step: int, n: int, lane0: int = 0) -> np.ndarray:
    return CounterStream(seed, stream, ids).normals(step, n, lane0)
