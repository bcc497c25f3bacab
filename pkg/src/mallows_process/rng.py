"""Counter-based random streams keyed by (seed, replication, coordinate, draw).

Every uniform used by the simulators is a pure function of its key, so a run
is reproducible regardless of batching, vectorization or thread count.  The
mixing function is the SplitMix64 finalizer applied once per key component.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind not in "iu":
        raise TypeError("stream keys must be integers")
    return arr.astype(np.int64).astype(np.uint64)


def hash_key(seed, replication, coordinate, draw) -> np.ndarray:
    """64-bit hash of the broadcast key arrays."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(np.uint64(int(seed) & _MASK64)))
        h = _mix(h ^ _as_u64(replication))
        h = _mix(h ^ _as_u64(coordinate))
        h = _mix(h ^ _as_u64(draw))
    return h


def counter_uniform(seed, replication, coordinate, draw) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per broadcast key."""
    h = hash_key(seed, replication, coordinate, draw)
    return ((h >> _S11).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def counter_exponential(seed, replication, coordinate, draw) -> np.ndarray:
    """Standard exponentials by inversion of :func:`counter_uniform`."""
    return -np.log(counter_uniform(seed, replication, coordinate, draw))


class CounterStream:
    """Sequential scalar view of the keyed stream for one (replication, coordinate).

    Offers the ``uniform()`` / ``exponential()`` calls the scalar simulators
    use, the same duck type as :class:`numpy.random.Generator`.
    """

    def __init__(self, seed: int, replication: int = 0, coordinate: int = 0):
        self.seed = int(seed)
        self.replication = int(replication)
        self.coordinate = int(coordinate)
        self.draw = 0

    def uniform(self) -> float:
        u = float(counter_uniform(self.seed, self.replication, self.coordinate, self.draw))
        self.draw += 1
        return u

    def exponential(self) -> float:
        return -np.log(self.uniform())

    def __repr__(self) -> str:
        return (f"CounterStream(seed={self.seed}, replication={self.replication}, "
                f"coordinate={self.coordinate}, draw={self.draw})")
