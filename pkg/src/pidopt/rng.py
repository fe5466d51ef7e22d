"""Self-contained deterministic PRNG used for every random draw in the package.

The generator is counter-based splitmix64: output k of stream `seed` is

    mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)

with the standard finalizer constants 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB.  Because each output depends only on (seed, k), draws
vectorize over numpy uint64 arrays and the stream is reproducible bit-for-bit
independent of numpy version or platform.

Uniforms take the top 53 bits (`u = (x >> 11) * 2**-53`, in [0, 1)); normals
come from the Box-Muller transform on consecutive uniform pairs.
"""

from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)

# Stream labels, mixed into derived seeds so that independent consumers of the
# same run seed (init, batch order, dropout, ...) never share a stream.
STREAM_INIT = 1
STREAM_BATCH_ORDER = 2
STREAM_DROPOUT = 3
STREAM_BLOBS = 4
STREAM_GRADS = 5
STREAM_START_POINT = 6


def _mix(x: np.ndarray) -> np.ndarray:
    x = x & _MASK
    x = (x ^ (x >> np.uint64(30))) * _MIX1 & _MASK
    x = (x ^ (x >> np.uint64(27))) * _MIX2 & _MASK
    return x ^ (x >> np.uint64(31))


def derive_seed(seed: int, *parts: int) -> int:
    """Fold integer labels into `seed`, producing an independent child seed.

    Each part is mixed before being xor-ed in, so (a, b) and (b, a) derive
    different children.
    """
    # numpy warns on wrap-around for uint64 *scalars* (array ops wrap silently).
    with np.errstate(over="ignore"):
        h = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        for p in parts:
            h = _mix(h ^ _mix(np.uint64(p & 0xFFFFFFFFFFFFFFFF)))
    return int(h)


class Rng:
    """Counter-based splitmix64 stream.

    Not thread-safe; create one instance per consumer.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._counter = 0

    def raw(self, n: int) -> np.ndarray:
        """Next `n` raw uint64 outputs."""
        ks = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix(self._seed + ks * _GAMMA)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normal doubles (Box-Muller on uniform pairs)."""
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        # 1 - u1 lies in (0, 1], keeping the log argument nonzero.
        r = np.sqrt(-2.0 * np.log(1.0 - u[:m]))
        theta = 2.0 * np.pi * u[m:]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return z[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of arange(n)."""
        idx = np.arange(n, dtype=np.int64)
        draws = self.raw(n - 1) if n > 1 else np.empty(0, dtype=np.uint64)
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] % np.uint64(i + 1))
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def bernoulli(self, p: float, shape: tuple[int, ...]) -> np.ndarray:
        """Boolean array, True with probability p."""
        n = int(np.prod(shape)) if shape else 1
        return (self.uniforms(n) < p).reshape(shape)
