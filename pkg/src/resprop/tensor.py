"""Dense matrix helpers and a small deterministic random number generator.

Everything downstream works on plain ``numpy.float64`` arrays in row-major
(C) order. The RNG is implemented in-repo so that any (seed, stream_id)
pair produces bit-identical draws on every platform, independent of
numpy's own generator versioning.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# SplitMix64 golden-ratio increment and the two odd multipliers of the
# Stafford "variant 13" finalizer.
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_MULT_1 = 0xBF58476D1CE4E5B9
_MIX_MULT_2 = 0x94D049BB133111EB
# Independent odd constant (MurmurHash3 finalizer) used only to derive
# per-stream increments.
_STREAM_MULT = 0xFF51AFD7ED558CCD


def _mix64(z: int) -> int:
    """Stafford variant-13 finalizer; a bijection on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX_MULT_1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_MULT_2) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized `_mix64` over a uint64 array (modular arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_MULT_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_MULT_2)
        return z ^ (z >> np.uint64(31))


class RngStream:
    """Counter-style SplitMix64 stream with a per-stream increment.

    State advances by a stream-specific odd increment (gamma) and each
    draw is the mixed state. Outputs depend only on (seed, stream_id,
    position), so the sequence is reproducible bit-for-bit.

    Stream independence: the mixing finalizer is a bijection, so two
    streams emit the same value at some step only if their raw states
    coincide there. States advance by the streams' gammas, hence two
    streams with different gammas can never agree on two *consecutive*
    draws (equal consecutive states would force equal gammas). Gammas
    are derived by hashing (seed, stream_id); distinct pairs collide
    with probability 2^-63 per pair, which we treat as never.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self._seed = int(seed) & _MASK64
        self._stream_id = int(stream_id) & _MASK64
        h = _mix64(self._seed ^ _GOLDEN_GAMMA)
        self._state = _mix64(h ^ ((self._stream_id * _GOLDEN_GAMMA) & _MASK64))
        self._gamma = _mix64((h + self._stream_id * _STREAM_MULT) & _MASK64) | 1
        self._position = 0

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def stream_id(self) -> int:
        return self._stream_id

    @property
    def position(self) -> int:
        """Number of 64-bit draws consumed so far."""
        return self._position

    def next_uint64(self) -> int:
        self._state = (self._state + self._gamma) & _MASK64
        self._position += 1
        return _mix64(self._state)

    def _next_block(self, n: int) -> np.ndarray:
        """n raw draws as uint64, bit-identical to n `next_uint64` calls."""
        if n < 0:
            raise ValueError(f"block size must be >= 0, got {n}")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self._state) + np.uint64(self._gamma) * steps
        self._state = (self._state + n * self._gamma) & _MASK64
        self._position += n
        return _mix64_array(states)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        """Uniform float64 draws in [low, high).

        Each value consumes exactly one 64-bit draw; the unit value is
        the high 53 bits scaled by 2^-53.
        """
        if size is None:
            u = (self.next_uint64() >> 11) * 2.0**-53
            return low + (high - low) * u
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        u = (self._next_block(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return (low + (high - low) * u).reshape(shape)

    def integers(self, upper: int, size=None):
        """Draws from {0, ..., upper-1} via floor(uniform * upper).

        Deterministic across platforms; the floor construction has a
        relative bias below 2^-53, negligible for any upper used here.
        """
        if upper <= 0:
            raise ValueError(f"upper must be positive, got {upper}")
        u = self.uniform(size=size)
        if size is None:
            return int(u * upper)
        return np.floor(u * upper).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): stable argsort of n draws."""
        keys = self._next_block(n)
        return np.argsort(keys, kind="stable")

    def shuffled(self, arr: np.ndarray) -> np.ndarray:
        return arr[self.permutation(len(arr))]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit shape validation.

    Raises ValueError reporting both shapes when the inner dimensions
    disagree or either argument is not 2-D.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(
            f"matmul expects 2-D operands, got shapes {a.shape} and {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"matmul dimension mismatch: {a.shape[0]}x{a.shape[1]} times "
            f"{b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def bernoulli_matrix(rng: RngStream, rows: int, cols: int, p_one: float) -> np.ndarray:
    """rows x cols matrix of {0.0, 1.0}, each entry 1 with probability p_one.

    Consumes exactly rows*cols draws from `rng` regardless of p_one.
    """
    if not 0.0 <= p_one <= 1.0:
        raise ValueError(f"p_one must lie in [0, 1], got {p_one}")
    if rows < 0 or cols < 0:
        raise ValueError(f"matrix dims must be >= 0, got {rows}x{cols}")
    u = rng.uniform(size=(rows, cols))
    return (u < p_one).astype(np.float64)
