"""Portable, counter-based pseudo-random generator (SplitMix64).

Algorithm
---------
The generator state is ``(seed, counter)``. Draw ``i`` (1-based) is::

    z = (seed + i * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)

and a uniform real in [0, 1) is ``(z >> 11) * 2**-53``. This is exactly the
SplitMix64 output stream, so any language with 64-bit unsigned arithmetic
reproduces it bit for bit. Because each draw is addressed by its index, a
block of ``n`` draws is computed in a single vectorized pass and equals ``n``
scalar draws.

Derived distributions consume uniforms in order: normals use Box-Muller on
consecutive pairs ``(u1, u2)``, exponentials use ``-ln(1 - u)`` and
permutations use a stable argsort of uniform keys.

An ``Rng`` is single-owner. Parallel code derives distinct seeds
(``src.util.hashing.derive_seed``) instead of sharing one instance.
"""

import numpy as np

from ..util.errors import InvalidInputError

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1
TWO_POW_MINUS_53 = 1.0 / 9007199254740992.0


def _mix_scalar(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over='ignore'):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        return z ^ (z >> np.uint64(31))


class Rng:
    """SplitMix64 stream addressed by a draw counter."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def __repr__(self):
        return f"Rng(seed={self.seed}, counter={self.counter})"

    def next_u64(self) -> int:
        """Return the next raw 64-bit output."""
        self.counter += 1
        return _mix_scalar((self.seed + self.counter * GAMMA) & MASK64)

    def next_uniform(self) -> float:
        """Return the next uniform real in [0, 1)."""
        return (self.next_u64() >> 11) * TWO_POW_MINUS_53

    def u64(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw outputs as a uint64 array."""
        n = int(n)
        if n < 0:
            raise InvalidInputError(f"Draw count must be non-negative, got {n}")
        # Addresses are computed modulo 2**64 in Python ints, then mixed in numpy.
        start = (self.seed + (self.counter + 1) * GAMMA) & MASK64
        steps = np.arange(n, dtype=np.uint64)
        with np.errstate(over='ignore'):
            states = np.uint64(start) + steps * np.uint64(GAMMA)
        self.counter += n
        return _mix_array(states)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Return ``n`` uniforms in [low, high)."""
        u = (self.u64(n) >> np.uint64(11)).astype(np.float64) * TWO_POW_MINUS_53
        if low == 0.0 and high == 1.0:
            return u
        return low + (high - low) * u

    def normal(self, n: int) -> np.ndarray:
        """Return ``n`` standard normal draws (Box-Muller on uniform pairs)."""
        n_pairs = (int(n) + 1) // 2
        u = self.uniform(2 * n_pairs)
        u1 = u[0::2]
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log1p(-u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * n_pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def exponential(self, n: int, scale: float = 1.0) -> np.ndarray:
        """Return ``n`` exponential draws with the given mean."""
        return -scale * np.log1p(-self.uniform(n))

    def permutation(self, n: int) -> np.ndarray:
        """Return a uniformly random permutation of ``range(n)``."""
        return np.argsort(self.uniform(n), kind='stable')

    def choice(self, n: int, k: int) -> np.ndarray:
        """Choose ``k`` distinct indices out of ``range(n)``, in draw order."""
        if k > n:
            raise InvalidInputError(f"Cannot choose {k} distinct items out of {n}")
        return self.permutation(n)[:k]

    def integers(self, n: int, high: int) -> np.ndarray:
        """Return ``n`` integers uniform in [0, high)."""
        return np.minimum(np.floor(self.uniform(n) * high).astype(np.int64), high - 1)
