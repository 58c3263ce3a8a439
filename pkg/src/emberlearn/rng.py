"""Fixed, documented pseudo-random generators.

Every stochastic component of the package draws from the generators in this
module so that runs are bit-reproducible from a 64-bit seed, here and in any
re-implementation:

* ``splitmix64`` -- counter-based mixer used to derive independent child
  seeds (per-sample seeds, per-purpose seed streams).  Output ``i`` depends
  only on ``(seed, i)``, so derived seeds can be computed in any order.
* ``Xoshiro256StarStar`` -- the xoshiro256** stream generator of Blackman and
  Vigna, seeded from four consecutive splitmix64 outputs (the seeding the
  reference implementation recommends).

Uniform doubles are the top 53 bits of an output scaled by 2**-53, i.e. in
[0, 1).  Normals come from the Box-Muller transform; both variates of a pair
are consumed in order.  Changing any of this breaks recorded datasets.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 2.0 ** -53


def splitmix64(seed: int, index: int) -> int:
    """Return output ``index`` (0-based) of the splitmix64 sequence for ``seed``."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 state initialization."""

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, seed: int):
        self.s0 = splitmix64(seed, 0)
        self.s1 = splitmix64(seed, 1)
        self.s2 = splitmix64(seed, 2)
        self.s3 = splitmix64(seed, 3)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        x = (s1 * 5) & _MASK64
        result = ((x << 7 | x >> 57) & _MASK64) * 9 & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self.s0, self.s1, self.s2 = s0, s1, s2
        self.s3 = (s3 << 45 | s3 >> 19) & _MASK64
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV53

    def uniforms(self, n: int) -> list[float]:
        """n sequential uniform doubles in [0, 1) (loop unrolled into locals for speed)."""
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        out = [0.0] * n
        for i in range(n):
            x = (s1 * 5) & _MASK64
            out[i] = (((((x << 7 | x >> 57) & _MASK64) * 9 & _MASK64) >> 11)) * _INV53
            t = (s1 << 17) & _MASK64
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = (s3 << 45 | s3 >> 19) & _MASK64
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return out

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def choice_index(self, n: int) -> int:
        """Uniform index in [0, n)."""
        i = int(self.uniform() * n)
        return n - 1 if i >= n else i

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two uniforms, discards the sine variate."""
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.choice_index(i + 1)
            items[i], items[j] = items[j], items[i]
