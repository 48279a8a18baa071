"""Portable pseudo-random number generation.

Reproducibility across platforms and library versions is a hard requirement:
synthetic pools and candidate samples must be bit-identical for a given seed
on any machine.  numpy's Generator does not promise stream stability across
releases, so this module pins the exact algorithms:

* splitmix64 for seed expansion (Steele, Lea, Flood's mixer),
* xoshiro256** (Blackman & Vigna) for the sequential stream,
* Lemire's multiply-shift rejection method for bounded integers,
* Box-Muller for gaussians.

Two execution modes share those definitions.  The scalar `Xoshiro256StarStar`
class is the reference stream, used wherever draws are consumed one at a time
(candidate sampling, shuffles).  The `bulk_*` functions run LANES independent
xoshiro streams side by side in uint64 numpy arrays for array-sized output;
their interleaving is fixed (see `bulk_u64`) and is part of the format, not an
implementation detail.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: Number of parallel streams used by the bulk generators.  Changing this
#: changes every bulk stream, so it is frozen.
BULK_LANES = 1024


def _mix64(z: int) -> int:
    """splitmix64 finalizer: bijective avalanche mix of a 64-bit word."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Minimal splitmix64 stream, used only to expand seeds into state."""

    def __init__(self, seed: int):
        self._x = seed & _MASK64

    def next_u64(self) -> int:
        self._x = (self._x + _GOLDEN) & _MASK64
        return _mix64(self._x)


def derive_seed(seed: int, *path: int) -> int:
    """Derive an independent sub-stream seed from a root seed and index path.

    Each component of `path` is folded into the running state through the
    splitmix64 mixer, so (seed, 1) and (seed, 2) give unrelated streams and
    nested derivations like (seed, 4, model_index) stay collision-resistant.
    """
    x = seed & _MASK64
    for p in path:
        x = _mix64((x + _GOLDEN) & _MASK64)
        x = _mix64(x ^ (p & _MASK64))
    return x


class Xoshiro256StarStar:
    """Sequential xoshiro256** stream seeded through splitmix64.

    State is four 64-bit words produced by consecutive splitmix64 outputs of
    the seed.  `next_u64` is the canonical generator; everything else is a
    fixed derivation from it.
    """

    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self._s = [sm.next_u64() for _ in range(4)]

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (((s1 * 5) & _MASK64) << 7 | ((s1 * 5) & _MASK64) >> 57) & _MASK64
        result = (result * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._s = [s0, s1, s2, s3]
        return result

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n) via Lemire multiply-shift."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        x = self.next_u64()
        m = x * n
        low = m & _MASK64
        if low < n:
            # Rejection zone removes the modulo bias; threshold is 2^64 mod n.
            threshold = (-n) % (1 << 64)
            while low < threshold:
                x = self.next_u64()
                m = x * n
                low = m & _MASK64
        return m >> 64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, forward variant.

        Iteration i swaps position i with a uniform position in [i, n), which
        makes a truncated run of the same loop a uniform partial sample.
        """
        n = len(items)
        for i in range(n - 1):
            j = i + self.next_below(n - i)
            items[i], items[j] = items[j], items[i]

    def sample_without_replacement(
        self, n: int, m: int, exclude: tuple[int, ...] | list[int] = ()
    ) -> list[int]:
        """Draw m distinct values from [0, n) minus `exclude`, in shuffle order.

        Runs a partial Fisher-Yates over the virtual ascending array of
        admissible values, materializing only the touched slots, so sampling
        a handful of candidates from a pool of millions costs O(m + |exclude|).
        """
        excl = sorted(set(exclude))
        for e in excl:
            if not 0 <= e < n:
                raise ValueError(f"excluded value {e} outside [0, {n})")
        avail = n - len(excl)
        if m > avail:
            raise ValueError(f"cannot draw {m} from {avail} admissible values")
        touched: dict[int, int] = {}
        out = []
        for i in range(m):
            j = i + self.next_below(avail - i)
            value = touched.get(j, j)
            touched[j] = touched.get(i, i)
            out.append(_insert_gaps(value, excl))
        return out


def _insert_gaps(index: int, sorted_excluded: list[int]) -> int:
    """Map a rank in the admissible set to its value in [0, n)."""
    for e in sorted_excluded:
        if index >= e:
            index += 1
        else:
            break
    return index


# ---------------------------------------------------------------------------
# Bulk (vectorized) generation
# ---------------------------------------------------------------------------


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer (uint64 arrays, modular arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _bulk_state(seed: int) -> np.ndarray:
    """Initial (4, LANES) uint64 state: lane L takes splitmix words 4L..4L+3.

    The splitmix64 stream at position i is mix(seed + (i+1)*GOLDEN), which
    lets the whole expansion run as one vectorized pass.  Lane 0 therefore
    holds the exact state of `Xoshiro256StarStar(seed)`.
    """
    steps = np.arange(1, 4 * BULK_LANES + 1, dtype=np.uint64)
    x = np.uint64(seed & _MASK64) + steps * np.uint64(_GOLDEN)
    return _mix64_array(x).reshape(BULK_LANES, 4).T.copy()


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def bulk_u64(seed: int, count: int) -> np.ndarray:
    """`count` uint64 words from LANES parallel xoshiro256** streams.

    Output order is step-major: the first LANES entries are the first output
    of each lane in lane order, the next LANES the second outputs, and so on.
    Lane L's stream is an ordinary xoshiro256** stream whose state came from
    splitmix64 words 4L..4L+3 of `seed`, so each lane individually matches the
    scalar class seeded with the same words.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    s0, s1, s2, s3 = _bulk_state(seed)
    steps = -(-count // BULK_LANES)
    out = np.empty(steps * BULK_LANES, dtype=np.uint64)
    five = np.uint64(5)
    nine = np.uint64(9)
    for step in range(steps):
        out[step * BULK_LANES : (step + 1) * BULK_LANES] = _rotl(s1 * five, 7) * nine
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    return out[:count]


def bulk_float64(seed: int, count: int) -> np.ndarray:
    """`count` uniform doubles in [0, 1), top-53-bit derivation of bulk_u64."""
    u = bulk_u64(seed, count)
    return (u >> np.uint64(11)).astype(np.float64) * 2.0**-53


def bulk_below(seed: int, count: int, n: int) -> np.ndarray:
    """`count` int64 indices in [0, n) by scaling the uniform doubles.

    floor(u * n) on the 53-bit uniforms; deterministic on any IEEE-754
    platform and with bias below n / 2^53, negligible for index sampling.
    Not the Lemire path: that one's rejection loop does not vectorize cleanly,
    and exactness is not needed here.
    """
    if n <= 0:
        raise ValueError(f"bound must be positive, got {n}")
    idx = np.floor(bulk_float64(seed, count) * n).astype(np.int64)
    return np.minimum(idx, n - 1)


def bulk_gaussian(seed: int, count: int) -> np.ndarray:
    """`count` standard normals via Box-Muller over bulk_float64.

    Consumes 2*ceil(count/2) uniforms u; pair i uses u[2i], u[2i+1]:
        r  = sqrt(-2 ln(1 - u[2i]))        (1 - u keeps the log finite)
        z0 = r cos(2 pi u[2i+1]),  z1 = r sin(2 pi u[2i+1])
    and emits z0, z1 interleaved.
    """
    pairs = -(-count // 2)
    u = bulk_float64(seed, 2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = (2.0 * math.pi) * u[1::2]
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]
