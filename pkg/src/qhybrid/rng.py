"""Deterministic pseudo-randomness: xoshiro256++ seeded via splitmix64.

The generator is pinned to this exact algorithm so that runs reproduce
bit-for-bit across machines and across implementations. Floats are derived
as ``(next_u64 >> 11) * 2**-53``, giving uniform doubles in [0, 1).

Bulk generation goes through a numba-compiled kernel when numba is
importable; otherwise a pure-Python loop produces the identical sequence.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

_MASK64 = (1 << 64) - 1
_FLOAT_SCALE = 2.0**-53


def _splitmix64(z: int) -> tuple[int, int]:
    """One splitmix64 step: returns (advanced state, output word)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    w = z
    w = ((w ^ (w >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    w = ((w ^ (w >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z, w ^ (w >> 31)


def _seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit root seed into the four xoshiro256++ state words."""
    z = seed & _MASK64
    words = []
    for _ in range(4):
        z, w = _splitmix64(z)
        words.append(w)
    return np.array(words, dtype=np.uint64)


def _fill_uniform_py(state: np.ndarray, out: np.ndarray) -> None:
    """Reference generator loop; bitwise-identical to the numba kernel."""
    s0, s1, s2, s3 = (int(w) for w in state)
    n = out.shape[0]
    for i in range(n):
        tmp = (s0 + s3) & _MASK64
        result = ((((tmp << 23) | (tmp >> 41)) & _MASK64) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        out[i] = (result >> 11) * _FLOAT_SCALE
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3


if _HAVE_NUMBA:

    @njit(cache=True)
    def _fill_uniform_nb(state, out):  # pragma: no cover - exercised via Rng
        s0 = state[0]
        s1 = state[1]
        s2 = state[2]
        s3 = state[3]
        for i in range(out.shape[0]):
            tmp = s0 + s3
            result = ((tmp << np.uint64(23)) | (tmp >> np.uint64(41))) + s0
            t = s1 << np.uint64(17)
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
            out[i] = np.float64(result >> np.uint64(11)) * 1.1102230246251565e-16
        state[0] = s0
        state[1] = s1
        state[2] = s2
        state[3] = s3

    _fill_uniform = _fill_uniform_nb
else:
    _fill_uniform = _fill_uniform_py


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class Rng:
    """A single xoshiro256++ stream.

    Single-owner mutable: one consumer draws from one stream. Independent
    streams for other consumers (threads, per-sample sampling) come from
    :meth:`split`, which derives a child purely from (state, label) without
    advancing this stream.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = _seed_state(int(seed))

    @classmethod
    def _from_state(cls, state: np.ndarray) -> "Rng":
        rng = cls.__new__(cls)
        rng._state = state
        return rng

    def next_u64(self) -> int:
        """Draw one raw 64-bit word, advancing the stream by one step."""
        s0, s1, s2, s3 = (int(w) for w in self._state)
        tmp = (s0 + s3) & _MASK64
        result = ((((tmp << 23) | (tmp >> 41)) & _MASK64) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK64
        self._state[:] = (s0, s1, s2, s3)
        return result

    def uniform(self, n: int) -> np.ndarray:
        """n float64 values in [0, 1); advances the stream by exactly n draws."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        out = np.empty(n, dtype=np.float64)
        if n:
            _fill_uniform(self._state, out)
        return out

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n int64 values uniform over [0, bound), derived from uniform draws."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return np.minimum((self.uniform(n) * bound).astype(np.int64), bound - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n), consuming n-1 draws."""
        perm = np.arange(n, dtype=np.int64)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            if j > i:
                j = i
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def split(self, label: str) -> "Rng":
        """Derive an independent child stream from (state, label).

        Pure: the parent stream is not advanced, so the same (state, label)
        always yields the same child regardless of call order. Use distinct
        labels for distinct children.
        """
        digest = bytearray()
        for w in self._state:
            digest += int(w).to_bytes(8, "little")
        digest += label.encode("utf-8")
        return Rng(_fnv1a64(bytes(digest)))

    def __repr__(self) -> str:
        return f"Rng(state={[hex(int(w)) for w in self._state]})"
