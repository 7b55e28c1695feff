"""Small prime tables shared by the sieve and the special-function code."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def primes_up_to(n: int) -> np.ndarray:
    """All primes p <= n as an int64 array (odd-only Eratosthenes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    size = (n - 1) // 2  # index i stands for 2*i + 1
    odd = np.ones(size + 1, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(n) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2 :: p] = False
    out = 2 * np.flatnonzero(odd).astype(np.int64) + 1
    return np.concatenate(([2], out[out <= n])).astype(np.int64)


@lru_cache(maxsize=8)
def _cached(n: int) -> np.ndarray:
    arr = primes_up_to(n)
    arr.setflags(write=False)
    return arr


def base_primes(n: int) -> np.ndarray:
    """Read-only cached primes <= n, rounded up to a power of two to share the cache."""
    size = 1 << max(8, int(n).bit_length())
    arr = _cached(size)
    return arr[: np.searchsorted(arr, n, side="right")]
