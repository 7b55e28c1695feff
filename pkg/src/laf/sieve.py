"""Bulk evaluation of P(n), beta, B, B1, omega, Omega over integer ranges.

A segment [lo, hi) is processed by striding over the multiples of every
prime p <= sqrt(hi - 1) (smallest-prime-first, so each n is fully divided
out), leaving a cofactor that is either 1 or a single prime above the
square root.  The result is stored column-wise in a ``SieveSegment``.

``factorize`` is a plain trial-division routine kept deliberately separate
from the sieve so the two can be checked against each other.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .primes import base_primes

log = logging.getLogger(__name__)

GLOBAL_LIMIT = 1 << 40
DEFAULT_SEGMENT_SIZE = 1 << 20

FIELDS = ("P", "beta", "B", "B1", "omega", "Omega", "squarefull_part")


@dataclass(frozen=True)
class Factorization:
    n: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, a in self.factors:
            if p <= last or a < 1:
                raise ValueError(f"non-canonical factor list {self.factors}")
            prod *= p**a
            last = p
        if prod != self.n:
            raise ValueError(f"factors of {self.n} multiply to {prod}")


@dataclass(frozen=True)
class ArithRecord:
    n: int
    P: int
    beta: int
    B: int
    B1: int
    omega: int
    Omega: int
    is_squarefree: bool
    squarefull_part: int

    @property
    def diff(self) -> int:
        """B(n) - beta(n) = sum of (alpha - 1) p."""
        return self.B - self.beta


def factorize(n: int) -> Factorization:
    """Canonical factorization by trial division."""
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    out = []
    m = n
    d = 2
    while d * d <= m:
        if m % d == 0:
            a = 0
            while m % d == 0:
                m //= d
                a += 1
            out.append((d, a))
        d += 1 if d == 2 else 2
    if m > 1:
        out.append((m, 1))
    return Factorization(n, tuple(out))


def record_of(f: Factorization) -> ArithRecord:
    fs = f.factors
    sqfull = 1
    for p, a in fs:
        if a >= 2:
            sqfull *= p**a
    return ArithRecord(
        n=f.n,
        P=fs[-1][0] if fs else 1,
        beta=sum(p for p, _ in fs),
        B=sum(a * p for p, a in fs),
        B1=sum(p**a for p, a in fs),
        omega=len(fs),
        Omega=sum(a for _, a in fs),
        is_squarefree=all(a == 1 for _, a in fs),
        squarefull_part=sqfull,
    )


@dataclass(frozen=True)
class SieveSegment:
    """Column store for n in [lo, hi); every array has length hi - lo."""

    lo: int
    hi: int
    P: np.ndarray
    beta: np.ndarray
    B: np.ndarray
    B1: np.ndarray
    omega: np.ndarray
    Omega: np.ndarray
    squarefull_part: np.ndarray

    def __len__(self) -> int:
        return self.hi - self.lo

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)

    @property
    def is_squarefree(self) -> np.ndarray:
        return self.omega == self.Omega

    @property
    def diff(self) -> np.ndarray:
        return self.B - self.beta

    def record(self, n: int) -> ArithRecord:
        i = n - self.lo
        if not 0 <= i < len(self):
            raise IndexError(f"{n} outside [{self.lo}, {self.hi})")
        return ArithRecord(
            n=n,
            P=int(self.P[i]),
            beta=int(self.beta[i]),
            B=int(self.B[i]),
            B1=int(self.B1[i]),
            omega=int(self.omega[i]),
            Omega=int(self.Omega[i]),
            is_squarefree=bool(self.omega[i] == self.Omega[i]),
            squarefull_part=int(self.squarefull_part[i]),
        )

    def records(self) -> Iterator[ArithRecord]:
        for n in range(self.lo, self.hi):
            yield self.record(n)

    def slice(self, lo: int, hi: int) -> "SieveSegment":
        """Sub-segment [lo, hi), sharing memory with this one."""
        if not self.lo <= lo <= hi <= self.hi:
            raise ValueError(f"[{lo}, {hi}) not inside [{self.lo}, {self.hi})")
        a, b = lo - self.lo, hi - self.lo
        return SieveSegment(lo, hi, *(getattr(self, f)[a:b] for f in FIELDS))


def _check_range(lo: int, hi: int, limit: int = GLOBAL_LIMIT) -> None:
    if lo < 1 or hi <= lo:
        raise ValueError(f"need 1 <= lo < hi, got [{lo}, {hi})")
    if hi - 1 > limit:
        raise ValueError(f"range end {hi - 1} exceeds global limit {limit}")


def sieve_range(lo: int, hi: int) -> SieveSegment:
    """Compute every ArithRecord field for n in [lo, hi)."""
    lo, hi = int(lo), int(hi)
    _check_range(lo, hi)
    size = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    P = np.ones(size, dtype=np.int64)
    beta = np.zeros(size, dtype=np.int64)
    B = np.zeros(size, dtype=np.int64)
    B1 = np.zeros(size, dtype=np.int64)
    omega = np.zeros(size, dtype=np.int8)
    Omega = np.zeros(size, dtype=np.int8)
    sqfull = np.ones(size, dtype=np.int64)
    expo = np.zeros(size, dtype=np.int8)

    for p in base_primes(math.isqrt(hi - 1)).tolist():
        s = (-lo) % p
        if s >= size:
            continue
        sl = slice(s, None, p)
        expo[sl] = 1
        pk = p * p
        while pk < hi:
            expo[(-lo) % pk :: pk] += 1
            pk *= p
        e = expo[sl].astype(np.int64)
        pe = np.power(p, e)
        P[sl] = p
        beta[sl] += p
        B[sl] += e * p
        B1[sl] += pe
        omega[sl] += 1
        Omega[sl] += e.astype(np.int8)
        rem[sl] //= pe
        sqfull[sl] *= np.where(e >= 2, pe, 1)
        expo[sl] = 0

    big = rem > 1
    q = rem[big]
    P[big] = q
    beta[big] += q
    B[big] += q
    B1[big] += q
    omega[big] += 1
    Omega[big] += 1
    return SieveSegment(lo, hi, P, beta, B, B1, omega, Omega, sqfull)


def segment_bounds(
    limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE, start: int = 1
) -> list[tuple[int, int]]:
    """Half-open segments covering start..limit inclusive."""
    if segment_size < 1:
        raise ValueError("segment_size must be positive")
    out = []
    lo = start
    while lo <= limit:
        hi = min(lo + segment_size, limit + 1)
        out.append((lo, hi))
        lo = hi
    return out


@dataclass(frozen=True)
class StreamSummary:
    limit: int
    records: int
    segments: int
    cache_hits: int = 0
    cache_recovered: int = 0


def iter_segments(
    limit: int,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
    cache=None,
    start: int = 1,
) -> Iterator[SieveSegment]:
    """Yield segments covering start..limit in ascending order.

    With ``threads > 1`` segments are computed by a thread pool with a
    bounded look-ahead window; delivery order is still ascending.
    ``cache`` is an optional ``SegmentCache``.
    """
    limit = int(limit)
    if limit < start:
        raise ValueError(f"limit must be >= {start}, got {limit}")
    _check_range(start, limit + 1)
    bounds = segment_bounds(limit, segment_size, start)

    def build(b):
        if cache is not None:
            return cache.get_or_compute(*b, compute=sieve_range)
        return sieve_range(*b)

    if threads <= 1:
        for b in bounds:
            yield build(b)
        return

    window = 2 * threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending: deque = deque()
        it = iter(bounds)
        try:
            for b in it:
                pending.append(pool.submit(build, b))
                if len(pending) >= window:
                    break
            while pending:
                seg = pending.popleft().result()
                nxt = next(it, None)
                if nxt is not None:
                    pending.append(pool.submit(build, nxt))
                yield seg
        finally:
            for fut in pending:
                fut.cancel()


def stream_records(
    limit: int,
    consumer: Callable[[SieveSegment], object],
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
    cache=None,
) -> StreamSummary:
    """Feed every record for 1 <= n <= limit to ``consumer``, one segment at a time.

    Consumer exceptions propagate after outstanding work is cancelled.
    """
    count = segs = 0
    for seg in iter_segments(limit, segment_size, threads, cache):
        consumer(seg)
        count += len(seg)
        segs += 1
    return StreamSummary(
        limit=int(limit),
        records=count,
        segments=segs,
        cache_hits=getattr(cache, "hits", 0),
        cache_recovered=getattr(cache, "recovered", 0),
    )


def sieve_upto(limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> SieveSegment:
    """Whole range 1..limit as one segment (convenient below ~10^7)."""
    segs = list(iter_segments(limit, segment_size))
    if len(segs) == 1:
        return segs[0]
    cols = [np.concatenate([getattr(s, f) for s in segs]) for f in FIELDS]
    return SieveSegment(1, int(limit) + 1, *cols)


def records_for(ns: Sequence[int]) -> list[ArithRecord]:
    return [record_of(factorize(n)) for n in ns]
