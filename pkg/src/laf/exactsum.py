"""Order- and chunking-independent summation of float64 arrays.

Each double is split as m * 2**(e - 53) with an integer 53-bit mantissa m.
Mantissas are cut into two 26/27-bit halves and binned by exponent with
``np.bincount``; every bin total stays below 2**53 for chunks of up to
2**26 terms, so the float64 bin sums are exact.  The bins are then folded
into a single Python integer scaled by 2**_BIAS.  The stored value is the
exact rational sum of all terms ever added, so the result does not depend
on how the stream was segmented.  ``value`` rounds once, correctly.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

_BIAS = 1130  # frexp exponent of the smallest subnormal is -1073
_CHUNK = 1 << 26
_LOW = (1 << 26) - 1


class ExactSum:
    __slots__ = ("_acc",)

    def __init__(self) -> None:
        self._acc = 0  # integer multiple of 2**-_BIAS

    def add(self, terms) -> "ExactSum":
        a = np.asarray(terms, dtype=np.float64).ravel()
        if a.size == 0:
            return self
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite term in ExactSum")
        for start in range(0, a.size, _CHUNK):
            self._add_chunk(a[start : start + _CHUNK])
        return self

    def _add_chunk(self, a: np.ndarray) -> None:
        m, e = np.frexp(a)
        mi = np.ldexp(m, 53).astype(np.int64)  # |mi| < 2**53, exact
        shift = e.astype(np.int64) - 53 + _BIAS
        base = int(shift.min())
        idx = shift - base
        hi = mi >> 26  # arithmetic shift keeps the sign
        lo = mi & _LOW
        nb = int(idx.max()) + 1
        hs = np.bincount(idx, weights=hi.astype(np.float64), minlength=nb)
        ls = np.bincount(idx, weights=lo.astype(np.float64), minlength=nb)
        acc = 0
        for k in np.flatnonzero((hs != 0) | (ls != 0)).tolist():
            acc += ((int(hs[k]) << 26) + int(ls[k])) << k
        self._acc += acc << base

    def add_scalar(self, x: float) -> "ExactSum":
        return self.add(np.array([x]))

    def __iadd__(self, other):
        if isinstance(other, ExactSum):
            self._acc += other._acc
            return self
        return self.add(other)

    def copy(self) -> "ExactSum":
        c = ExactSum()
        c._acc = self._acc
        return c

    @property
    def fraction(self) -> Fraction:
        return Fraction(self._acc, 1 << _BIAS)

    @property
    def value(self) -> float:
        # int / int true division is correctly rounded
        return self._acc / (1 << _BIAS)

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"ExactSum({self.value!r})"
