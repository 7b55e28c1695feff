"""Independent reference computations used only by the test-suite."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath as mp


@lru_cache(maxsize=None)
def _rho_series(k: int, dps: int = 160, terms: int | None = None):
    """Taylor coefficients of rho about k + 1/2 on [k, k+1], in mpmath.

    (c + w) f_k'(w) = -f_{k-1}(w) with c = k + 1/2 and f_{k-1}(w) = rho(c - 1 + w);
    the constant term is fixed by continuity at w = -1/2.
    """
    if terms is None:
        # singularity at u = 0 is k + 1/2 away; |w| <= 1/2
        terms = int(130 * 2.303 / mp.log(2 * k + 1)) + 10
    if dps != mp.mp.dps:
        with mp.workdps(dps):
            return _rho_series(k, dps, terms)
    c = mp.mpf(k) + mp.mpf(1) / 2
    if k == 1:
        # 1 - log(c + w) = 1 - log c - sum (-1)^{i+1} (w/c)^i / i
        a = [1 - mp.log(c)] + [-((-1) ** (i + 1)) / (i * c**i) for i in range(1, terms)]
        return tuple(a)
    b = _rho_series(k - 1, dps)
    terms = max(terms, len(b))
    b = b + (mp.mpf(0),) * (terms - len(b))
    a = [mp.mpf(0)] * terms
    for i in range(terms - 1):
        a[i + 1] = -(b[i] + i * a[i]) / (c * (i + 1))
    prev_right = sum(bi * (mp.mpf(1) / 2) ** i for i, bi in enumerate(b))
    a[0] = prev_right - sum(a[i] * (-mp.mpf(1) / 2) ** i for i in range(1, terms))
    return tuple(a)


def rho_mp(u, dps: int = 160) -> mp.mpf:
    with mp.workdps(dps):
        return +_rho_mp(mp.mpf(u), dps)


def _rho_mp(u, dps):
    if u < 0:
        return mp.mpf(0)
    if u <= 1:
        return mp.mpf(1)
    k = int(mp.floor(u))
    a = _rho_series(k, dps)
    w = u - k - mp.mpf(1) / 2
    return sum(ai * w**i for i, ai in enumerate(a))


def brute_records(limit: int) -> list[dict]:
    """Per-n quantities by naive trial division, n = 1..limit."""
    out = []
    for n in range(1, limit + 1):
        m, fs, d = n, [], 2
        while d * d <= m:
            a = 0
            while m % d == 0:
                m //= d
                a += 1
            if a:
                fs.append((d, a))
            d += 1
        if m > 1:
            fs.append((m, 1))
        out.append(dict(
            n=n,
            P=fs[-1][0] if fs else 1,
            beta=sum(p for p, _ in fs),
            B=sum(a * p for p, a in fs),
            B1=sum(p**a for p, a in fs),
            omega=len(fs),
            Omega=sum(a for _, a in fs),
        ))
    return out


def frac_sum(terms) -> Fraction:
    return sum((Fraction(t) for t in terms), Fraction(0))
