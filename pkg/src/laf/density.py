"""Local densities d_k of B(n) - beta(n).

Write n = q s with q squarefree, s squarefull, (q, s) = 1.  B - beta only
sees s, and squarefree q <= x/s coprime to s have density
(6/pi^2) prod_{p|s} p/(p+1), so

    d_k = (6/pi^2) sum_{s squarefull, B(s)-beta(s)=k} (1/s) prod_{p|s} p/(p+1).

With s = prod p^(m_p + 1) the difference is sum m_p p, so every prime in
such an s is at most k and the sum is finite.  ``density_series`` evaluates
it for all k at once as the coefficients of

    (6/pi^2) prod_{p <= K} (1 + sum_{m >= 1} z^{m p} / ((p + 1) p^m)).

``density_exact`` instead walks an explicit squarefull enumeration up to a
cutoff and bounds what lies beyond it; the two routes are compared in tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .exactsum import ExactSum
from .primes import base_primes
from .sieve import DEFAULT_SEGMENT_SIZE, iter_segments

SIX_OVER_PI2 = 6 / math.pi**2
ENVELOPE = 5.0  # d_k <= 5/k, and the tail-count envelope k * count / x <= 5


@dataclass(frozen=True)
class SquarefullEntry:
    s: int
    diff: int
    coprime_density_factor: float


def _spf(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in base_primes(n).tolist():
        block = spf[p::p]
        block[block == 0] = p
    return spf


def _factor_with(spf: np.ndarray, n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    while n > 1:
        p = int(spf[n])
        out[p] = out.get(p, 0) + 1
        n //= p
    return out


def enumerate_squarefull(limit: int) -> list[SquarefullEntry]:
    """All squarefull s <= limit (s = 1 included), ascending.

    Every squarefull number is a^2 b^3 with b squarefree, uniquely.
    """
    limit = int(limit)
    if limit < 1:
        raise ValueError("enumerate_squarefull needs limit >= 1")
    spf = _spf(max(2, math.isqrt(limit)))
    seen: dict[int, SquarefullEntry] = {}
    b = 1
    while b**3 <= limit:
        fb = _factor_with(spf, b)
        if all(e == 1 for e in fb.values()):
            amax = math.isqrt(limit // b**3)
            for a in range(1, amax + 1):
                f = dict(fb)
                for p in f:
                    f[p] = 3
                for p, e in _factor_with(spf, a).items():
                    f[p] = f.get(p, 0) + 2 * e
                s = a * a * b**3
                if s in seen:
                    continue
                diff = sum((e - 1) * p for p, e in f.items())
                fac = math.prod(p / (p + 1) for p in f)
                seen[s] = SquarefullEntry(s, diff, fac)
        b += 1
    return [seen[s] for s in sorted(seen)]


def _gf(k_max: int, sigma: float = 0.0) -> np.ndarray:
    """Coefficients c_k = sum_{diff(s) = k} w(s) s^(sigma - 1), k <= k_max.

    w(s) = prod_{p|s} p/(p+1).  sigma = 0 gives d_k / (6/pi^2).
    """
    c = np.zeros(k_max + 1)
    c[0] = 1.0
    for p in base_primes(k_max).tolist():
        new = c.copy()
        m = 1
        while m * p <= k_max:
            w = p / (p + 1) * float(p) ** ((m + 1) * (sigma - 1))
            new[m * p :] += w * c[: k_max + 1 - m * p]
            m += 1
        c = new
    return c


def density_series(k_max: int) -> np.ndarray:
    """Exact d_0 .. d_k_max (no truncation; only float rounding)."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    return SIX_OVER_PI2 * _gf(k_max)


def max_squarefull_with_diff(k: int) -> int:
    """Largest squarefull s with B(s) - beta(s) = k (0 if none)."""
    best = [0]

    primes = base_primes(k).tolist()[::-1]

    def walk(i: int, left: int, s: int) -> None:
        if left == 0:
            best[0] = max(best[0], s)
            return
        for j in range(i, len(primes)):
            p = primes[j]
            m = 1
            while m * p <= left:
                walk(j + 1, left - m * p, s * p ** (m + 1))
                m += 1

    if k == 0:
        return 1
    walk(0, k, 1)
    return best[0]


_SIGMAS = (0.25, 0.5, 1.0, 1.5, 2.0)


def _rankin_tail(k: int, limit: int, entries: list[SquarefullEntry]) -> float:
    """Bound on (6/pi^2) sum_{s > limit, diff(s) = k} w(s)/s.

    For any sigma > 0 the terms with s > limit are at most (s/limit)^sigma
    times themselves; the full weighted sum over diff(s) = k is finite and
    comes from the generating function, and the part with s <= limit is
    subtracted back out.
    """
    if k == 0:
        return 0.0
    best = math.inf
    for sig in _SIGMAS:
        full = _gf(k, sig)[k]
        inside = math.fsum(e.coprime_density_factor * e.s ** (sig - 1) for e in entries if e.diff == k)
        slack = 8 * np.finfo(float).eps * full
        bound = (max(full - inside, 0.0) + slack) / float(limit) ** sig
        best = min(best, bound)
    return SIX_OVER_PI2 * best


def default_limit(k: int) -> int:
    return max(10**8, 100 * k * k)


def density_exact(k: int, limit: int | None = None, entries: list[SquarefullEntry] | None = None) -> tuple[float, float]:
    """(truncated d_k over squarefull s <= limit, bound on the omitted part)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    limit = default_limit(k) if limit is None else int(limit)
    if limit < max(4, k * k / 4):
        raise ValueError(f"limit {limit} below max(4, k^2/4) for k = {k}")
    if entries is None:
        entries = enumerate_squarefull(limit)
    val = SIX_OVER_PI2 * math.fsum(e.coprime_density_factor / e.s for e in entries if e.diff == k and e.s <= limit)
    return val, _rankin_tail(k, limit, [e for e in entries if e.s <= limit])


class DiffHistogram:
    """Streaming consumer: counts of B(n) - beta(n) over n = 1..x."""

    def __init__(self) -> None:
        self.counts = np.zeros(1, dtype=np.int64)
        self.n = 0

    def __call__(self, seg) -> None:
        h = np.bincount(seg.diff)
        if h.size > self.counts.size:
            self.counts = np.concatenate([self.counts, np.zeros(h.size - self.counts.size, dtype=np.int64)])
        self.counts[: h.size] += h
        self.n += len(seg)

    def count(self, k: int) -> int:
        return int(self.counts[k]) if k < self.counts.size else 0

    def tail(self, k: int) -> int:
        return int(self.counts[k:].sum()) if k < self.counts.size else 0

    def reciprocal_sum(self, r: float) -> float:
        """sum over non-squarefree n of (B - beta)^(-r), from the histogram."""
        k = np.arange(self.counts.size, dtype=np.float64)
        nz = (k >= 1) & (self.counts > 0)
        return ExactSum().add(self.counts[nz] * k[nz] ** (-r)).value


def diff_histogram(x: int, segment_size: int = DEFAULT_SEGMENT_SIZE, cache=None) -> DiffHistogram:
    h = DiffHistogram()
    for seg in iter_segments(x, segment_size, cache=cache):
        h(seg)
    return h


def density_empirical(k: int, x: int, hist: DiffHistogram | None = None) -> int:
    """#{n <= x : B(n) - beta(n) = k}."""
    hist = hist or diff_histogram(x)
    return hist.count(k)


def tail_count(k: int, x: int, hist: DiffHistogram | None = None) -> int:
    """#{n <= x : B(n) - beta(n) >= k}."""
    if k < 1:
        raise ValueError("tail_count needs k >= 1")
    hist = hist or diff_histogram(x)
    return hist.tail(k)


def reciprocal_sum_nonsquarefree(r: float, x: int, hist: DiffHistogram | None = None) -> float:
    if r <= 0:
        raise ValueError("r must be positive")
    hist = hist or diff_histogram(x)
    return hist.reciprocal_sum(r)


def moment_D_r(r: float, k_max: int) -> tuple[float, float]:
    """(sum_{k <= k_max} d_k / k^r, tail bound 5 * sum_{k > k_max} k^(-1-r))."""
    if r <= 0:
        raise ValueError("r must be positive")
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    d = density_series(k_max)
    k = np.arange(2, k_max + 1, dtype=np.float64)
    return math.fsum(d[2:] / k**r), ENVELOPE * float(hurwitz_zeta(1 + r, k_max + 1))


@dataclass
class ArgmaxResult:
    k: int
    value: float
    runner_up: int
    gap: float
    table: list[tuple[int, float]] = field(default_factory=list)  # sorted by density, descending


def argmax_density(k_max: int) -> ArgmaxResult:
    """The k in [2, k_max] with the largest d_k.

    Values come from the exact finite sums, so the only uncertainty is float
    rounding; the comparison is refused if the gap is not well above it.
    """
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    d = density_series(k_max)
    table = sorted(((k, float(d[k])) for k in range(2, k_max + 1)), key=lambda kv: (-kv[1], kv[0]))
    (k1, v1), (k2, v2) = table[0], table[1]
    if v1 - v2 <= 1e-12 * v1:
        raise ArithmeticError(f"d_{k1} and d_{k2} too close to separate")
    return ArgmaxResult(k1, v1, k2, v1 - v2, table)


@dataclass
class DensityTable:
    k_max: int
    exact: np.ndarray
    exact_tail_bound: np.ndarray
    empirical: dict[int, np.ndarray]
    x_samples: list[int]

    def rows(self, x: int) -> list[list]:
        """k, d_exact, tail_bound, count_at_x, empirical_density, deviation_over_envelope."""
        env = 20 * math.log(x) / math.sqrt(x)
        out = []
        counts = self.empirical[x]
        for k in range(self.k_max + 1):
            c = int(counts[k]) if k < counts.size else 0
            emp = c / x
            out.append([k, float(self.exact[k]), float(self.exact_tail_bound[k]), c, emp, abs(emp - self.exact[k]) / env])
        return out


def build_density_table(k_max: int, hists: dict[int, DiffHistogram], limit: int = 10**8) -> DensityTable:
    limit = max(limit, k_max * k_max // 4 + 1)
    entries = enumerate_squarefull(limit)
    exact = np.zeros(k_max + 1)
    tails = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        exact[k], tails[k] = density_exact(k, limit, entries)
    emp = {x: h.counts[: k_max + 1].copy() for x, h in hists.items()}
    return DensityTable(k_max, exact, tails, emp, sorted(hists))
