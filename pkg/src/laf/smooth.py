"""Counting y-smooth integers: exact counts and the rho-based approximations."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .dickman import default_table
from .exactsum import ExactSum
from .primes import base_primes
from .sieve import DEFAULT_SEGMENT_SIZE, GLOBAL_LIMIT, iter_segments

HILDEBRAND_EPS = 0.01
DEFAULT_MEMO_BUDGET = 10**7


class MemoBudgetExceeded(RuntimeError):
    """psi_recurrence ran out of memo entries (distinct from bad input)."""


@dataclass(frozen=True)
class SmoothQuery:
    x: float
    y: float

    def __post_init__(self):
        if not (self.x >= 1 and self.y >= 1):
            raise ValueError(f"SmoothQuery needs x, y >= 1, got ({self.x}, {self.y})")

    @property
    def u(self) -> float:
        if self.y == 1:
            return math.inf
        return math.log(self.x) / math.log(self.y)


@dataclass(frozen=True)
class Approx:
    value: float
    in_range: bool


@dataclass
class PsiResult:
    query: SmoothQuery
    exact: int | None = None
    hildebrand: float | None = None
    saias: float | None = None
    hildebrand_in_range: bool | None = None
    relative_gaps: dict[str, float] = field(default_factory=dict)


def psi_exact_sieve(x: int, y: int, segment_size: int = DEFAULT_SEGMENT_SIZE, cache=None) -> int:
    """#{n <= x : P(n) <= y} from sieved largest prime factors."""
    x, y = int(x), int(y)
    if x < 1:
        raise ValueError("psi_exact_sieve needs x >= 1")
    if x > GLOBAL_LIMIT:
        raise ValueError(f"x = {x} above sieve limit {GLOBAL_LIMIT}")
    if y >= x:
        return x
    return sum(int(np.count_nonzero(seg.P <= y)) for seg in iter_segments(x, segment_size, cache=cache))


def psi_exact_grid(xs, ys, segment_size: int = DEFAULT_SEGMENT_SIZE, cache=None) -> dict[tuple[int, int], int]:
    """Exact psi for every (x, y) in xs x ys from a single sieve pass."""
    xs = sorted({int(x) for x in xs})
    ys = sorted({int(y) for y in ys})
    yarr = np.array(ys, dtype=np.int64)
    counts = np.zeros(len(ys), dtype=np.int64)
    out = {}
    pending = list(xs)

    def add(P):
        counts[:] += np.searchsorted(np.sort(P), yarr, side="right")

    for seg in iter_segments(xs[-1], segment_size, cache=cache):
        start = seg.lo
        while pending and pending[0] < seg.hi:
            x = pending.pop(0)
            add(seg.P[start - seg.lo : x + 1 - seg.lo])
            start = x + 1
            out.update({(x, y): c for y, c in zip(ys, counts.tolist())})
        add(seg.P[start - seg.lo :])
    return out


def psi_recurrence(x, y, budget: int = DEFAULT_MEMO_BUDGET) -> int:
    """Exact psi(x, y) by splitting on the largest prime factor.

    psi(x, p_k) = psi(x, p_{k-1}) + psi(x/p_k, p_k), unrolled as
    psi(x, y) = 1 + sum_{p <= y} psi(x/p, p).  Once p^2 > x the term is
    just floor(x/p), so those are summed in bulk.  Memo keys are
    (floor(x), prime index).
    """
    if not x >= 1:
        raise ValueError(f"psi_recurrence needs x >= 1, got {x}")
    x = int(math.floor(x))
    y = int(math.floor(y))
    if y >= x:
        return x
    if y < 2:
        return 1
    primes = base_primes(y)
    memo: dict[tuple[int, int], int] = {}

    def psi(m: int, k: int) -> int:
        # integers <= m whose prime factors all lie in primes[:k]
        if k == 0 or m < 2:
            return 1 if m >= 1 else 0
        if primes[k - 1] >= m:
            return m
        key = (m, k)
        hit = memo.get(key)
        if hit is not None:
            return hit
        j = min(int(np.searchsorted(primes, math.isqrt(m), side="right")), k)
        total = 1 + int((m // primes[j:k]).sum())
        for i in range(j):
            total += psi(m // int(primes[i]), i + 1)
        if len(memo) >= budget:
            raise MemoBudgetExceeded(f"psi_recurrence({x}, {y}) exceeded {budget} memo entries")
        memo[key] = total
        return total

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10_000))
    try:
        return psi(x, len(primes))
    finally:
        sys.setrecursionlimit(old)


def hildebrand_range_ok(q: SmoothQuery, eps: float = HILDEBRAND_EPS) -> bool:
    """exp((log log x)^{5/3 + eps}) <= y <= x."""
    if q.x <= math.e or q.y > q.x:
        return False
    return math.log(q.y) >= math.log(math.log(q.x)) ** (5 / 3 + eps)


def psi_hildebrand(q: SmoothQuery) -> Approx:
    """x rho(u); queries outside the asymptotic range are answered but flagged."""
    return Approx(q.x * default_table()(q.u) if math.isfinite(q.u) else 0.0, hildebrand_range_ok(q))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def lambda_saias(q: SmoothQuery) -> float:
    """Lambda(x, y) = x int_{1-0}^inf rho((log x - log t)/log y) d([t]/t).

    d([t]/t) = d[t]/t - [t]/t^2 dt, so Lambda/x is a sum of jumps
    rho(.)/n over n <= x (n = 1 included) minus int_1^x rho(.) [t]/t^2 dt.
    Integer x is taken as x + 0.
    """
    if q.y < 2:
        raise ValueError("lambda_saias needs y >= 2")
    x = float(q.x)
    lx, ly = math.log(x), math.log(q.y)
    tab = default_table()
    N = int(math.floor(x))

    n = np.arange(N, 0, -1, dtype=np.float64)  # descending: small terms first
    jumps = ExactSum().add(tab((lx - np.log(n)) / ly) / n)

    # panel edges: integers, x itself, and the kinks of rho at integer u
    kinks = [x / q.y**j for j in range(1, int(lx / ly) + 2)]
    edges = np.union1d(np.arange(1, N + 1, dtype=np.float64), [t for t in kinks if 1 < t < x] + [x])
    a, b = edges[:-1], edges[1:]
    fl = np.floor(a)
    flat = a >= x / q.y  # rho(.) = 1 there: int [t]/t^2 = [t](1/a - 1/b)
    cont = ExactSum().add(fl[flat] * (1.0 / a[flat] - 1.0 / b[flat]))
    a, b, fl = a[~flat], b[~flat], fl[~flat]
    for s in range(0, a.size, 1 << 18):
        aa, bb, ff = a[s : s + (1 << 18)], b[s : s + (1 << 18)], fl[s : s + (1 << 18)]
        half = 0.5 * (bb - aa)
        t = (aa + bb)[:, None] * 0.5 + half[:, None] * _GL_NODES[None, :]
        f = tab((lx - np.log(t)) / ly) * ff[:, None] / (t * t)
        cont.add((f * _GL_WEIGHTS[None, :]).sum(axis=1) * half)
    return x * (jumps.value - cont.value)


def evaluate(q: SmoothQuery, exact: int | None = None, saias: bool = True) -> PsiResult:
    res = PsiResult(q, exact=exact)
    h = psi_hildebrand(q)
    res.hildebrand, res.hildebrand_in_range = h.value, h.in_range
    if saias and q.y >= 2:
        res.saias = lambda_saias(q)
    if exact:
        res.relative_gaps["hildebrand"] = res.hildebrand / exact - 1
        if res.saias is not None:
            res.relative_gaps["saias"] = res.saias / exact - 1
    return res


def smooth_grid(xs, ys, saias_max_u: float = 3.0, segment_size: int = DEFAULT_SEGMENT_SIZE, cache=None) -> list[PsiResult]:
    """Evaluate exact, Hildebrand and Lambda on the grid (Lambda only for u <= saias_max_u)."""
    exact = psi_exact_grid(xs, ys, segment_size, cache)
    rows = []
    for (x, y), c in sorted(exact.items()):
        q = SmoothQuery(x, y)
        rows.append(evaluate(q, c, saias=q.y >= 2 and q.u <= saias_max_u))
    return rows


GRID_HEADER = ["x", "y", "u", "psi_exact", "hildebrand", "saias", "gap_h", "gap_s"]


def grid_rows(results: list[PsiResult]) -> list[list]:
    out = []
    for r in results:
        out.append([
            int(r.query.x), int(r.query.y), r.query.u, r.exact, r.hildebrand,
            "" if r.saias is None else r.saias,
            r.relative_gaps.get("hildebrand", ""), r.relative_gaps.get("saias", ""),
        ])
    return out
