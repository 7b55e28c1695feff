"""Dickman-de Bruijn rho and the integrals built on it.

rho is represented piecewise by degree-40 Chebyshev series, one per unit
interval [k, k+1] (rho is analytic inside each).  Rather than integrating
u rho'(u) = -rho(u - 1) forward, which subtracts nearly equal numbers once
rho(k+1) << rho(k), each piece is built from the equivalent identity
u rho(u) = int_{u-1}^u rho(t) dt, whose terms are all positive.  A tabulated
grid (``DickmanTable.values``) is produced from the pieces for export.
"""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate
from scipy.special import bernoulli

from .exactsum import ExactSum
from .primes import primes_up_to

EULER_GAMMA = 0.57721566490153286060651209
ZETA2 = math.pi**2 / 6

GRID_STEP = 2.0**-10
CHEB_DEGREE = 40
# below this rho underflows double precision
_RHO_FLOOR = 1e-300


class DickmanTable:
    """rho on [0, u_max], extended on demand.  Safe for concurrent reads."""

    def __init__(self, u_max: float = 64.0, grid_step: float = GRID_STEP, degree: int = CHEB_DEGREE):
        self.grid_step = grid_step
        self.degree = degree
        self._lock = threading.Lock()
        self._pieces: list[Chebyshev | None] = [None]  # index k covers [k, k+1]
        self._left: list[float] = [1.0]  # rho(k)
        self._zero_from = math.inf
        self._pieces.append(
            Chebyshev.interpolate(lambda u: 1.0 - np.log(u), degree, domain=[1, 2])
        )
        self._left.append(1.0)
        self._extend(int(math.ceil(u_max)))
        self.u_max = float(u_max)

    def _extend(self, k_max: int) -> None:
        with self._lock:
            while len(self._pieces) <= k_max and math.isinf(self._zero_from):
                k = len(self._pieces)
                prev = self._pieces[k - 1]
                if float(prev(k)) < _RHO_FLOOR:
                    self._zero_from = float(k)
                    break
                self._pieces.append(self._next_piece(prev, k))
                self._left.append(float(prev(k)))

    def _next_piece(self, prev: Chebyshev, k: int) -> Chebyshev:
        # u rho(u) = int_{u-1}^u rho; write it as G(u) + F(u) with
        # G(u) = int_{u-1}^k rho (known) and F(u) = int_k^u rho.  Then
        # (F/u)' = G/u^2, so rho(u) = G(u)/u + int_k^u G(t)/t^2 dt.  Every
        # term is positive, which keeps relative accuracy as rho decays.
        tail = prev.integ(lbnd=k)  # int_k^s rho, s in [k-1, k]

        def G(u):
            return -tail(u - 1)

        H = Chebyshev.interpolate(lambda t: G(t) / (t * t), self.degree, domain=[k, k + 1]).integ(lbnd=k)
        return Chebyshev.interpolate(lambda u: G(u) / u + H(u), self.degree, domain=[k, k + 1])

    @property
    def values(self) -> np.ndarray:
        u = np.arange(0, int(round(self.u_max / self.grid_step)) + 1) * self.grid_step
        return self(u)

    def __call__(self, u):
        scalar = np.ndim(u) == 0
        u = np.asarray(u, dtype=np.float64)
        if np.isnan(u).any():
            raise ValueError("rho of NaN")
        out = np.where(u < 0, 0.0, 1.0)
        hi = u > 1
        if hi.any():
            top = float(u[hi].max())
            if top >= len(self._pieces):
                self._extend(int(top) + 1)
            ks = np.floor(u[hi]).astype(np.int64)
            vals = np.zeros(ks.shape)
            for k in np.unique(ks).tolist():
                m = ks == k
                if k < len(self._pieces):
                    vals[m] = self._pieces[k](u[hi][m])
            out[hi] = vals
        return float(out) if scalar else out

    def to_csv(self, path) -> None:
        u = np.arange(len(self.values)) * self.grid_step
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "rho"])
            for a, b in zip(u.tolist(), self.values.tolist()):
                w.writerow([repr(a), repr(b)])

    @staticmethod
    def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        arr = np.array(rows, dtype=np.float64)
        return arr[:, 0], arr[:, 1]


_default: DickmanTable | None = None
_default_lock = threading.Lock()


def default_table() -> DickmanTable:
    global _default
    with _default_lock:
        if _default is None:
            _default = DickmanTable()
        return _default


def rho(u):
    """Dickman-de Bruijn rho(u), scalar or array."""
    if np.ndim(u) == 0 and math.isnan(u):
        raise ValueError("rho of NaN")
    return default_table()(u)


def rho_asymptotic(u: float) -> float:
    """exp{-u(log u + log log u - 1 + (log log u - 1)/log u)}."""
    if u <= math.e:
        raise ValueError(f"rho_asymptotic needs u > e, got {u}")
    l1 = math.log(u)
    l2 = math.log(l1)
    return math.exp(-u * (l1 + l2 - 1 + (l2 - 1) / l1))


@dataclass(frozen=True)
class DeltaEval:
    x: float
    value: float
    quadrature_error_estimate: float


def _u_panels(u_lo: float, u_hi: float) -> list[tuple[float, float]]:
    cuts = [u_lo] + [float(k) for k in range(int(math.floor(u_lo)) + 1, int(math.ceil(u_hi)))] + [u_hi]
    return [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a]


def _integrate_u(f, u_lo: float, u_hi: float) -> tuple[float, float]:
    total = ExactSum()
    err = 0.0
    for a, b in _u_panels(u_lo, u_hi):
        v, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total.add_scalar(v)
        err += e
    return total.value, err


def delta(x: float) -> DeltaEval:
    """delta(x) = int_2^x rho(log x / log t) dt / t^2.

    Evaluated as log x * int_1^{log x/log 2} rho(u) x^{-1/u} u^{-2} du, one
    adaptive panel per unit interval in u.
    """
    x = float(x)
    if not x >= 2:
        raise ValueError(f"delta needs x >= 2, got {x}")
    if x == 2:
        return DeltaEval(x, 0.0, 0.0)
    L = math.log(x)
    tab = default_table()
    val, err = _integrate_u(lambda u: tab(u) * math.exp(-L / u) * L / (u * u), 1.0, L / math.log(2))
    return DeltaEval(x, val, err)


def _log2(x: float) -> float:
    return math.log(math.log(x))


def _log3(x: float) -> float:
    return math.log(math.log(math.log(x)))


def g_r(x: float, r: float) -> float:
    if r <= -1:
        raise ValueError(f"g_r needs r > -1, got {r}")
    if not x > math.e**math.e:
        raise ValueError(f"g_r needs x > e^e, got {x}")
    l2, l3 = _log2(x), _log3(x)
    lr = math.log1p(r)
    first = (l3 + lr - 2 - math.log(2)) / (2 * l2) * (1 + 2 / l2)
    second = (l3 + lr - math.log(2)) ** 2 / (8 * l2 * l2)
    return first - second


def L(c: float, x: float) -> float:
    """exp{(1/2 log x log log x)^{1/2} (1 + c log3 x / log2 x)}."""
    if not x > math.e:
        raise ValueError(f"L needs x > e, got {x}")
    lx, l2, l3 = math.log(x), _log2(x), _log3(x)
    return math.exp(math.sqrt(0.5 * lx * l2) * (1 + c * l3 / l2))


def saias_constant(v_max: int = 40, tol: float = 1e-8) -> float:
    """C = int_0^inf rho(v)/(v + 2) dv.

    u rho(u) is non-increasing, so rho(v) <= V rho(V) / v for v >= V and the
    tail past V is at most rho(V) * (V/2) log(1 + 2/V) <= rho(V).
    """
    if v_max < 30:
        raise ValueError("saias_constant needs v_max >= 30")
    tab = default_table()
    body, err = _integrate_u(lambda v: tab(v) / (v + 2), 1.0, float(v_max))
    tail = tab(float(v_max)) * (v_max / 2) * math.log1p(2 / v_max)
    if tail + err > tol:
        raise ArithmeticError(f"saias_constant error budget {tail + err:.3g} exceeds {tol:.3g}")
    c = math.log(1.5) + body
    if not c < 1:
        raise ArithmeticError(f"saias_constant = {c} is not < 1")
    return c


# --- zeta(s) and the coefficients A_j -----------------------------------------

_EM_CUTOFF = 10_000
_EM_TERMS = 10


@lru_cache(maxsize=1)
def _bernoulli_even() -> list[float]:
    b = bernoulli(2 * _EM_TERMS)
    return [float(b[2 * k]) / math.factorial(2 * k) for k in range(1, _EM_TERMS + 1)]


def zeta(s: float, cutoff: int = _EM_CUTOFF) -> float:
    """Riemann zeta for real s > 1 by Euler-Maclaurin summation."""
    if s <= 1:
        raise ValueError("zeta implemented for s > 1 only")
    N = cutoff
    head = math.fsum(n ** (-s) for n in range(1, N))
    tail = [N ** (1 - s) / (s - 1), 0.5 * N ** (-s)]
    poch = s  # s (s+1) ... (s+2k-2)
    for k, bk in enumerate(_bernoulli_even(), start=1):
        tail.append(bk * poch * N ** (-s - 2 * k + 1))
        poch *= (s + 2 * k - 1) * (s + 2 * k)
    return head + math.fsum(tail)


@lru_cache(maxsize=None)
def central_weights(order: int, half_width: int) -> tuple[float, ...]:
    """Exact central finite-difference weights for the ``order``-th derivative."""
    pts = range(-half_width, half_width + 1)
    n = len(pts)
    # solve sum_i w_i i^m = order! [m == order] for m < n, in rationals
    A = [[Fraction(i) ** m for i in pts] + [Fraction(math.factorial(order) if m == order else 0)] for m in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        A[c] = [v / A[c][c] for v in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
    return tuple(float(A[r][n]) for r in range(n))


def _zeta_over_s(s: float) -> float:
    return zeta(s) / s


def zeta_coefficient_fd(j: int, step: float = 0.02, half_width: int = 8) -> float:
    """A_j = (-1)^{j-1} d^{j-1}/ds^{j-1} (zeta(s)/s) at s = 2, by central differences."""
    m = j - 1
    if m == 0:
        return _zeta_over_s(2.0)
    w = central_weights(m, half_width)
    vals = [_zeta_over_s(2.0 + i * step) for i in range(-half_width, half_width + 1)]
    d = math.fsum(wi * vi for wi, vi in zip(w, vals)) / step**m
    return (-1) ** m * d


def zeta_coefficients(M: int) -> list[float]:
    """[A_1, ..., A_M]; A_1 = pi^2/12 in closed form."""
    if not 1 <= M <= 5:
        raise ValueError(f"zeta_coefficients supports 1 <= M <= 5, got {M}")
    return [math.pi**2 / 12] + [zeta_coefficient_fd(j) for j in range(2, M + 1)]


# --- prime reciprocal constants -------------------------------------------------


@dataclass(frozen=True)
class PrimeConstants:
    limit: int
    prime_sum_p2p: float
    p2p_tail_bound: float
    mertens_fits: dict[int, float] = field(default_factory=dict)


def prime_reciprocal_constants(limit: int, fit_points=None) -> PrimeConstants:
    """sum_p 1/(p^2 - p) up to ``limit`` and sum_{p<=x} 1/p - log log x fits.

    The truncation error of the first sum is below sum_{n>limit} 1/(n^2 - n) = 1/limit.
    """
    if limit < 1000:
        raise ValueError("prime_reciprocal_constants needs limit >= 1000")
    if fit_points is None:
        fit_points = [10**e for e in range(3, int(math.log10(limit)) + 1)]
    fit_points = sorted(int(x) for x in fit_points if x <= limit)
    p = primes_up_to(limit).astype(np.float64)
    s = ExactSum().add(1.0 / (p * p - p)).value
    fits = {}
    for x in fit_points:
        q = p[: np.searchsorted(p, x, side="right")]
        fits[x] = ExactSum().add(1.0 / q).value - math.log(math.log(x))
    return PrimeConstants(limit, s, 1.0 / limit, fits)


@dataclass(frozen=True)
class Constants:
    euler_gamma: float
    zeta2: float
    A_coeffs: list[float]
    prime_sum_p2p: float
    saias_C: float


@lru_cache(maxsize=4)
def constants(M: int = 5, prime_limit: int = 10**7) -> Constants:
    return Constants(
        euler_gamma=EULER_GAMMA,
        zeta2=ZETA2,
        A_coeffs=zeta_coefficients(M),
        prime_sum_p2p=prime_reciprocal_constants(prime_limit).prime_sum_p2p,
        saias_C=saias_constant(),
    )


def export_table(path: str | Path, u_max: float = 64.0) -> None:
    DickmanTable(u_max).to_csv(path)
