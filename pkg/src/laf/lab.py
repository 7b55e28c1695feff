"""Summatory experiments: exact sums over n <= x and their predicted values.

Everything is gathered by one streaming ``Tally`` pass over 1..x_max that
snapshots its accumulators at each requested checkpoint.  Integer sums are
Python ints; real sums go through ``ExactSum`` and so do not depend on the
segment size.

Conventions: n = 1 has P(1) = 1 and contributes to every sum that divides
by P or raises P to a power; sums dividing by beta, B or B1 start at n = 2.
For residue classes, n = 1 sits in the class of 1 (mod k).  n whose P(n)
shares a factor with k fall in no coprime class and are counted in an
``excluded`` bucket so that class counts add up to floor(x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dickman
from .density import DiffHistogram
from .exactsum import ExactSum
from .sieve import DEFAULT_SEGMENT_SIZE, GLOBAL_LIMIT, SieveSegment, iter_segments

QUOTIENTS = ("P/B1", "beta/B1", "B/B1", "B1/B", "B1/P", "B1/beta")
RATIO_KINDS = ("Omega_minus_omega", "omega", "Omega", "mu_squared")
DEFAULT_MODULI = (1, 3, 4)
DEFAULT_S_POWERS = (0, 1)
DEFAULT_T_POWERS = (-1, 0, 1)
LIST_CUTOFF = 10_000


@dataclass(frozen=True)
class ResidueClass:
    modulus: int
    residue: int

    def __post_init__(self):
        k, l = self.modulus, self.residue
        if k < 1 or not 1 <= l <= k:
            raise ValueError(f"need 1 <= residue <= modulus, got ({l}, {k})")
        if math.gcd(l, k) != 1:
            raise ValueError(f"residue {l} not coprime to modulus {k}")

    @property
    def phi(self) -> int:
        return phi(self.modulus)


def phi(k: int) -> int:
    return sum(1 for l in range(1, k + 1) if math.gcd(l, k) == 1)


def coprime_classes(k: int) -> list[ResidueClass]:
    return [ResidueClass(k, l) for l in range(1, k + 1) if math.gcd(l, k) == 1]


@dataclass
class Stats:
    """Every tallied quantity at one checkpoint x."""

    x: int
    sums: dict[str, int] = field(default_factory=dict)
    reals: dict[str, float] = field(default_factory=dict)
    S: dict[tuple[float, int, int], float] = field(default_factory=dict)
    T: dict[tuple[float, int, int], float] = field(default_factory=dict)
    excluded: dict[int, int] = field(default_factory=dict)
    excluded_T: dict[int, int] = field(default_factory=dict)
    consecutive: dict[str, int] = field(default_factory=dict)
    matches: dict[str, list[tuple[int, int]]] = field(default_factory=dict)
    hist: DiffHistogram | None = None


def _fresh_hist(h: DiffHistogram) -> DiffHistogram:
    c = DiffHistogram()
    c.counts = h.counts.copy()
    c.n = h.n
    return c


class Tally:
    """Streaming consumer accumulating all summatory statistics."""

    def __init__(
        self,
        checkpoints,
        moduli=DEFAULT_MODULI,
        s_powers=DEFAULT_S_POWERS,
        t_powers=DEFAULT_T_POWERS,
        list_cutoff: int = LIST_CUTOFF,
    ):
        self.checkpoints = sorted({int(x) for x in checkpoints})
        self.moduli = tuple(moduli)
        self.s_powers = tuple(s_powers)
        self.t_powers = tuple(t_powers)
        self.list_cutoff = list_cutoff
        self.snapshots: dict[int, Stats] = {}
        self._pending = list(self.checkpoints)

        self.ints = {k: 0 for k in ("beta", "B", "B1", "P", "squarefree", "P2_divides", "P_P2_divides")}
        names = (
            ["recip_P", "recip_beta", "recip_B", "P_pow_omega", "P_pow_Omega", "inv_beta_minus_inv_B", "B_over_beta_minus_1"]
            + ["q:" + q for q in QUOTIENTS]
            + ["ratio:" + r for r in RATIO_KINDS]
        )
        self.reals = {k: ExactSum() for k in names}
        self.S: dict[tuple, object] = {}
        self.T: dict[tuple, object] = {}
        for k in self.moduli:
            for rc in coprime_classes(k):
                for r in self.s_powers:
                    self.S[(r, k, rc.residue)] = 0 if r in (0, -1) else ExactSum()
                for r in self.t_powers:
                    self.T[(r, k, rc.residue)] = 0 if r in (0, -1) else ExactSum()
        self.excluded = {k: 0 for k in self.moduli}
        self.excluded_T = {k: 0 for k in self.moduli}
        self.consec = {
            k: 0
            for k in ("beta_gt", "B_gt", "B1_gt", "beta_gt_gt", "beta_eq", "B_eq", "B1_eq", "pairs", "triples")
        }
        self.matches = {"beta_eq": [], "B_eq": [], "B1_eq": []}
        self._carry: dict[str, np.ndarray] = {}
        self.hist = DiffHistogram()

    # -- streaming ---------------------------------------------------------------

    def __call__(self, seg: SieveSegment) -> None:
        start = seg.lo
        while self._pending and self._pending[0] < seg.hi:
            x = self._pending.pop(0)
            if x + 1 > start:
                self._consume(seg.slice(start, x + 1))
            start = x + 1
            self.snapshots[x] = self._snapshot(x)
        if start < seg.hi:
            self._consume(seg.slice(start, seg.hi))

    def _consume(self, seg: SieveSegment) -> None:
        P, beta, B, B1 = seg.P, seg.beta, seg.B, seg.B1
        om = seg.omega.astype(np.int64)
        Om = seg.Omega.astype(np.int64)
        n = seg.n
        ints = self.ints
        ints["beta"] += int(beta.sum())
        ints["B"] += int(B.sum())
        ints["B1"] += int(B1.sum())
        ints["P"] += int(P.sum())
        sqf = om == Om
        ints["squarefree"] += int(np.count_nonzero(sqf))
        p2 = n % (P * P) == 0
        p2[P == 1] = False
        ints["P2_divides"] += int(np.count_nonzero(p2))
        ints["P_P2_divides"] += int(P[p2].sum())
        self.hist(seg)

        Pf = P.astype(np.float64)
        invP = 1.0 / Pf
        R = self.reals
        R["recip_P"].add(invP)
        R["P_pow_omega"].add(Pf ** (-om))
        R["P_pow_Omega"].add(Pf ** (-Om))
        R["ratio:Omega_minus_omega"].add((Om - om)[Om > om] * invP[Om > om])
        R["ratio:omega"].add(om * invP)
        R["ratio:Omega"].add(Om * invP)
        R["ratio:mu_squared"].add(invP[sqf])

        g2 = n >= 2
        bf, Bf, B1f = beta[g2].astype(np.float64), B[g2].astype(np.float64), B1[g2].astype(np.float64)
        Pg = Pf[g2]
        R["recip_beta"].add(1.0 / bf)
        R["recip_B"].add(1.0 / Bf)
        ne = B[g2] != beta[g2]
        R["inv_beta_minus_inv_B"].add(1.0 / bf[ne] - 1.0 / Bf[ne])
        R["B_over_beta_minus_1"].add((B[g2] - beta[g2])[ne] / bf[ne])
        R["q:P/B1"].add(Pg / B1f)
        R["q:beta/B1"].add(bf / B1f)
        R["q:B/B1"].add(Bf / B1f)
        R["q:B1/B"].add(B1f / Bf)
        R["q:B1/P"].add(B1f / Pg)
        R["q:B1/beta"].add(B1f / bf)

        for k in self.moduli:
            res = P % k
            coprime = np.gcd(P, k) == 1
            self.excluded[k] += int(np.count_nonzero(~coprime))
            self.excluded_T[k] += int(np.count_nonzero(~coprime & p2))
            for l in range(1, k + 1):
                if math.gcd(l, k) != 1:
                    continue
                m = coprime & (res == l % k)
                mt = m & p2
                for r in self.s_powers:
                    self._add_power(self.S, (r, k, l), Pf[m], P[m], r)
                for r in self.t_powers:
                    self._add_power(self.T, (r, k, l), Pf[mt], P[mt], r)

        self._consecutive(seg)

    @staticmethod
    def _add_power(store, key, Pf, Pi, r) -> None:
        if r == 0:
            store[key] += int(Pf.size)
        elif r == -1:
            store[key] += int(Pi.sum())
        else:
            store[key].add(Pf ** (-r))

    def _consecutive(self, seg: SieveSegment) -> None:
        c = self.consec
        cols = {}
        for f in ("beta", "B", "B1"):
            prev = self._carry.get(f, np.zeros(0, dtype=np.int64))
            cols[f] = np.concatenate([prev, getattr(seg, f)])
        base = seg.lo - (cols["beta"].size - len(seg))  # n of cols[..][0]
        for f in ("beta", "B", "B1"):
            a = cols[f]
            if a.size < 2:
                continue
            # pairs (n, n+1) whose second member lies in this chunk
            first = max(0, a.size - len(seg) - 1)
            lhs, rhs = a[first:-1], a[first + 1 :]
            c[f + "_gt"] += int(np.count_nonzero(lhs > rhs))
            eq = np.flatnonzero(lhs == rhs)
            c[f + "_eq"] += int(eq.size)
            if f == "beta":
                c["pairs"] += int(lhs.size)
            ns = eq + base + first
            ns = ns[ns + 1 <= self.list_cutoff]
            self.matches[f + "_eq"].extend((int(m), int(a[m - base])) for m in ns)
        a = cols["beta"]
        if a.size >= 3:
            first = max(0, a.size - len(seg) - 2)
            x0, x1, x2 = a[first:-2], a[first + 1 : -1], a[first + 2 :]
            c["beta_gt_gt"] += int(np.count_nonzero((x0 > x1) & (x1 > x2)))
            c["triples"] += int(x0.size)
        for f in ("beta", "B", "B1"):
            self._carry[f] = cols[f][-2:]

    def _snapshot(self, x: int) -> Stats:
        S = {k: (v.value if isinstance(v, ExactSum) else v) for k, v in self.S.items()}
        T = {k: (v.value if isinstance(v, ExactSum) else v) for k, v in self.T.items()}
        return Stats(
            x=x,
            sums=dict(self.ints),
            reals={k: v.value for k, v in self.reals.items()},
            S=S,
            T=T,
            excluded=dict(self.excluded),
            excluded_T=dict(self.excluded_T),
            consecutive=dict(self.consec),
            matches={k: list(v) for k, v in self.matches.items()},
            hist=_fresh_hist(self.hist),
        )


_STATS: dict[tuple[int, int], Stats] = {}


def collect(
    x_samples,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    threads: int = 1,
    cache=None,
    **tally_kw,
) -> dict[int, Stats]:
    """One streaming pass to max(x_samples); returns a Stats per sample."""
    xs = sorted({int(x) for x in x_samples})
    if not xs or xs[0] < 1:
        raise ValueError("x_samples must be positive")
    if xs[-1] > GLOBAL_LIMIT:
        raise ValueError(f"x = {xs[-1]} above sieve limit")
    tally = Tally(xs, **tally_kw)
    for seg in iter_segments(xs[-1], segment_size, threads, cache):
        tally(seg)
    if not tally_kw:
        for x, st in tally.snapshots.items():
            _STATS[(x, segment_size)] = st
    return tally.snapshots


def stats_at(x: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> Stats:
    key = (int(x), segment_size)
    if key not in _STATS:
        collect([x], segment_size)
    return _STATS[key]


# -- operations ------------------------------------------------------------------


def sum_additive(f: str, x: int, stats: Stats | None = None) -> int:
    """Exact sum_{n <= x} f(n) for f in beta, B, B1, P."""
    if f not in ("beta", "B", "B1", "P"):
        raise ValueError(f"unknown additive selector {f!r}")
    return (stats or stats_at(x)).sums[f]


def predict_sum_additive(x: float, M: int) -> float:
    """sum_{j<=M} A_j x^2 / log^j x."""
    if not 1 <= M <= 5:
        raise ValueError("M must be in 1..5")
    if x <= math.e:
        raise ValueError("x must exceed e")
    A = dickman.zeta_coefficients(M)
    lx = math.log(x)
    return math.fsum(a * x * x / lx ** (j + 1) for j, a in enumerate(A))


def sum_quotients(kind: str, x: int, stats: Stats | None = None) -> float:
    if kind not in QUOTIENTS:
        raise ValueError(f"unknown quotient {kind!r}")
    return (stats or stats_at(x)).reals["q:" + kind]


def sum_B_minus_beta(x: int, stats: Stats | None = None) -> int:
    st = stats or stats_at(x)
    return st.sums["B"] - st.sums["beta"]


def fit_C0(samples: dict[int, int]) -> tuple[float, dict[int, float]]:
    """Least-squares C_0 from (sum - x log log x)/x = C_0 + C_1/log x.

    Returns the fitted C_0 and the raw per-sample values of (sum - x loglog x)/x.
    """
    xs = sorted(samples)
    raw = {x: (samples[x] - x * math.log(math.log(x))) / x for x in xs}
    if len(xs) < 2:
        return raw[xs[0]], raw
    A = np.array([[1.0, 1.0 / math.log(x)] for x in xs])
    y = np.array([raw[x] for x in xs])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), raw


def sum_reciprocal_P(x: int, stats: Stats | None = None) -> float:
    """sum_{n <= x} 1/P(n), n = 1 included."""
    return (stats or stats_at(x)).reals["recip_P"]


def predict_reciprocal_P(x: float) -> float:
    return x * dickman.delta(x).value


def sum_P_power(mode: str, x: int, stats: Stats | None = None) -> float:
    """sum_{n <= x} P(n)^(-omega(n)) or P(n)^(-Omega(n))."""
    key = {"omega_exponent": "P_pow_omega", "Omega_exponent": "P_pow_Omega"}.get(mode)
    if key is None:
        raise ValueError(f"unknown mode {mode!r}")
    return (stats or stats_at(x)).reals[key]


def ratio_factor(kind: str, x: float) -> float:
    """Factor multiplying sum 1/P(n) in the predicted value of sum g(n)/P(n)."""
    if kind == "Omega_minus_omega":
        return dickman.constants().prime_sum_p2p
    if kind in ("omega", "Omega"):
        return math.sqrt(2 * math.log(x) / math.log(math.log(x)))
    if kind == "mu_squared":
        return 6 / math.pi**2
    raise ValueError(f"unknown ratio kind {kind!r}")


@dataclass(frozen=True)
class RatioSum:
    exact: float
    reciprocal_P: float
    factor: float

    @property
    def ratio(self) -> float:
        """exact / sum 1/P; compare with ``factor``."""
        return self.exact / self.reciprocal_P

    @property
    def normalized(self) -> float:
        return self.ratio / self.factor


def ratio_sums(kind: str, x: int, stats: Stats | None = None) -> RatioSum:
    if kind not in RATIO_KINDS:
        raise ValueError(f"unknown ratio kind {kind!r}")
    st = stats or stats_at(x)
    return RatioSum(st.reals["ratio:" + kind], st.reals["recip_P"], ratio_factor(kind, x))


def _stream_sum(x: int, terms) -> float:
    acc = ExactSum()
    for seg in iter_segments(x):
        acc.add(terms(seg))
    return acc.value


def residue_sum_S(r: float, rc: ResidueClass, x: int, stats: Stats | None = None) -> float:
    """sum over n <= x with P(n) = l (mod k) of P(n)^(-r)."""
    if r < 0:
        raise ValueError("S_r needs r >= 0")
    st = stats or stats_at(x)
    key = (r, rc.modulus, rc.residue)
    if key in st.S:
        return st.S[key]
    k, l = rc.modulus, rc.residue

    def terms(seg):
        m = (seg.P % k == l % k) & (np.gcd(seg.P, k) == 1)
        return seg.P[m].astype(np.float64) ** (-r)

    return _stream_sum(x, terms)


def residue_sum_T(r: float, rc: ResidueClass, x: int, stats: Stats | None = None) -> float:
    """sum over n <= x with P(n)^2 | n and P(n) = l (mod k) of P(n)^(-r)."""
    if r < -1:
        raise ValueError("T_r needs r >= -1")
    st = stats or stats_at(x)
    key = (r, rc.modulus, rc.residue)
    if key in st.T:
        return st.T[key]
    k, l = rc.modulus, rc.residue

    def terms(seg):
        P = seg.P
        m = (P > 1) & (seg.n % (P * P) == 0) & (P % k == l % k) & (np.gcd(P, k) == 1)
        return P[m].astype(np.float64) ** (-r)

    return _stream_sum(x, terms)


def _u_integral(x: float, f) -> float:
    """int over u in [1, log x/log 2] of f(u); t = x^(1/u) maps this onto t in [2, x].

    dt/t = (log x/u^2) du, so callers fold that Jacobian into f.
    """
    val, _ = dickman._integrate_u(f, 1.0, math.log(x) / math.log(2))
    return val


def predict_S_r(r: float, rc: ResidueClass, x: float, J: int = 1) -> float:
    """(x/phi(k)) int_2^x rho(log x/log t) sum_{j<=J} Q_{j,r}(log t)/log^j x dt/t^{r+1}."""
    if J not in (0, 1):
        raise ValueError("only Q_{0,r} and Q_{1,r} are known; J must be 0 or 1")
    if r <= 0:
        raise ValueError("predict_S_r needs r > 0")
    L = math.log(x)
    g = dickman.EULER_GAMMA
    tab = dickman.default_table()

    def f(u):
        lt = L / u
        q = r + ((r - r * g) * (r * lt - 1) / L if J == 1 else 0.0)
        return tab(u) * q * math.exp(-r * lt) * L / (u * u)

    return x / rc.phi * _u_integral(x, f)


def predict_T_r(r: float, rc: ResidueClass, x: float) -> float:
    """C x / phi(k) for r = -1; otherwise the leading R_{1,r} term."""
    if r < -1:
        raise ValueError("T_r needs r >= -1")
    if r == -1:
        return dickman.constants().saias_C * x / rc.phi
    L = math.log(x)
    tab = dickman.default_table()

    def f(u):
        lt = L / u
        return tab(u) * ((r + 1) ** 2 * lt - r - 1) * math.exp(-(r + 1) * lt) * L / (u * u)

    return x / rc.phi * _u_integral(x, f)


def corollary_factor(x: float) -> float:
    """{(log x / 2)(log2 x + log3 x - log 2 + (log3 x - log 2)/log2 x)}^{1/2}."""
    lx = math.log(x)
    l2 = math.log(lx)
    l3 = math.log(l2)
    return math.sqrt(lx / 2 * (l2 + l3 - math.log(2) + (l3 - math.log(2)) / l2))


@dataclass
class ConsecutiveReport:
    x: int
    counts: dict[str, int]
    frequencies: dict[str, float]
    matches: dict[str, list[tuple[int, int]]]
    B_eq_envelope: float


def consecutive_experiments(x: int, stats: Stats | None = None) -> ConsecutiveReport:
    """Comparisons of beta, B, B1 at n, n+1 (and n+2) for n + 1 <= x (n + 2 <= x)."""
    st = stats or stats_at(x)
    c = st.consecutive
    pairs = max(c["pairs"], 1)
    freqs = {k: c[k] / pairs for k in ("beta_gt", "B_gt", "B1_gt", "beta_eq", "B_eq", "B1_eq")}
    freqs["beta_gt_gt"] = c["beta_gt_gt"] / max(c["triples"], 1)
    return ConsecutiveReport(x, dict(c), freqs, st.matches, 5 * x / math.log(x))
