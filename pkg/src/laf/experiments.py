"""Experiment registry.

Each experiment takes a ``Context`` (shared sieve statistics for the
requested x samples) and returns an ``ExperimentReport``.  Checks embedded
in a report are the pass/fail assertions behind the runner's exit status;
checks tied to a particular x are only made when that x is sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import density, dickman, lab, smooth
from .report import Check, ExperimentReport
from .sieve import DEFAULT_SEGMENT_SIZE, sieve_upto

TEN7 = 10**7


@dataclass
class Context:
    x_max: int
    x_samples: list[int]
    segment_size: int = DEFAULT_SEGMENT_SIZE
    threads: int = 1
    cache: object = None
    _stats: dict | None = field(default=None, repr=False)

    @property
    def stats(self) -> dict[int, lab.Stats]:
        if self._stats is None:
            self._stats = lab.collect(
                sorted(set(self.x_samples) | {self.x_max}), self.segment_size, self.threads, self.cache
            )
        return self._stats

    @property
    def xs(self) -> list[int]:
        return sorted(set(self.x_samples) | {self.x_max})

    def at(self, x: int) -> lab.Stats:
        return self.stats[x]


@dataclass(frozen=True)
class Experiment:
    id: str
    anchor: str
    run: object


REGISTRY: dict[str, Experiment] = {}


def register(id: str, anchor: str):
    def deco(fn):
        if id in REGISTRY:
            raise ValueError(f"duplicate experiment id {id}")
        REGISTRY[id] = Experiment(id, anchor, fn)
        return fn

    return deco


def catalog() -> list[tuple[str, str]]:
    return [(e.id, e.anchor) for e in REGISTRY.values()]


def _hand(n_max: int = 10) -> list:
    return list(sieve_upto(n_max).records())


def _drift(values) -> float:
    v = list(values)
    return max(abs(b - a) for a, b in zip(v, v[1:])) if len(v) > 1 else 0.0


# -- additive sums ----------------------------------------------------


@register("sum_beta_21", "sum_{n<=x} beta(n) = sum_{j<=M} A_j x^2/log^j x + O(x^2/log^{M+1} x)")
def sum_beta(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x > 2]
    M = 3
    exact = [float(ctx.at(x).sums["beta"]) for x in xs]
    pred = [lab.predict_sum_additive(x, M) for x in xs]
    env = [(ctx.at(x).sums["beta"] - p) / (x * x / math.log(x) ** (M + 1)) for x, p in zip(xs, pred)]
    extra = {f"sum_{f}_ratio": [ctx.at(x).sums[f] / p for x, p in zip(xs, pred)] for f in ("B", "B1", "P")}
    extra["envelope_M3"] = env
    recs = _hand()
    checks = [
        Check("hand sums beta, B, B1 at x=10", [sum(getattr(r, f) for r in recs) for f in ("beta", "B", "B1")] == [36, 45, 50]),
    ]
    if TEN7 in xs:
        e = env[xs.index(TEN7)]
        checks.append(Check("envelope |exact - M=3| <= 10 x^2/log^4 x at 1e7", abs(e) <= 10, repr(e)))
    return ExperimentReport(
        "sum_beta_21", xs, exact, pred, extra=extra, checks=checks,
        metadata={"M": M, "A": dickman.zeta_coefficients(M)},
    )


@register("quotients_2", "sum B1(n)/P(n) = e^gamma x log log x + O(x)")
def quotients(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    eg = math.exp(dickman.EULER_GAMMA)
    exact = [ctx.at(x).reals["q:B1/P"] for x in xs]
    pred = [eg * x * math.log(math.log(x)) for x in xs]
    extra = {f"{q}_over_x": [ctx.at(x).reals["q:" + q] / x for x in xs] for q in lab.QUOTIENTS}
    hand = sum(Fraction(r.P, r.B1) for r in _hand() if r.n >= 2)
    # n = 2..10; P(6)/B1(6) = 3/5
    expect = Fraction(1) + 1 + Fraction(1, 2) + 1 + Fraction(3, 5) + 1 + Fraction(1, 4) + Fraction(1, 3) + Fraction(5, 7)
    checks = [Check("hand P/B1 at x=10", hand == expect, str(hand))]
    return ExperimentReport(
        "quotients_2", xs, exact, pred, extra=extra, checks=checks,
        metadata={"D_B1_over_B_estimate": extra["B1/B_over_x"][-1] if xs else None,
                  "D_drift": _drift(extra["B1/B_over_x"][-3:])},
    )


@register("B_minus_beta_2", "sum (B(n) - beta(n)) = x log log x + x sum_j C_j/log^j x")
def b_minus_beta(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    sums = {x: lab.sum_B_minus_beta(x, ctx.at(x)) for x in xs}
    C0, raw = lab.fit_C0(sums) if xs else (math.nan, {})
    exact = [float(sums[x]) for x in xs]
    pred = [x * math.log(math.log(x)) + C0 * x for x in xs]
    checks = [
        Check("hand B - beta at x=10", sum(r.B - r.beta for r in _hand()) == 9),
        Check(
            "sum >= 2 * #non-squarefree",
            all(sums[x] >= 2 * (x - ctx.at(x).sums["squarefree"]) for x in xs),
        ),
    ]
    return ExperimentReport(
        "B_minus_beta_2", xs, exact, pred, extra={"C0_raw": [raw[x] for x in xs]}, checks=checks,
        metadata={"C0_fit": C0, "C0_drift": _drift(raw[x] for x in xs)},
    )


# -- local densities ----------------------------------------------------


@register("density_table_31", "d_k = lim #{n <= x : B(n) - beta(n) = k}/x exists for every k")
def density_table(ctx: Context) -> ExperimentReport:
    k_max = 20
    x = ctx.x_max
    hists = {x: ctx.at(x).hist}
    tab = density.build_density_table(k_max, hists)
    rows = tab.rows(x)
    env = 20 * math.log(x) / math.sqrt(x)
    am = density.argmax_density(200)
    checks = [
        Check("no n with B - beta = 1", ctx.at(x).hist.count(1) == 0),
        Check("|empirical - exact| <= 20 log x/sqrt x for k <= 20", all(r[5] <= 1 for r in rows)),
        Check("d_2 = 1/pi^2", abs(tab.exact[2] - 1 / math.pi**2) <= 1e-15 and tab.exact_tail_bound[2] <= 1e-6),
        Check("counts + tail = x", int(ctx.at(x).hist.counts.sum()) == x),
    ]
    header = ["k", "d_exact", "tail_bound", "count", "empirical", "deviation_over_envelope"]
    return ExperimentReport(
        "density_table_31", [x], [rows[0][4]], [float(tab.exact[0])], checks=checks, table=(header, rows),
        metadata={"envelope": env, "argmax_k": am.k, "argmax_value": am.value, "runner_up": am.runner_up},
    )


@register("tail_bound_32", "#{n <= x : B(n) - beta(n) >= k} << x/k")
def tail_bound(ctx: Context) -> ExperimentReport:
    xs = ctx.xs
    worst = []
    for x in xs:
        h = ctx.at(x).hist
        worst.append(max(k * h.tail(k) / x for k in range(2, 201)))
    checks = [Check("k * tail / x <= 5 for 2 <= k <= 200", all(w <= density.ENVELOPE for w in worst), repr(max(worst)))]
    return ExperimentReport(
        "tail_bound_32", xs, worst, [density.ENVELOPE] * len(xs), checks=checks, trend="inconclusive",
        metadata={"k_range": [2, 200]},
    )


@register("moments_33", "sum' (B(n) - beta(n))^(-r) = D_r x + error, D_r = sum_k d_k k^(-r)")
def moments(ctx: Context) -> ExperimentReport:
    xs = ctx.xs
    D2, tail = density.moment_D_r(2, 2000)
    exact = [ctx.at(x).hist.reciprocal_sum(2) for x in xs]
    pred = [D2 * x for x in xs]
    checks = []
    if 10**6 in xs:
        r = exact[xs.index(10**6)] / pred[xs.index(10**6)]
        checks.append(Check("moment r=2 within 2% at 1e6", abs(r - 1) <= 0.02, repr(r)))
    return ExperimentReport("moments_33", xs, exact, pred, checks=checks, metadata={"D_2": D2, "D_2_tail_bound": tail})


# -- reciprocals of P(n) ------------------------------------------------


@register("reciprocal_P_41", "sum_{n<=x} 1/P(n) = x delta(x) (1 + O(sqrt(log_2 x/log x)))")
def reciprocal_P(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 3]
    exact = [lab.sum_reciprocal_P(x, ctx.at(x)) for x in xs]
    pred = [lab.predict_reciprocal_P(x) for x in xs]
    extra = {
        "recip_beta_ratio": [ctx.at(x).reals["recip_beta"] / e for x, e in zip(xs, exact)],
        "recip_B_ratio": [ctx.at(x).reals["recip_B"] / e for x, e in zip(xs, exact)],
        "B_over_beta_minus_1_ratio": [ctx.at(x).reals["B_over_beta_minus_1"] / p for x, p in zip(xs, pred)],
    }
    hand = sum(Fraction(1, r.P) for r in _hand())
    checks = [Check("hand sum 1/P at x=10 is 283/70", hand == Fraction(283, 70))]
    ratios = [e / p for e, p in zip(exact, pred)]
    if 10**6 in xs:
        r6 = ratios[xs.index(10**6)]
        checks.append(Check("ratio in [0.5, 2] at 1e6", 0.5 <= r6 <= 2, repr(r6)))
        later = [r for x, r in zip(xs, ratios) if x > 10**6]
        if later:
            checks.append(Check("ratio closer to 1 at largest x", abs(later[-1] - 1) < abs(r6 - 1), repr(later[-1])))
    return ExperimentReport("reciprocal_P_41", xs, exact, pred, extra=extra, checks=checks)


@register("P_power_44", "sum P(n)^(-Omega(n)) = log log x + D + O(1/log x)")
def p_power(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    D = [lab.sum_P_power("Omega_exponent", x, ctx.at(x)) - math.log(math.log(x)) for x in xs]
    exact = [lab.sum_P_power("Omega_exponent", x, ctx.at(x)) for x in xs]
    pred = [math.log(math.log(x)) + D[-1] for x in xs]
    om = [lab.sum_P_power("omega_exponent", x, ctx.at(x)) for x in xs]
    extra = {
        "D_estimate": D,
        "omega_exponent_sum": om,
        "omega_exponent_scaled": [math.log(s) * math.log(math.log(x)) / math.sqrt(math.log(x)) for s, x in zip(om, xs)],
    }
    checks = []
    if 10**6 in xs and TEN7 in xs:
        d = abs(D[xs.index(TEN7)] - D[xs.index(10**6)])
        checks.append(Check("D drift 1e6 -> 1e7 < 0.05", d < 0.05, repr(d)))
    return ExperimentReport("P_power_44", xs, exact, pred, extra=extra, checks=checks, metadata={"D_estimate": D[-1] if D else None})


@register("ratio_sums_4", "sum mu^2(n)/P(n) = (6/pi^2 + O(sqrt(log_2 x/log x))) sum 1/P(n)")
def ratio_sums(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    rs = {k: [lab.ratio_sums(k, x, ctx.at(x)) for x in xs] for k in lab.RATIO_KINDS}
    exact = [r.ratio for r in rs["mu_squared"]]
    pred = [r.factor for r in rs["mu_squared"]]
    extra = {f"{k}_ratio": [r.ratio for r in rs[k]] for k in lab.RATIO_KINDS if k != "mu_squared"}
    extra.update({f"{k}_factor": [r.factor for r in rs[k]] for k in lab.RATIO_KINDS if k != "mu_squared"})
    checks = []
    if TEN7 in xs:
        i = xs.index(TEN7)
        mu, om = rs["mu_squared"][i], rs["Omega_minus_omega"][i]
        checks.append(Check("mu^2 ratio within 0.05 of 6/pi^2 at 1e7", abs(mu.ratio - mu.factor) <= 0.05, repr(mu.ratio)))
        checks.append(Check("(Omega-omega) ratio within 0.05 of sum 1/(p^2-p) at 1e7", abs(om.ratio - om.factor) <= 0.05, repr(om.ratio)))
    return ExperimentReport("ratio_sums_4", xs, exact, pred, extra=extra, checks=checks)


@register("reciprocal_diff_4", "sum (1/beta(n) - 1/B(n)) = x exp{-2 sqrt(log x log_2 x)(1 + g_1(x) + ...)}")
def reciprocal_diff(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 10**3]
    exact = [ctx.at(x).reals["inv_beta_minus_inv_B"] for x in xs]
    pred = []
    for x in xs:
        lx = math.log(x)
        pred.append(x * math.exp(-2 * math.sqrt(lx * math.log(lx)) * (1 + dickman.g_r(x, 1))))
    return ExperimentReport("reciprocal_diff_4", xs, exact, pred)


# -- residue classes ------------------------------------------------------


@register("residue_S_51", "S_r(x) = (x/phi(k)) int_2^x rho(log x/log t) sum_j Q_{j,r}(log t)/log^j x dt/t^(r+1)")
def residue_S(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    rc1 = lab.ResidueClass(1, 1)
    exact = [lab.residue_sum_S(1, rc1, x, ctx.at(x)) for x in xs]
    pred = [lab.predict_S_r(1, rc1, x, J=1) for x in xs]
    extra = {}
    for k in (3, 4):
        for rc in lab.coprime_classes(k):
            extra[f"S0_k{k}_l{rc.residue}_ratio"] = [ctx.at(x).S[(0, k, rc.residue)] * rc.phi / x for x in xs]
    checks = []
    for x in ctx.xs:
        st = ctx.at(x)
        for k in lab.DEFAULT_MODULI:
            total = sum(v for (r, kk, _), v in st.S.items() if r == 0 and kk == k) + st.excluded[k]
            if total != x:
                checks.append(Check(f"partition k={k} at {x}", False, f"{total} != {x}"))
    if not checks:
        checks.append(Check("S_0 partition over classes closes", True))
    if TEN7 in xs:
        i = xs.index(TEN7)
        for l in (1, 3):
            v = extra[f"S0_k4_l{l}_ratio"][i]
            checks.append(Check(f"S_0(k=4, l={l}) phi/x within 1% at 1e7", abs(v - 1) <= 0.01, repr(v)))
    return ExperimentReport(
        "residue_S_51", xs, exact, pred, extra=extra, checks=checks,
        metadata={"r": 1, "J": 1, "convention": "n = 1 counted in class 1 mod k (P(1) = 1)"},
    )


@register("residue_T_52", "T_{-1}(x) = C x/phi(k) + small, C = int_0^inf rho(v)/(v+2) dv")
def residue_T(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 16]
    rc1 = lab.ResidueClass(1, 1)
    C = dickman.constants().saias_C
    exact = [float(ctx.at(x).T[(-1, 1, 1)]) for x in xs]
    pred = [lab.predict_T_r(-1, rc1, x) for x in xs]
    extra = {
        "T0_ratio": [ctx.at(x).T[(0, 1, 1)] / lab.predict_T_r(0, rc1, x) for x in xs],
        "T1_ratio": [ctx.at(x).T[(1, 1, 1)] / lab.predict_T_r(1, rc1, x) for x in xs],
        "count_over_recip_P_over_factor": [
            ctx.at(x).T[(0, 1, 1)] / ctx.at(x).reals["recip_P"] / lab.corollary_factor(x) for x in xs
        ],
    }
    checks = [Check("C < 1", C < 1, repr(C))]
    return ExperimentReport("residue_T_52", xs, exact, pred, extra=extra, checks=checks, metadata={"C": C})


# -- smooth numbers ---------------------------------------------------------------------

SMOOTH_YS = (2, 3, 5, 10, 30, 100, 300, 1000, 10**4, 10**5)


@register("smooth_grid_56", "psi(x, y) = x rho(u) (1 + O(log(u+1)/log y)) and psi ~ Lambda(x, y)")
def smooth_grid(ctx: Context) -> ExperimentReport:
    top = min(ctx.x_max, 10**6)
    xs = [10**j for j in range(2, 7) if 10**j <= top] or [top]
    res = smooth.smooth_grid(xs, SMOOTH_YS, segment_size=ctx.segment_size, cache=ctx.cache)
    checks = []
    bad = [(r.query.x, r.query.y) for r in res if r.exact != smooth.psi_recurrence(r.query.x, r.query.y)]
    checks.append(Check("sieve psi == recurrence psi on grid", not bad, str(bad[:5])))
    over = []
    for r in res:
        q = r.query
        if q.y >= 2 and q.y < q.x:
            if abs(r.hildebrand / r.exact - 1) > 5 * math.log(q.u + 2) / math.log(q.y):
                over.append((q.x, q.y))
    checks.append(Check("Hildebrand gap <= 5 log(u+2)/log y", not over, str(over[:5])))
    if top == 10**6:
        gaps = [r.relative_gaps["saias"] for r in res if r.query.x == 10**6 and "saias" in r.relative_gaps and r.query.u <= 3]
        checks.append(Check("Lambda within 5% of psi for u <= 3 at 1e6", all(abs(g) <= 0.05 for g in gaps), repr(gaps)))
    x_col = [int(r.query.x) for r in res]
    return ExperimentReport(
        "smooth_grid_56", x_col, [float(r.exact) for r in res], [r.hildebrand for r in res],
        trend="inconclusive", checks=checks, table=(smooth.GRID_HEADER, smooth.grid_rows(res)),
    )


# -- consecutive values ---------------------------------------------------------------------


@register("consecutive_p3", "density of n with beta(n) > beta(n+1); #{B(n) = B(n+1)} = O(x/log x)")
def consecutive(ctx: Context) -> ExperimentReport:
    xs = [x for x in ctx.xs if x >= 3]
    reps = [lab.consecutive_experiments(x, ctx.at(x)) for x in xs]
    exact = [float(r.counts["B_eq"]) for r in reps]
    pred = [r.B_eq_envelope for r in reps]
    extra = {f"freq_{k}": [r.frequencies[k] for r in reps] for k in ("beta_gt", "B_gt", "B1_gt", "beta_gt_gt")}
    extra.update({f"count_{k}": [r.counts[k] for r in reps] for k in ("beta_eq", "B1_eq")})
    checks = [Check("B-equality count <= 5 x/log x", all(e <= p for e, p in zip(exact, pred)))]
    last = reps[-1] if reps else None
    if last and last.x >= 715:
        checks.append(Check("beta(5) = beta(6) listed", (5, 5) in last.matches["beta_eq"]))
        checks.append(Check("B(714) = B(715) = 29 listed", (714, 29) in last.matches["B_eq"]))
    if TEN7 in xs:
        f = reps[xs.index(TEN7)].frequencies["beta_gt"]
        checks.append(Check("beta(n) > beta(n+1) frequency in [0.4, 0.6] at 1e7", 0.4 <= f <= 0.6, f"{f:.4f}"))
    return ExperimentReport(
        "consecutive_p3", xs, exact, pred, extra=extra, checks=checks, trend="inconclusive",
        metadata={"matches_below": lab.LIST_CUTOFF, "B_eq_first": last.matches["B_eq"][:50] if last else []},
    )
