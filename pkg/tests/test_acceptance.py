"""Acceptance criteria 1-14, each at its stated tolerance.

One PASS/FAIL line per criterion is printed in the pytest terminal summary
(see conftest.py).  Set LAF_ACCEPT_1E8=1 to run criterion 9 against 1e8
instead of 1e7 (a few minutes on one core).
"""
import math
import os
import time

import numpy as np
import pytest

from laf import cli, density, dickman, lab, smooth
from laf.sieve import records_for, sieve_upto

RESULTS: dict[int, tuple[bool, str]] = {}

YS = (2, 3, 5, 10, 30, 100, 300, 1000, 10**4, 10**5)
XS = (10**2, 10**3, 10**4, 10**5, 10**6)


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


def test_01_oracle_equivalence():
    t0 = time.perf_counter()
    seg = sieve_upto(10**5)
    same = list(seg.records()) == records_for(range(1, 10**5 + 1))
    dt = time.perf_counter() - t0
    record(1, same and dt < 10, f"records equal for n <= 1e5: {same}; {dt:.1f} s")


def test_02_hand_sums():
    s = lab.collect([10])[10]
    got = (s.sums["beta"], s.sums["B"], s.sums["B1"])
    r = s.reals["recip_P"]
    ok = got == (36, 45, 50) and abs(r - 283 / 70) <= 1e-12
    record(2, ok, f"sums {got}, sum 1/P = {r!r} vs 283/70")


def test_03_rho():
    t0 = time.perf_counter()
    tab = dickman.DickmanTable(50)
    flat = np.all(tab(np.linspace(0, 1, 1001)) == 1.0)
    e2 = abs(tab(2.0) - (1 - math.log(2)))
    u = np.random.default_rng(2024).uniform(1, 50, 1000)
    h = 1e-6
    res = np.max(np.abs(u * (tab(u + h) - tab(u - h)) / (2 * h) + tab(u - 1)))
    dt = time.perf_counter() - t0
    ok = flat and e2 <= 1e-10 and res <= 1e-6 and dt < 5
    record(3, ok, f"rho=1 on [0,1]: {flat}; |rho(2)-(1-log 2)| = {e2:.1e}; max residual {res:.1e}; {dt:.2f} s")


def test_04_A1():
    fd = dickman.zeta_coefficient_fd(1)
    err = abs(fd - math.pi**2 / 12)
    record(4, err <= 1e-8, f"|A_1(pipeline) - pi^2/12| = {err:.1e}")


def test_05_densities(stats7):
    x = 10**7
    h = stats7[x].hist
    exact = density.density_series(20)
    env = 20 * math.log(x) / math.sqrt(x)
    dev = max(abs(h.count(k) / x - exact[k]) for k in range(21))
    d0 = abs(h.count(0) / x - 6 / math.pi**2)
    d2, t2 = density.density_exact(2)
    ok = dev <= env and d0 <= 1e-3 and h.count(1) == 0 and abs(d2 - 1 / math.pi**2) <= 1e-15 and t2 <= 1e-6
    record(5, ok, f"max dev {dev:.2e} vs envelope {env:.3f}; d_0 gap {d0:.1e}; count(1) = {h.count(1)}; "
                  f"d_2 = {d2!r}, tail {t2:.1e}")


def test_06_tail_bound(stats7):
    x = 10**7
    h = stats7[x].hist
    worst = max(k * h.tail(k) / x for k in range(2, 201))
    record(6, worst <= 5, f"max k * count(>= k)/x = {worst:.3f}")


def test_07_moment(stats7):
    x = 10**6
    D2, _ = density.moment_D_r(2, 2000)
    r = stats7[x].hist.reciprocal_sum(2) / (D2 * x)
    record(7, abs(r - 1) <= 0.02, f"direct / (D_2 x) = {r:.6f}")


def test_08_psi():
    grid = smooth.psi_exact_grid(XS, YS)
    same = all(c == smooth.psi_recurrence(x, y) for (x, y), c in grid.items())
    worst_h = 0.0
    for (x, y), c in grid.items():
        if 2 <= y < x:
            q = smooth.SmoothQuery(x, y)
            gap = abs(smooth.psi_hildebrand(q).value / c - 1)
            worst_h = max(worst_h, gap / (5 * math.log(q.u + 2) / math.log(y)))
    sa = {}
    for y in YS:
        q = smooth.SmoothQuery(10**6, y)
        if q.u <= 3:
            sa[y] = smooth.lambda_saias(q) / grid[(10**6, y)] - 1
    worst_s = max(abs(g) for g in sa.values())
    ok = same and len(grid) == 50 and worst_h <= 1 and worst_s <= 0.05
    record(8, ok, f"sieve == recurrence on {len(grid)} points: {same}; Hildebrand gap/envelope max {worst_h:.3f}; "
                  f"Lambda gaps at 1e6 (u <= 3): " + ", ".join(f"y={y}: {g:+.4f}" for y, g in sa.items()))


def test_09_reciprocal_P(stats7):
    top = 10**8 if os.environ.get("LAF_ACCEPT_1E8") else 10**7
    t0 = time.perf_counter()
    st_top = lab.collect([top])[top] if top > 10**7 else stats7[top]
    dt = time.perf_counter() - t0
    r6 = stats7[10**6].reals["recip_P"] / lab.predict_reciprocal_P(10**6)
    rt = st_top.reals["recip_P"] / lab.predict_reciprocal_P(top)
    ok = 0.5 <= r6 <= 2 and abs(rt - 1) < abs(r6 - 1) and dt <= 600
    record(9, ok, f"ratio {r6:.4f} at 1e6, {rt:.4f} at {top:.0e} ({dt:.0f} s)")


def test_10_P_power_drift(stats7):
    D = {x: stats7[x].reals["P_pow_Omega"] - math.log(math.log(x)) for x in (10**6, 10**7)}
    d = abs(D[10**7] - D[10**6])
    record(10, d < 0.05, f"D estimate {D[10**6]:.4f} -> {D[10**7]:.4f}, drift {d:.4f}")


def test_11_ratio_sums(stats7):
    x = 10**7
    mu = lab.ratio_sums("mu_squared", x, stats7[x])
    om = lab.ratio_sums("Omega_minus_omega", x, stats7[x])
    ok = abs(mu.ratio - mu.factor) <= 0.05 and abs(om.ratio - om.factor) <= 0.05
    record(11, ok, f"mu^2 ratio {mu.ratio:.4f} vs {mu.factor:.4f}; (Omega-omega) ratio {om.ratio:.4f} vs {om.factor:.4f}")


def test_12_residues(stats7):
    x = 10**7
    st = stats7[x]
    dev = {l: st.S[(0, 4, l)] * 2 / x - 1 for l in (1, 3)}
    closes = all(
        sum(v for (r, k, _), v in s.S.items() if r == 0 and k == kk) + s.excluded[kk] == s.x
        for s in stats7.values() for kk in lab.DEFAULT_MODULI
    )
    ok = all(abs(v) <= 0.01 for v in dev.values()) and closes
    record(12, ok, f"S_0 phi/x - 1: l=1 {dev[1]:+.5f}, l=3 {dev[3]:+.5f}; partition closes: {closes}")


def test_13_consecutive(stats7):
    x = 10**7
    rep = lab.consecutive_experiments(x, stats7[x])
    f = rep.frequencies["beta_gt"]
    ok = (
        (5, 5) in rep.matches["beta_eq"]
        and (714, 29) in rep.matches["B_eq"]
        and rep.counts["B_eq"] <= 5 * x / math.log(x)
        and 0.4 <= f <= 0.6
    )
    record(13, ok, f"beta(5)=beta(6), B(714)=B(715)=29 found; B-equalities {rep.counts['B_eq']} "
                   f"<= {5 * x / math.log(x):.0f}; beta(n)>beta(n+1) frequency {f:.4f}")


def test_14_determinism(tmp_path):
    base = ["run", "--experiments", "all", "--x-max", "1e6", "--x-samples", "1e4:10:3"]
    outs = []
    for i, extra in enumerate([[], [], ["--segment-size", "65521"], ["--segment-size", "3001", "--threads", "2"]]):
        o = tmp_path / str(i)
        cli.main(base + extra + ["--out", str(o)])
        outs.append(o)
    files = sorted(p.name for p in outs[0].glob("*.csv"))
    diff = [n for n in files if len({(o / n).read_bytes() for o in outs}) != 1]
    record(14, files and not diff, f"{len(files)} CSV files x 4 runs; differing: {diff or 'none'}")
