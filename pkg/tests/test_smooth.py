import math

import pytest
from hypothesis import given, settings, strategies as st

from laf.primes import primes_up_to
from laf.sieve import sieve_upto
from laf.smooth import (
    GRID_HEADER,
    MemoBudgetExceeded,
    SmoothQuery,
    evaluate,
    grid_rows,
    hildebrand_range_ok,
    lambda_saias,
    psi_exact_grid,
    psi_exact_sieve,
    psi_hildebrand,
    psi_recurrence,
    smooth_grid,
)

P_SMALL = sieve_upto(20000).P


def brute_psi(x, y):
    return int((P_SMALL[: int(x)] <= y).sum())


def test_small_cases():
    assert psi_exact_sieve(10, 2) == 4 == psi_recurrence(10, 2)
    assert psi_exact_sieve(10, 10) == 10 == psi_recurrence(10, 10)
    assert psi_exact_sieve(10**6, 1) == 1 == psi_recurrence(10**6, 1)
    assert psi_recurrence(10**6, 100) == psi_exact_sieve(10**6, 100) == 72271


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 20000), st.integers(1, 25000))
def test_recurrence_matches_brute(x, y):
    assert psi_recurrence(x, y) == brute_psi(x, y)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 19999), st.integers(2, 300))
def test_monotone_and_submultiplicative(x, y):
    assert psi_recurrence(x + 1, y) >= psi_recurrence(x, y)
    assert psi_recurrence(x, y + 1) >= psi_recurrence(x, y)
    for p in primes_up_to(min(x, y))[:5].tolist():
        assert psi_recurrence(x, y) >= psi_recurrence(x // p, y)


def test_recurrence_beyond_sieve_range():
    # 2-smooth numbers up to 10^15 are the 50 powers 2^0..2^49
    assert psi_recurrence(10**15, 2) == 50
    assert psi_recurrence(10**15, 3) == sum(1 for a in range(50) for b in range(32) if 2**a * 3**b <= 10**15)


def test_budget_is_distinct_error():
    with pytest.raises(MemoBudgetExceeded):
        psi_recurrence(10**9, 1000, budget=100)
    with pytest.raises(ValueError):
        psi_recurrence(0, 5)


def test_sieve_rejects_bad_x():
    with pytest.raises(ValueError):
        psi_exact_sieve(0, 3)
    with pytest.raises(ValueError):
        psi_exact_sieve(2**41, 3)


def test_query_u():
    assert SmoothQuery(100, 10).u == pytest.approx(2.0)
    assert SmoothQuery(100, 1).u == math.inf
    assert SmoothQuery(5, 9).u < 1
    with pytest.raises(ValueError):
        SmoothQuery(0.5, 2)


def test_grid_matches_single_calls():
    g = psi_exact_grid([100, 1000, 12345], [2, 7, 100])
    for (x, y), c in g.items():
        assert c == psi_exact_sieve(x, y)


def test_hildebrand():
    assert psi_hildebrand(SmoothQuery(1e6, 1e6)).value == pytest.approx(1e6)
    q3, q2 = SmoothQuery(10**6, 100), SmoothQuery(10**6, 1000)
    gap3 = abs(psi_hildebrand(q3).value / psi_exact_sieve(10**6, 100) - 1)
    gap2 = abs(psi_hildebrand(q2).value / psi_exact_sieve(10**6, 1000) - 1)
    assert gap3 <= 5 * math.log(5) / math.log(100)
    assert gap2 < gap3
    assert not hildebrand_range_ok(SmoothQuery(10**6, 3))
    assert hildebrand_range_ok(SmoothQuery(10**6, 1000))


def test_hildebrand_gap_shrinks_with_y_at_fixed_u():
    gaps = []
    for y in (10, 100, 1000):
        x = y**2
        gaps.append(abs(psi_hildebrand(SmoothQuery(x, y)).value / psi_exact_sieve(x, y) - 1))
    assert gaps[0] > gaps[1] > gaps[2]


def test_lambda_when_y_at_least_x():
    for x in (10, 57.5, 1000):
        lam = lambda_saias(SmoothQuery(x, 2 * x))
        assert lam >= 0 and abs(lam - math.floor(x)) <= 1


def test_lambda_half_integer_point():
    x = 10**6 + 0.5
    exact = psi_exact_sieve(10**6, 1000)
    assert abs(lambda_saias(SmoothQuery(x, 1000)) / exact - 1) <= 0.05
    with pytest.raises(ValueError):
        lambda_saias(SmoothQuery(100, 1.5))


def test_lambda_against_integration_by_parts():
    # Lambda = x rho(u) - {x} + x int_1^{x/y} {t} rho(g - 1)/(g t^2 log y) dt,
    # g = (log x - log t)/log y; quad per unit interval, split where g is an integer
    from scipy import integrate

    from laf.dickman import rho

    x, y = 5000.0, 30.0
    lx, ly = math.log(x), math.log(y)
    kinks = [x / y**j for j in range(2, 4)]
    total = 0.0
    for m in range(1, int(x / y) + 1):
        b = min(m + 1.0, x / y)
        pts = [k for k in kinks if m < k < b]

        def f(t, m=m):
            g = (lx - math.log(t)) / ly
            return (t - m) * rho(g - 1) / (g * t * t * ly)

        total += integrate.quad(f, m, b, points=pts or None, epsabs=0, epsrel=1e-12)[0]
    want = x * rho(lx / ly) + x * total
    assert lambda_saias(SmoothQuery(x, y)) == pytest.approx(want, rel=1e-11)


def test_smooth_grid_rows():
    res = smooth_grid([100, 1000], [2, 10, 50])
    rows = grid_rows(res)
    assert len(rows) == 6 and len(rows[0]) == len(GRID_HEADER)
    r = evaluate(SmoothQuery(1000, 50), 10)
    assert set(r.relative_gaps) == {"hildebrand", "saias"}
