import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gordonflow.cfrac import (FrequencyPair, PartialQuotients, best_approx_check, circle_distance,
                              convergents, cubic_schedule, design_pair, golden_quotients,
                              paper_literal_schedule, parse_schedule, power_schedule, two_sided_error)
from gordonflow.errors import PreconditionError, ScheduleOverflow

quotient_lists = st.lists(st.integers(1, 10**6), min_size=1, max_size=11).map(lambda t: [0] + t)


def cf_value(a):
    x = Fraction(a[-1])
    for v in reversed(a[:-1]):
        x = v + 1 / x
    return x


def test_fibonacci_denominators():
    assert convergents([0, 1, 1, 1, 1, 1]).q == (1, 1, 2, 3, 5, 8)


def test_seed_convergent():
    t = convergents([0, 2])
    assert t.convergent(1) == Fraction(1, 2)


def test_convergent_matches_nested_fraction():
    t = convergents([0, 1, 2, 3])
    assert t.convergent(3) == Fraction(7, 10) == cf_value([0, 1, 2, 3])


@pytest.mark.parametrize("bad", [[], [0, 0], [1, 2, -3], [-1, 2]])
def test_rejects_bad_quotients(bad):
    with pytest.raises(PreconditionError):
        convergents(bad)


@given(quotient_lists)
def test_determinant_identity(a):
    t = convergents(a)
    for n in range(1, len(t)):
        assert t.p[n - 1] * t.q[n] - t.p[n] * t.q[n - 1] == (-1) ** n


@given(quotient_lists)
def test_every_convergent_is_the_truncated_fraction(a):
    t = convergents(a)
    for n in range(len(t)):
        assert t.convergent(n) == cf_value(a[:n + 1])


def test_two_sided_error_fibonacci():
    t = convergents([0] + [1] * 8)
    assert two_sided_error(t, 3) == (Fraction(1, 24), Fraction(1, 15))
    with pytest.raises(PreconditionError):
        two_sided_error(t, len(t) - 1)


@given(st.lists(st.integers(1, 10**6), min_size=3, max_size=11).map(lambda t: [0] + t))
def test_sandwich(a):
    t = convergents(a)
    alpha = t.value()
    for n in range(len(t) - 2):
        lo, hi = two_sided_error(t, n)
        e = (-1) ** n * (alpha - t.convergent(n))
        assert lo <= e <= hi


def test_sandwich_short_fraction():
    t = convergents([0, 1, 2, 3])
    lo, hi = two_sided_error(t, 1)
    e = -(Fraction(7, 10) - t.convergent(1))
    assert lo <= e <= hi


def test_best_approx_golden():
    rep = best_approx_check(convergents(golden_quotients(12)), k_max=20)
    assert rep.ok and rep.checked_pairs > 0


def test_best_approx_short_fraction_brute_force():
    t = convergents([0, 1, 2, 3])
    alpha = Fraction(7, 10)
    dist = lambda k: min(k * alpha % 1, 1 - k * alpha % 1)
    assert all(dist(t.q[1]) < dist(k) for k in range(1, t.q[2]) if k != t.q[1])
    assert best_approx_check(t, k_max=t.q[2]).ok


def test_best_approx_out_of_range():
    t = convergents(golden_quotients(6))
    with pytest.raises(PreconditionError):
        best_approx_check(t, k_max=t.q[-1] + 1)


def test_best_approx_with_real_value():
    t = convergents(golden_quotients(20))
    with mpmath.workprec(200):
        v = mpmath.mpf(t.p[-1]) / t.q[-1]
    assert best_approx_check(t, v, k_max=1000, alpha_error=2.0**-190).ok


def test_circle_distance_basics():
    t = convergents(golden_quotients(10))
    a = t.value()
    assert circle_distance(0, a).value == 0
    lo, hi = two_sided_error(t, 2)
    d = circle_distance(t.q[2], a).value
    assert lo * t.q[2] < d < hi * t.q[2]  # scaled by q: ||q a|| = q |a - p/q|
    assert d == abs(t.q[2] * a - t.p[2])


@given(st.integers(1, 50), st.integers(2, 8))
def test_circle_distance_triangle(m, n):
    t = convergents(golden_quotients(12))
    a = t.value()
    assert circle_distance(m * t.q[n], a).value <= m * circle_distance(t.q[n], a).value


def test_circle_distance_large_k_uses_reals():
    a = Fraction(355, 113)
    k = 10**15 + 7
    d = circle_distance(k, a)
    exact = abs(((k * 355) % 113) / 113 if (k * 355) % 113 <= 56 else ((k * 355) % 113) / 113 - 1)
    assert abs(float(d.value) - exact) <= d.error + 1e-15


@pytest.mark.parametrize("schedule", [cubic_schedule(), power_schedule(2), parse_schedule("power:4")])
def test_design_pair_interlaces(schedule):
    pair = design_pair(schedule, 3, ((0, 1), (0, 1)))
    assert pair.check_schedule(schedule) == []
    for n in range(1, 4):
        assert pair.q_prime(n) >= schedule(n, pair.q(n))
        assert pair.q(n + 1) >= schedule(n, pair.q_prime(n))


def test_paper_literal_one_level():
    # q'_1 is reachable, the following alpha step e^(q'_1^5) is not
    s = paper_literal_schedule()
    with pytest.raises(ScheduleOverflow) as e:
        design_pair(s, 1, ((0, 2), (0,)))
    ta, tb = e.value.partial
    assert ta.q[-1] == 2
    assert tb.q[-1] >= math.ceil(math.exp(32)) == s(1, 2)


def test_paper_literal_overflows():
    with pytest.raises(ScheduleOverflow) as e:
        design_pair(paper_literal_schedule(), 2, ((0, 2), (0,)))
    assert e.value.partial is not None


def test_design_pair_levels_zero():
    with pytest.raises(PreconditionError):
        design_pair(cubic_schedule(), 0)


def test_pair_json_round_trip(pair):
    doc = pair.to_json()
    back = FrequencyPair.from_json(doc)
    assert back.rotation() == pair.rotation()
    assert back.to_json() == doc


def test_desk_small_denominators(pair):
    assert (pair.q(1), pair.q_prime(1)) == (5, 125)
    assert pair.q(2) == 1953126
    assert pair.t(1) == 625


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_best_approx_random_tables(seed):
    rng = random.Random(seed)
    a = [0] + [rng.randint(1, 9) for _ in range(rng.randint(3, 9))]
    t = convergents(a)
    assert best_approx_check(t, k_max=min(t.q[-1], 10**4)).ok


def test_partial_quotients_value():
    assert PartialQuotients((0, 1, 2, 3)).value() == Fraction(7, 10)
