import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gordonflow.birkhoff import (BirkhoffQuery, as_fraction, birkhoff_closed, birkhoff_direct, ceiling_deviation,
                                 ceiling_direct, geometric_sum, recurrence_estimate, stretch_profile, stretch_window)
from gordonflow.ceiling import ToleranceSchema, constant_ceiling
from gordonflow.errors import BudgetExceeded, PreconditionError
from gordonflow.trig import TrigPolynomial


def _direct_geom(m, k, rot):
    # phases reduced exactly before going to floats
    return sum(cmath.exp(2j * math.pi * float((k * l * rot) % 1)) for l in range(m))


@pytest.mark.parametrize("m,k,rot,expected", [
    (7, 3, Fraction(2, 5), None),
    (5, 5, Fraction(1, 5), 5),      # integer phase
    (2, 1, Fraction(1, 4), 1 + 1j),
    (0, 3, Fraction(1, 7), 0),
    (1, 9, Fraction(3, 11), 1),
])
def test_geometric_sum_cases(m, k, rot, expected):
    g = geometric_sum(m, k, rot)
    ref = _direct_geom(m, k, rot) if expected is None else expected
    assert abs(g.value - ref) < 1e-12


def test_geometric_sum_golden_rational():
    # convergent of the golden mean
    rot = Fraction(610, 987)
    for m in (1, 13, 144, 900):
        for k in (1, 2, 987 - 1):
            assert abs(geometric_sum(m, k, rot).value - _direct_geom(m, k, rot)) < 1e-10


@given(st.integers(0, 500), st.integers(-50, 50), st.integers(1, 400), st.integers(2, 401))
def test_geometric_sum_bounded(m, k, p, q):
    g = geometric_sum(m, k, Fraction(p % q, q))
    assert abs(g.value) <= m + 1e-9


@given(st.integers(1, 200), st.integers(1, 200), st.integers(1, 30), st.integers(3, 997))
def test_geometric_cocycle(m, n, k, q):
    rot = Fraction(1, q) * 7 % 1
    a = geometric_sum(m + n, k, rot).value
    b = geometric_sum(m, k, rot).value + cmath.exp(2j * math.pi * ((k * m * rot) % 1)) * geometric_sum(n, k, rot).value
    assert abs(a - b) < 1e-9


def test_geometric_negative_m():
    rot = Fraction(3, 13)
    # S_{-m} = -sum_{l=-m}^{-1}
    ref = -sum(cmath.exp(2j * math.pi * 2 * l * float(rot)) for l in range(-5, 0))
    assert abs(geometric_sum(-5, 2, rot).value - ref) < 1e-12


def test_as_fraction():
    assert as_fraction(0.5) == Fraction(1, 2)
    assert as_fraction(3) == 3
    import mpmath
    assert as_fraction(mpmath.mpf("0.25")) == Fraction(1, 4)


@pytest.mark.parametrize("m", [1, 17, 625, 4000])
def test_closed_matches_direct(pair, m):
    p = TrigPolynomial.from_dict({1: 0.3, 2: 0.1 - 0.05j, 5: 0.02})
    x = Fraction(3, 17)
    q = BirkhoffQuery(p, "x", m, x, Fraction(0), pair)
    v, _, err = birkhoff_closed(q)
    assert v == pytest.approx(birkhoff_direct(q), abs=1e-10 + err)


def test_const_query(pair):
    q = BirkhoffQuery(TrigPolynomial.constant(2.0), "const", 9, 0, 0, pair)
    assert birkhoff_closed(q)[0] == 18.0 and birkhoff_direct(q) == 18.0
    with pytest.raises(PreconditionError):
        BirkhoffQuery(TrigPolynomial.cosine(1, 1.0), "const", 3, 0, 0, pair)


def test_direct_budget(pair):
    q = BirkhoffQuery(TrigPolynomial.cosine(1, 1.0), "x", 10**6, 0, 0, pair)
    with pytest.raises(BudgetExceeded):
        birkhoff_direct(q, budget=1000)


@pytest.mark.parametrize("m", [5, 125, 625, 3125])
def test_ceiling_deviation_vs_direct(pair, ceiling, m):
    x, y = Fraction(1, 3), Fraction(2, 7)
    d, err = ceiling_deviation(ceiling, pair, m, x, y)
    assert d == pytest.approx(ceiling_direct(ceiling, pair, m, x, y), abs=1e-10 + err)


def test_deviation_smallness_at_q(pair, ceiling):
    # S_q of the x layers is small away from the C-set boundary
    tol = ToleranceSchema()
    q = pair.q(1)
    xs = [Fraction(k, 97) for k in range(97)]
    from gordonflow.birkhoff import axis_deviation
    d, _ = axis_deviation(ceiling, pair, q, xs, "x")
    # only the finer levels contribute, and they are far below the level-one amplitude
    assert np.max(np.abs(d)) < ceiling.info[0].amp_x * q


def test_recurrence_flat(pair):
    c = constant_ceiling()
    assert ceiling_deviation(c, pair, 10**9, Fraction(1, 3), 0)[0] == 0.0


def test_recurrence_full(pair, ceiling):
    for level in (1, 2):
        rep = recurrence_estimate(ceiling, pair, level, grid=16, y_grid=4, direct_points=2)
        assert rep.passed, rep.to_json()
        if rep.direct_checked:
            assert rep.direct_max_diff < 1e-8


def test_stretch_zero_and_single(pair, ceiling):
    prof = stretch_profile(ceiling, pair, 1, 0, grid=1)
    assert len(prof.rows) == 1 and not prof.rows[0][4] and prof.rows[0][2] == 0.0
    lo, hi = stretch_window(pair, ceiling, 1, "x")
    assert lo < hi


def test_stretch_inside_window(pair, ceiling):
    lo, hi = stretch_window(pair, ceiling, 1, "x")
    m = int(math.ceil(lo))
    prof = stretch_profile(ceiling, pair, 1, m, grid=64)
    assert prof.in_window and prof.pass_fraction > 0.9


def test_stretch_bad_axis(pair, ceiling):
    with pytest.raises(PreconditionError):
        stretch_profile(ceiling, pair, 1, 10, axis="z")
    with pytest.raises(PreconditionError):
        stretch_profile(ceiling, pair, 9, 10)
