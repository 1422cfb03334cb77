import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gordonflow.diagnostics import (alpha_hat, c_set_fraction, c_set_length, control_contrast, correlation_decay,
                                    cos_x, localization_contrast, mixing_times, recurrence_census, resolution,
                                    active_harmonics, trace_statistic)
from gordonflow.errors import PreconditionError
from gordonflow.flow import MeasureSampler
from gordonflow.schrodinger import PotentialTrace, smooth_observable
from gordonflow.trig import TrigPolynomial


def test_c_set_length_matches_sampling():
    xs = [Fraction(k, 5000) for k in range(5000)]
    p, se = c_set_fraction(xs, 3, 8)
    assert p == pytest.approx(c_set_length(8), abs=2e-3)


@pytest.mark.parametrize("d,t,expected", [(0.5, 10, math.log(math.log(2)) / math.log(10)),
                                          (0.0, 10, None), (1.0, 10, None)])
def test_alpha_hat(d, t, expected):
    got = alpha_hat(d, t)
    assert got == expected if expected is None else got == pytest.approx(expected)


def test_mixing_times():
    t = mixing_times(count=60)
    assert len(t) == 60 and t.min() >= 1e2 and t.max() <= 1e5 and np.all(np.diff(t) > 0)
    assert np.array_equal(t, mixing_times(count=60))


def test_active_harmonics():
    p = TrigPolynomial.from_dict({1: 1.0, 2: 1e-3, 3: 1e-6})
    assert active_harmonics(p, 1.0, 1e-3) == 2
    assert active_harmonics(p, 1e-9, 1e-3) == 0


def test_correlation_constant_is_zero(flow):
    one = lambda x, y: np.ones(np.broadcast(x, y).shape)
    s = correlation_decay(flow, one, one, [10.0, 123.4])
    assert np.all(s.values < 1e-12)


@pytest.mark.parametrize("t", [0.3, 5.0, 17.75, 1234.5])
def test_correlation_flat_closed_form(flat, t):
    # phi = 1: the flow is a suspension of the rotation with unit fibers
    s = correlation_decay(flat, cos_x, cos_x, [t], grid=(64, 64))
    n, fr = math.floor(t), t - math.floor(t)
    a = float(flat.alpha)
    ref = 0.5 * ((1 - fr) * math.cos(2 * math.pi * float((n * flat.alpha) % 1))
                 + fr * math.cos(2 * math.pi * float(((n + 1) * flat.alpha) % 1)))
    assert s.values[0] == pytest.approx(abs(ref), abs=1e-9)
    assert s.cov0 == pytest.approx(0.5)


def test_correlation_vs_monte_carlo(flow):
    t = 3.7
    s = correlation_decay(flow, cos_x, cos_x, [t])
    pts = MeasureSampler(5).sample(3000, flow.ceiling)
    vals = []
    for p in pts:
        q = flow.advance(p, t)
        vals.append(math.cos(2 * math.pi * float(q.x)) * math.cos(2 * math.pi * float(p.x)))
    mx = np.mean([math.cos(2 * math.pi * float(p.x)) for p in pts])
    est = abs(np.mean(vals) - mx * mx)
    se = np.std(vals) / math.sqrt(len(vals))
    assert est == pytest.approx(s.values[0], abs=4 * se + 0.01)


def test_correlation_guards(flow):
    with pytest.raises(PreconditionError):
        correlation_decay(flow, cos_x, cos_x, [-1.0], grid=(64, 64))
    with pytest.raises(PreconditionError):
        correlation_decay(flow, cos_x, cos_x, [1.0], grid=(4096, 4096), max_points=1 << 20)


def test_resolution_powers_of_two(ceiling):
    Mx, My = resolution(ceiling, 1e5)
    assert Mx & (Mx - 1) == 0 and My & (My - 1) == 0 and Mx >= 64


def test_census_single_level(flow):
    c = recurrence_census(flow, MeasureSampler(2), 1, 200)
    s = c.summary()
    assert s["samples"] == 200 and len(s["levels"]) == 1
    assert s["independence_prediction"] == pytest.approx(c_set_length(c.widths[0]))
    with pytest.raises(PreconditionError):
        recurrence_census(flow, MeasureSampler(2), 1, 50)
    with pytest.raises(PreconditionError):
        recurrence_census(flow, MeasureSampler(2), 5, 200)


def test_census_csv(tmp_path, flow):
    c = recurrence_census(flow, MeasureSampler(4), 2, 100)
    c.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert len(lines) == 101 and lines[0].startswith("point,in_c_1")


def _iid(rng, sd, n=20, N=200):
    return [PotentialTrace.from_values(rng.normal(0, sd, 2 * N + 1)) for _ in range(n)]


def test_control_vs_control_not_significant():
    rng = np.random.default_rng(0)
    rep = control_contrast(_iid(rng, 1.0), _iid(rng, 1.0), 200)
    assert rep.ranksum("ipr")[1] > 0.05


def test_strong_vs_weak_disorder():
    rng = np.random.default_rng(1)
    rep = control_contrast(_iid(rng, 3.0), _iid(rng, 0.3), 200)
    s, c = rep.medians("ipr")
    assert s > c and rep.ranksum("ipr")[1] < 0.01


def test_trace_statistic_free():
    st_ = trace_statistic(PotentialTrace.from_values(np.zeros(401)), 200)
    assert st_["ipr"] < 0.01


def test_localization_contrast_guards(flow):
    with pytest.raises(PreconditionError):
        localization_contrast(flow, smooth_observable(), samples=5)
    with pytest.raises(PreconditionError):
        localization_contrast(flow, smooth_observable(), N=50)
