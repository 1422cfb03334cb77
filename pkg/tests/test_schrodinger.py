import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gordonflow.errors import PreconditionError
from gordonflow.flow import FlowPoint
from gordonflow.schrodinger import (PotentialTrace, TransferCocycle, auto_candidates, cayley_hamilton_check,
                                    constant_observable, embed, gordon_block_bound, gordon_bound, gordon_check,
                                    gordon_defect, holder_check, holder_observable, lipschitz_estimate,
                                    localization_metrics, sample_potential, smooth_observable, spectrum_of,
                                    truncated_spectrum)


def test_constant_observable_trace(flow):
    p = flow.canonical(Fraction(1, 5), Fraction(1, 7), 0.2)
    tr = sample_potential(flow, constant_observable(2.5), p, 10)
    assert np.all(tr.samples == 2.5) and len(tr.samples) == 21


def test_flat_flow_trace_is_rotation(flat):
    # phi = 1: T^n moves the base by n alpha and tau is unchanged
    p = FlowPoint(Fraction(1, 3), Fraction(1, 4), 0.25)
    tr = sample_potential(flat, smooth_observable(), p, 6)
    for n in range(-6, 7):
        X = float(p.x) + n * float(flat.alpha) + 0.25 * float(flat.alpha)
        Y = float(p.y) + n * float(flat.alpha_prime) + 0.25 * float(flat.alpha_prime)
        ref = math.cos(2 * math.pi * X) + math.cos(2 * math.pi * Y) + math.cos(2 * math.pi * 0.25)
        assert tr[n] == pytest.approx(ref, abs=1e-9)


def test_embedding_continuous_across_fiber_top(flow):
    obs = smooth_observable()
    z = FlowPoint(Fraction(2, 9), Fraction(3, 11), 0.0)
    h = flow.phi(z.x, z.y)
    top = FlowPoint(z.x, z.y, math.nextafter(h, 0.0))
    nxt = flow.advance(top, 1e-12)
    assert abs(obs(flow, top) - obs(flow, nxt)) < 1e-9
    X, Y, tau = embed(flow, z)
    assert tau == 0.0


def test_free_spectrum():
    ev, _ = spectrum_of(np.zeros(5))
    assert np.allclose(ev, sorted(2 * np.cos(np.pi * np.arange(1, 6) / 6)))


@given(st.floats(-3, 3))
def test_constant_shift(c):
    ev0, _ = spectrum_of(np.zeros(9))
    ev, _ = spectrum_of(np.full(9, c))
    assert np.allclose(ev, ev0 + c)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=41).filter(lambda v: len(v) % 2 == 1))
def test_spectrum_vs_dense(v):
    tr = PotentialTrace.from_values(v)
    N = tr.W
    ev, _ = truncated_spectrum(tr, N)
    H = np.diag(v) + np.eye(len(v), k=1) + np.eye(len(v), k=-1)
    assert np.allclose(ev, np.linalg.eigvalsh(H), atol=1e-9)
    # Gershgorin
    assert ev.min() >= min(v) - 2 - 1e-9 and ev.max() <= max(v) + 2 + 1e-9


def test_truncation_guard():
    tr = PotentialTrace.from_values(np.zeros(11))
    with pytest.raises(PreconditionError):
        truncated_spectrum(tr, 6)


def test_ipr_extremes():
    M = 50
    delta = np.zeros((M, 1)); delta[20] = 1
    flat_v = np.ones((M, 1))
    assert localization_metrics(delta).ipr[0] == pytest.approx(1.0)
    assert localization_metrics(flat_v).ipr[0] == pytest.approx(1 / M)
    with pytest.raises(PreconditionError):
        localization_metrics(np.zeros((4, 1)))


def test_decay_rate_of_exponential():
    n = np.arange(-40, 41)
    v = np.exp(-0.3 * np.abs(n))
    assert localization_metrics(v).decay_rate[0] == pytest.approx(0.3, rel=1e-6)


def test_restrict_and_csv(tmp_path):
    tr = PotentialTrace.from_values(np.arange(11.0))
    assert tr.restrict(2).samples.tolist() == [3, 4, 5, 6, 7]
    tr.to_csv(tmp_path / "t.csv")
    back = PotentialTrace.from_csv(tmp_path / "t.csv")
    assert np.array_equal(back.samples, tr.samples)
    with pytest.raises(PreconditionError):
        tr.restrict(9)
    with pytest.raises(PreconditionError):
        PotentialTrace.from_values([1.0, 2.0])


@pytest.mark.parametrize("period", [1, 3, 7])
def test_gordon_periodic_zero(period):
    rng = np.random.default_rng(period)
    base = rng.uniform(-2, 2, period)
    W = 10 * period
    tr = PotentialTrace.from_values(base[np.arange(-W, W + 1) % period])
    for mult in (1, 2, 3):
        assert gordon_defect(tr, mult * period) == 0.0


def test_gordon_iid_fails():
    rng = np.random.default_rng(0)
    for _ in range(20):
        tr = PotentialTrace.from_values(rng.normal(size=121))
        rep = gordon_check(tr, range(10, 31, 5))
        assert not any(rep.passes)


@given(st.floats(-10, 10))
def test_gordon_shift_invariant(c):
    rng = np.random.default_rng(1)
    v = rng.normal(size=41)
    a = gordon_defect(PotentialTrace.from_values(v), 7)
    b = gordon_defect(PotentialTrace.from_values(v + c), 7)
    assert b == pytest.approx(a, abs=1e-12)


def test_gordon_defect_window_guard():
    with pytest.raises(PreconditionError):
        gordon_defect(PotentialTrace.from_values(np.zeros(11)), 3)


def test_gordon_report_json():
    rep = gordon_check(PotentialTrace.from_values(np.zeros(41)), [2, 5])
    doc = rep.to_json()
    assert doc["entries"][0]["index"] == 2 and doc["entries"][1]["threshold"] == 3.0**-5
    assert all(rep.passes)


def test_auto_candidates(pair, ceiling):
    c = auto_candidates(pair, ceiling, 2 * pair.t(1))
    assert c == [(pair.t(1), ceiling.info[0].width)]


def test_gordon_bound_logs():
    assert gordon_bound(1.0, 1.0, 1.0, 3, 0.0) == 0.0
    assert gordon_bound(2.0, 0.5, 2.0, 3, 1e-4) == pytest.approx(2.0 * (2.0**6 * 1e-4) ** 0.5)


def test_transfer_determinant_and_free():
    tr = PotentialTrace.from_values(np.random.default_rng(2).normal(size=41))
    assert TransferCocycle(tr, 0.3).determinant_defect() < 1e-14
    # V = 0, E = 0: A^4 = I
    z = PotentialTrace.from_values(np.zeros(21))
    M, logs = TransferCocycle(z, 0.0).product(1, 4)
    assert np.allclose(M, np.eye(2)) and logs == 0.0


def test_backward_inverts_product():
    tr = PotentialTrace.from_values(np.random.default_rng(3).uniform(-2, 2, 41))
    tc = TransferCocycle(tr, 0.7)
    B, lb = tc.backward(5)
    M, lm = tc.product(-4, 0)
    assert np.allclose(B @ M * math.exp(lb + lm), np.eye(2), atol=1e-9)


def test_block_bound_zero_potential():
    tr = PotentialTrace.from_values(np.zeros(61))
    Phi = np.random.default_rng(4).normal(size=(50, 2))
    for E in (-1.9, 0.0, 1.3):
        bb = gordon_block_bound(tr, E, 7, Phi)
        assert bb.fraction == 1.0
        _, verdict = cayley_hamilton_check(tr, E, 7, Phi)
        assert verdict.all()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.floats(-4, 4), st.integers(0, 10**6))
def test_block_bound_periodic(period, E, seed):
    rng = np.random.default_rng(seed)
    base = rng.uniform(-2, 2, period)
    k = 3 * period
    W = 2 * k + 1
    tr = PotentialTrace.from_values(base[np.arange(-W, W + 1) % period])
    Phi = rng.normal(size=(4, 2))
    assert gordon_block_bound(tr, E, k, Phi).satisfied.all()
    resid, verdict = cayley_hamilton_check(tr, E, k, Phi)
    assert verdict.all()


def test_lipschitz_sample_guard(flow):
    with pytest.raises(PreconditionError):
        lipschitz_estimate(flow, samples=50)


def test_lipschitz_flat(flat):
    est = lipschitz_estimate(flat, samples=100)
    # the unit step of the flat flow is an isometry
    assert est.L == pytest.approx(1.2, rel=1e-6)


def test_holder_observable_constant(flow):
    obs = holder_observable(0.5, terms=12)
    chk = holder_check(obs, flow, pairs=50)
    assert chk.max_ratio <= chk.C1
