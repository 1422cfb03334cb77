"""Acceptance criteria 1-12 at their stated tolerances and runtime limits.

Each test records a verdict line (printed in the terminal summary) before
asserting, so failures are reported with the measured values.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE
from gordonflow.birkhoff import BirkhoffQuery, birkhoff_closed, birkhoff_direct, recurrence_estimate
from gordonflow.ceiling import build_ceiling, constant_ceiling, verify_properties
from gordonflow.cfrac import best_approx_check, convergents, design_pair, golden_quotients, parse_schedule, two_sided_error
from gordonflow.config import preset
from gordonflow.diagnostics import (c_set_fraction, c_set_length, correlation_decay, cos_x, localization_contrast,
                                    mixing_times, recurrence_census)
from gordonflow.flow import FlowMap, FlowPoint, MeasureSampler
from gordonflow.pipeline import block_study, gordon_study
from gordonflow.schrodinger import PotentialTrace, gordon_check, gordon_defect, smooth_observable, spectrum_of
from gordonflow.trig import TrigPolynomial

CFG = preset("desk-small")

pytestmark = pytest.mark.slow


def record(k, ok, t0, limit, detail):
    secs = time.perf_counter() - t0
    ok = bool(ok) and secs < limit
    ACCEPTANCE[k] = (ok, secs, f"{detail}; limit {limit:.0f}s")
    assert ok, ACCEPTANCE[k]


@pytest.fixture(scope="module")
def desk():
    pair = design_pair(parse_schedule(CFG.schedule), CFG.levels, CFG.seeds())
    ceiling = build_ceiling(pair, CFG.amplitude, CFG.n0, harmonic_cap=CFG.harmonic_cap)
    return pair, ceiling, FlowMap(pair, ceiling)


def test_criterion_01_continued_fractions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(50):
        L = int(rng.integers(3, 13))
        a = [int(rng.integers(0, 10**6))] + [int(v) for v in rng.integers(1, 10**6 + 1, L - 1)]
        t = convergents(a)
        alpha = t.value()
        for n in range(1, len(t)):
            bad += t.p[n - 1] * t.q[n] - t.p[n] * t.q[n - 1] != (-1) ** n
        for n in range(len(t) - 2):
            lo, hi = two_sided_error(t, n)
            e = (-1) ** n * (alpha - t.convergent(n))
            # for a finite fraction the lower bound is strict except at the last step
            bad += not (lo <= e <= hi)
    record(1, bad == 0, t0, 1, f"{bad} exact violations over 50 lists")


def test_criterion_02_best_approximation():
    t0 = time.perf_counter()
    tables = [convergents(golden_quotients(26))]
    rng = np.random.default_rng(2)
    while len(tables) < 11:
        a = [0] + [int(v) for v in rng.integers(1, 20, 30)]
        t = convergents(a)
        if t.q[-1] > 10**4 + 1:
            tables.append(t)
    viol = sum(len(best_approx_check(t, k_max=10**4).violations) for t in tables)
    record(2, viol == 0, t0, 10, f"{viol} violations, golden + 10 random, k_max=1e4")


def test_criterion_03_birkhoff_closed_form(desk):
    pair = desk[0]
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        J = int(rng.integers(1, 6))
        c = {j: complex(rng.normal(), rng.normal()) / (j * j) for j in range(1, J + 1)}
        p = TrigPolynomial.from_dict(c)
        m = int(rng.integers(0, 10**4 + 1))
        x = Fraction(int(rng.integers(0, 2**20)), 2**20)
        q = BirkhoffQuery(p, "x" if rng.random() < 0.5 else "y", m, x, x, pair)
        worst = max(worst, abs(birkhoff_closed(q)[0] - birkhoff_direct(q)))
    worst_c = 0.0
    for _ in range(500):
        p = TrigPolynomial.from_dict({j: rng.normal() for j in range(1, 4)})
        m, n = (int(v) for v in rng.integers(0, 5000, 2))
        x = Fraction(int(rng.integers(0, 2**20)), 2**20)
        a = birkhoff_closed(BirkhoffQuery(p, "x", m + n, x, 0, pair))[0]
        b = birkhoff_closed(BirkhoffQuery(p, "x", m, x, 0, pair))[0]
        c2 = birkhoff_closed(BirkhoffQuery(p, "x", n, (x + m * pair.alpha_value) % 1, 0, pair))[0]
        worst_c = max(worst_c, abs(a - b - c2))
    record(3, worst <= 1e-9 and worst_c <= 1e-8, t0, 30,
           f"closed vs direct max {worst:.2e} (<=1e-9), cocycle max {worst_c:.2e} (<=1e-8)")


def test_criterion_04_properties(desk):
    pair, ceiling, _ = desk
    t0 = time.perf_counter()
    rep = verify_properties(ceiling, pair, CFG.tolerances)
    p1 = rep.for_prop(1)
    rest = [e for e in rep.entries if e.prop != 1]
    ok = rep.passed() and all(e.margin == 0.0 and e.measured == 0.0 for e in p1) and all(e.margin > 0 for e in rest)
    worst = min(rest, key=lambda e: e.margin)
    record(4, ok, t0, 300, f"{len(rep.entries)} entries; prop 1 margin 0; "
                             f"smallest other margin {worst.margin:.2e} (prop {worst.prop}, level {worst.level})")


def test_criterion_05_super_recurrence(desk):
    pair, ceiling, _ = desk
    t0 = time.perf_counter()
    r = CFG.recurrence
    rep2 = recurrence_estimate(ceiling, pair, 2, r.grid, r.y_grid, CFG.tolerances, r.direct_points)
    rep1 = recurrence_estimate(ceiling, pair, 1, r.grid, r.y_grid, CFG.tolerances, r.direct_points)
    direct_ok = rep1.direct_checked > 0 and rep1.direct_max_diff < 1e-9
    # level 2 time exceeds the direct budget, so only level 1 is cross-checked
    ok = rep2.passed and rep1.passed and direct_ok and (pair.t(2) > 10**7 or rep2.direct_checked > 0)
    record(5, ok, t0, 600, f"level 2: max dev {rep2.max_deviation:.2e} + err {rep2.error_bound:.1e} "
                           f"<= {rep2.tolerance:.2e}; level 1 direct diff {rep1.direct_max_diff:.1e}")


def test_criterion_06_flow(desk):
    pair, _, flow = desk
    flat = FlowMap(pair, constant_ceiling())
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    err_flat = 0.0
    for _ in range(500):
        p = FlowPoint(Fraction(int(rng.integers(0, 2**30)), 2**30), Fraction(int(rng.integers(0, 2**30)), 2**30),
                      float(rng.random()))
        t = float(rng.uniform(-1e4, 1e4))
        img = flat.advance(p, t)
        n = math.floor(p.s + t)
        ok_base = img.x == (p.x + n * flat.alpha) % 1 and img.y == (p.y + n * flat.alpha_prime) % 1
        err_flat = max(err_flat, abs(img.s - (p.s + t - n)) if ok_base else math.inf)
    pts = MeasureSampler(6).sample(500, flow.ceiling)
    err_sg, amb = 0.0, 0
    for p in pts:
        a, b = (float(v) for v in rng.uniform(0, 1e3, 2))
        one = flow.advance(flow.advance(p, a), b)
        two = flow.advance(p, a + b)
        if one.ambiguous or two.ambiguous:
            amb += 1
            continue
        err_sg = max(err_sg, flow.quotient_distance(one, two))
    record(6, err_flat <= 1e-12 and err_sg <= 1e-9, t0, 60,
           f"flat formula max {err_flat:.1e}; semigroup max {err_sg:.1e} over {500 - amb} triples "
           f"({amb} ambiguous skipped)")


def test_criterion_07_census(desk):
    pair, ceiling, flow = desk
    t0 = time.perf_counter()
    cen = recurrence_census(flow, MeasureSampler(CFG.seed), CFG.census.levels, 10**4, CFG.tolerances)
    xs = MeasureSampler(CFG.seed + 11, "base").sample(10**4, ceiling)
    lines, ok = [], True
    for n, level in ((2, 1), (3, 2)):
        p, se = c_set_fraction([z.x for z in xs], pair.q(level), n)
        exact = c_set_length(n)
        good = abs(p - exact) <= 3 * se if se > 0 else p == exact
        ok &= good
        lines.append(f"|C_{n}| {p:.4f} vs {exact:.4f}")
    wf = cen.witness_fraction()
    record(7, ok and wf >= 0.4, t0, 600, "; ".join(lines) + f"; witness fraction {wf:.3f} (>=0.40)")


def test_criterion_08_free_spectrum():
    t0 = time.perf_counter()
    ev, _ = spectrum_of(np.zeros(5))
    e1 = float(np.max(np.abs(ev - np.sort(2 * np.cos(np.pi * np.arange(1, 6) / 6)))))
    rng = np.random.default_rng(8)
    v = rng.uniform(-3, 3, 200)
    ev2, _ = spectrum_of(v)
    H = np.diag(v) + np.eye(200, k=1) + np.eye(200, k=-1)
    e2 = float(np.max(np.abs(ev2 - np.linalg.eigvalsh(H))))
    record(8, e1 <= 1e-12 and e2 <= 1e-8, t0, 10, f"free error {e1:.1e}; dense oracle error {e2:.1e}")


def test_criterion_09_gordon_contrast(desk):
    pair, ceiling, flow = desk
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    periodic = 0.0
    for period in (1, 2, 5, 7, 13):
        base = rng.uniform(-2, 2, period)
        W = 40 * period
        tr = PotentialTrace.from_values(base[np.arange(-W, W + 1) % period])
        periodic = max(periodic, max(gordon_defect(tr, c * period) for c in (1, 2, 3)))
    all_fail = 0
    cands = list(range(10, 61, 5))
    for _ in range(100):
        tr = PotentialTrace.from_values(rng.normal(size=2 * 130 + 1))
        rep = gordon_check(tr, cands)
        all_fail += not any(rep.passes)
    pts = MeasureSampler(CFG.seed + 1).sample(20, ceiling)
    doc = gordon_study(flow, smooth_observable(), pts, pair, ceiling, CFG.gordon.k_cap, CFG.seed)
    ok = periodic == 0.0 and all_fail == 100 and doc["ratio"] >= 10
    # not part of the verdict: how many single points reach the 10x contrast
    hits = sum(r["control"][0] >= 10 * r["structured"][0] for r in doc["rows"])
    record(9, ok, t0, 600, f"periodic delta {periodic}; iid failed everywhere in {all_fail}/100; "
                           f"structured/control medians {doc['median_structured']:.2e}/{doc['median_control']:.2e} "
                           f"ratio {doc['ratio']:.1f} (>=10); {hits}/20 points individually >=10x")


def test_criterion_10_block_bound():
    t0 = time.perf_counter()
    doc = block_study(1000, CFG.block.period, CFG.block.k, CFG.seed)
    ok = doc["fraction"] == 1.0 and doc["cayley_hamilton_agree"] == 1000
    record(10, ok, t0, 60, f"held {doc['satisfied']}/1000; Cayley-Hamilton agrees {doc['cayley_hamilton_agree']}/1000")


def test_criterion_11_mixing(desk):
    pair, ceiling, flow = desk
    m = CFG.mixing
    t0 = time.perf_counter()
    times = mixing_times(m.t_min, m.t_max, m.count, CFG.seed)
    full = correlation_decay(flow, cos_x, cos_x, times, tolerance=m.tolerance, activity=m.activity)
    flat = correlation_decay(FlowMap(pair, constant_ceiling()), cos_x, cos_x, times, tolerance=m.tolerance,
                             activity=m.activity)
    rf, rc = full.spearman(), flat.spearman()
    ok = rf <= m.spearman_max and rc > m.control_min and full.converged and flat.converged
    record(11, ok, t0, 1200, f"Spearman full {rf:.3f} (<= {m.spearman_max}), control {rc:.3f} (> {m.control_min}); "
                             f"grid {full.grid}, converged {full.converged}/{flat.converged}")


def test_criterion_12_localization(desk):
    pair, ceiling, flow = desk
    t0 = time.perf_counter()
    N = (CFG.spectrum.size - 1) // 2
    rep = localization_contrast(flow, smooth_observable(), CFG.spectrum.points, N, CFG.seed)
    s, c = rep.medians("ipr")
    stat, p = rep.ranksum("ipr")
    record(12, s <= c, t0, 900, f"median IPR structured {s:.4f} vs control {c:.4f} at size {2 * N + 1}; "
                                f"rank-sum {stat:.2f}, p={p:.2g}")
