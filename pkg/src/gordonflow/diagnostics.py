"""Statistical experiments: recurrence census, correlation decay, localization contrast."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .birkhoff import factor_array
from .ceiling import ToleranceSchema
from .errors import PreconditionError
from .flow import FlowMap, MeasureSampler, in_c_set, orbit_recurrences
from .schrodinger import (PotentialTrace, localization_metrics, sample_potential,
                          truncated_spectrum)


# ---------------------------------------------------------------- census

def c_set_length(n: int) -> float:
    return 1.0 / n - 2.0 / n**2


def c_set_fraction(xs, q: int, n: int) -> tuple[float, float]:
    """Empirical measure of {1/n^2 <= {q x} <= 1/n - 1/n^2} and its standard error."""
    hits = np.array([in_c_set(x, q, n) for x in xs], float)
    p = hits.mean()
    return float(p), float(math.sqrt(max(p * (1 - p), 0.0) / len(hits)))


def alpha_hat(d: float, t) -> float | None:
    if not 0 < d < 1:
        return None
    v = -math.log(d)
    if v <= 0:
        return None
    return math.log(v) / math.log(float(t))


@dataclass
class CensusRow:
    point: int
    levels_in_c: list
    distances: list
    witnesses: list
    alpha_hats: list


@dataclass
class RecurrenceCensus:
    levels: list            # level indices
    widths: list
    times: list
    radii: list
    rows: list = field(default_factory=list)

    def c_fraction(self, i: int) -> tuple[float, float]:
        h = np.array([r.levels_in_c[i] for r in self.rows], float)
        p = h.mean()
        return float(p), float(math.sqrt(p * (1 - p) / len(h)))

    def witness_fraction(self, i: int | None = None) -> float:
        if i is None:
            return float(np.mean([any(r.witnesses) for r in self.rows]))
        return float(np.mean([r.witnesses[i] for r in self.rows]))

    def union_fraction(self) -> float:
        return float(np.mean([any(r.levels_in_c) for r in self.rows]))

    def independence_prediction(self) -> float:
        return 1.0 - float(np.prod([1.0 - c_set_length(n) for n in self.widths]))

    def summary(self) -> dict:
        out = {"samples": len(self.rows), "levels": []}
        for i, (lv, n, t, r) in enumerate(zip(self.levels, self.widths, self.times, self.radii)):
            p, se = self.c_fraction(i)
            ah = [row.alpha_hats[i] for row in self.rows if row.alpha_hats[i] is not None]
            out["levels"].append({"level": lv, "width": n, "t": str(t), "radius": r,
                                  "c_measure": p, "c_stderr": se, "c_exact": c_set_length(n),
                                  "c_target_lower": 1.0 / (2 * n),
                                  "witness_fraction": self.witness_fraction(i),
                                  "alpha_hat_median": float(np.median(ah)) if ah else None})
        u = self.union_fraction()
        out["union_fraction"] = u
        out["union_stderr"] = math.sqrt(u * (1 - u) / max(len(self.rows), 1))
        out["independence_prediction"] = self.independence_prediction()
        out["witness_fraction"] = self.witness_fraction()
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["point"]
            for lv in self.levels:
                head += [f"in_c_{lv}", f"distance_{lv}", f"witness_{lv}", f"alpha_hat_{lv}"]
            w.writerow(head)
            for r in self.rows:
                row = [r.point]
                for a, b, c, d in zip(r.levels_in_c, r.distances, r.witnesses, r.alpha_hats):
                    row += [int(a), repr(b), int(c), "" if d is None else repr(d)]
                w.writerow(row)


def recurrence_census(flow: FlowMap, sampler: MeasureSampler, n_levels: int, samples: int,
                      tolerances: ToleranceSchema | None = None, points=None) -> RecurrenceCensus:
    tol = tolerances or ToleranceSchema()
    if samples < 100:
        raise PreconditionError("census needs at least 100 samples")
    info = flow.ceiling.info[:n_levels]
    if len(info) < n_levels:
        raise PreconditionError(f"ceiling has only {len(info)} levels")
    pts = points if points is not None else sampler.sample(samples, flow.ceiling)
    times = [flow.pair.t(i.level) for i in info]
    census = RecurrenceCensus([i.level for i in info], [i.width for i in info], times,
                              [tol.radius(t) for t in times])
    for k, p in enumerate(pts):
        rec = orbit_recurrences(flow, p, times, tol.radius)
        census.rows.append(CensusRow(
            k, [in_c_set(p.x, i.q, i.width) for i in info], [r.distance for r in rec],
            [r.witness for r in rec], [alpha_hat(r.distance, r.t) for r in rec]))
    return census


# ---------------------------------------------------------------- correlations

@dataclass
class CorrelationSeries:
    times: np.ndarray
    values: np.ndarray
    refined: np.ndarray
    grid: tuple
    tolerance: float
    cov0: float

    @property
    def converged(self) -> bool:
        return bool(np.all(np.abs(self.values - self.refined) <= self.tolerance))

    def spearman(self) -> float:
        return float(stats.spearmanr(self.times, self.values).statistic)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "cor", "cor_refined"))
            for t, a, b in zip(self.times, self.values, self.refined):
                w.writerow((repr(float(t)), repr(float(a)), repr(float(b))))


class _AxisGrid:
    """Layer sums of one axis on the grid c_i = i/M, shifted by whole rotations."""

    def __init__(self, layers, M: int, rotation: Fraction):
        self.layers, self.M, self.rot = layers, M, rotation
        self.perm = [(p.stride * np.arange(M, dtype=object)) % M for p in layers]
        self.perm = [np.asarray(v, dtype=np.int64) for v in self.perm]

    def _shift(self, p, l):
        r = (l * p.stride * self.rot.numerator) % self.rot.denominator
        d = r / self.rot.denominator
        return np.exp(2j * np.pi * np.arange(-p.harmonics, p.harmonics + 1) * d)

    def values(self, l: int) -> np.ndarray:
        """sum of layers at c_i + l * rotation."""
        out = np.zeros(self.M)
        for p, perm in zip(self.layers, self.perm):
            out += p.on_grid(self.M, factors=self._shift(p, l))[perm]
        return out

    def deviation(self, m: int) -> np.ndarray:
        out = np.zeros(self.M)
        for p, perm in zip(self.layers, self.perm):
            Y, _ = factor_array(p.stride, p.harmonics, m, self.rot)
            out += np.real(p.on_grid(self.M, factors=Y))[perm]
        return out

    def coords(self, l: int) -> np.ndarray:
        r = (l * self.rot.numerator) % self.rot.denominator
        return np.mod(np.arange(self.M) / self.M + r / self.rot.denominator, 1.0)


def _correlation_on_grid(flow: FlowMap, f, g, times, Mx: int, My: int):
    c = flow.ceiling
    gx = _AxisGrid(c.x_layers, Mx, flow.alpha)
    gy = _AxisGrid(c.y_layers, My, flow.alpha_prime)
    X0, Y0 = gx.values(0), gy.values(0)
    phi = 1.0 + X0[:, None] + Y0[None, :]
    xs, ys = gx.coords(0), gy.coords(0)
    G = g(xs[:, None], ys[None, :])
    F0 = f(xs[:, None], ys[None, :])
    Z = phi.mean()
    mf = float((F0 * phi).mean() / Z)
    mg = float((G * phi).mean() / Z)
    cov0 = float((F0 * G * phi).mean() / Z - mf * mg)
    out = []
    for t in times:
        T = math.floor(t)
        tf = float(t - T)
        DX, DY = gx.deviation(T), gy.deviation(T)
        K = int(math.ceil(np.abs(DX).max() + np.abs(DY).max() + c.sup_layers() + 2))
        ms = range(-K, K + 2)
        # D_{T+j} on each axis by stepping from the closed form at T
        dx = {0: DX}
        dy = {0: DY}
        for j in range(1, K + 2):
            dx[j] = dx[j - 1] + gx.values(T + j - 1)
            dy[j] = dy[j - 1] + gy.values(T + j - 1)
        for j in range(1, K + 1):
            dx[-j] = dx[-j + 1] - gx.values(T - j)
            dy[-j] = dy[-j + 1] - gy.values(T - j)
        acc = np.zeros((Mx, My))
        cover = np.zeros((Mx, My))
        for j in ms[:-1]:
            lo = j + dx[j][:, None] + dy[j][None, :] - tf
            hi = j + 1 + dx[j + 1][:, None] + dy[j + 1][None, :] - tf
            ln = np.clip(np.minimum(hi, phi) - np.maximum(lo, 0.0), 0.0, None)
            if not ln.any():
                continue
            fv = f(gx.coords(T + j)[:, None], gy.coords(T + j)[None, :])
            acc += fv * ln
            cover += ln
        if np.max(np.abs(cover - phi)) > 1e-9:
            raise PreconditionError("fiber decomposition did not cover every fiber")
        val = float((acc * G).mean() / Z - mf * mg)
        out.append(abs(val))
    return np.array(out), cov0


def active_harmonics(poly, t_max: float, tol: float = 1e-3) -> int:
    """Smallest J with sum_{|j|>J} |c_j| * t_max <= tol."""
    a = np.abs(poly.coeffs)
    Jn = poly.harmonics
    tail = np.array([a[:Jn - J].sum() + a[Jn + J + 1:].sum() for J in range(Jn + 1)])
    ok = np.nonzero(tail * t_max <= tol)[0]
    return int(ok[0]) if len(ok) else Jn


def resolution(ceiling, t_max: float, per_period: int = 8, floor: int = 64, tol: float = 1e-3) -> tuple[int, int]:
    """Grid sizes resolving every layer whose Birkhoff sums matter up to t_max (powers of two)."""
    def need(layers):
        top = floor
        for p in layers:
            J = active_harmonics(p, t_max, tol)
            top = max(top, per_period * p.stride * J, 2 * p.harmonics + 2)
        return 1 << int(math.ceil(math.log2(top)))
    return need(ceiling.x_layers), need(ceiling.y_layers)


def correlation_decay(flow: FlowMap, f, g, times, grid: tuple | None = None, tolerance: float = 0.02,
                      max_points: int = 1 << 22, activity: float = 1e-3) -> CorrelationSeries:
    """|int f o T^t g dmu - int f dmu int g dmu| on M_phi for base observables f, g.

    mu is Lebesgue on M_phi normalized by int phi. For a base point z the fiber
    splits into pieces on which T^t lands in a fixed fiber, so the fiber
    integral is exact; only the base is discretized. Each value is recomputed on
    a grid refined by 2 in both directions to check convergence.
    """
    times = np.asarray(times, float)
    if np.any(times < 0):
        raise PreconditionError("times must be >= 0")
    if grid is None:
        grid = resolution(flow.ceiling, float(times.max()) if len(times) else 1.0, tol=activity)
    Mx, My = grid
    if 4 * Mx * My > max_points:
        raise PreconditionError(f"grid {Mx}x{My} too large for the point budget {max_points}")
    vals, cov0 = _correlation_on_grid(flow, f, g, times, Mx, My)
    ref, _ = _correlation_on_grid(flow, f, g, times, 2 * Mx, 2 * My)
    return CorrelationSeries(times, vals, ref, (Mx, My), tolerance, cov0)


def mixing_times(lo: float = 1e2, hi: float = 1e5, count: int = 60, seed: int = 0) -> np.ndarray:
    """Log-spaced times with a seeded jitter inside each bin."""
    rng = np.random.default_rng(seed)
    edges = np.logspace(math.log10(lo), math.log10(hi), count + 1)
    return np.exp(np.log(edges[:-1]) + rng.random(count) * np.diff(np.log(edges)))


def cos_x(x, y):
    return np.cos(2 * np.pi * x) + 0.0 * y


# ---------------------------------------------------------------- localization contrast

def trace_statistic(trace: PotentialTrace, N: int, edge_tol: float = 1e-3) -> dict:
    evals, vecs = truncated_spectrum(trace, N)
    m = localization_metrics(vecs)
    keep = m.interior(edge_tol)
    if not keep.any():
        keep = np.ones_like(keep)
    return {"ipr": float(np.median(m.ipr[keep])),
            "decay_rate": float(np.nanmedian(m.decay_rate[keep])),
            "kept": int(keep.sum())}


def control_trace(trace: PotentialTrace, rng, scale: float = 1.0) -> PotentialTrace:
    """i.i.d. Gaussian trace matched in mean and variance (variance times scale**2)."""
    v = rng.normal(trace.samples.mean(), trace.samples.std() * scale, len(trace.samples))
    return PotentialTrace.from_values(v)


@dataclass
class ContrastReport:
    structured: list
    control: list
    N: int

    def _col(self, rows, key):
        return np.array([r[key] for r in rows], float)

    def medians(self, key="ipr") -> tuple[float, float]:
        return float(np.median(self._col(self.structured, key))), float(np.median(self._col(self.control, key)))

    def ranksum(self, key="ipr"):
        r = stats.ranksums(self._col(self.structured, key), self._col(self.control, key))
        return float(r.statistic), float(r.pvalue)

    def summary(self) -> dict:
        out = {"N": self.N, "samples": len(self.structured)}
        for key in ("ipr", "decay_rate"):
            s, c = self._col(self.structured, key), self._col(self.control, key)
            stat, p = self.ranksum(key)
            out[key] = {"structured_median": float(np.median(s)), "control_median": float(np.median(c)),
                        "structured_quartiles": [float(v) for v in np.percentile(s, [25, 75])],
                        "control_quartiles": [float(v) for v in np.percentile(c, [25, 75])],
                        "ranksum_statistic": stat, "ranksum_p": p}
        return out

    def to_json(self) -> dict:
        return {"schema": "contrast-report/1", "summary": self.summary(),
                "structured": self.structured, "control": self.control}


def localization_contrast(flow: FlowMap, observable, samples: int = 20, N: int = 200, seed: int = 0,
                          control_scale: float = 1.0, points=None) -> ContrastReport:
    if samples < 20:
        raise PreconditionError("need at least 20 samples")
    if N < 200:
        raise PreconditionError("need N >= 200")
    pts = points if points is not None else MeasureSampler(seed).sample(samples, flow.ceiling)
    rng = np.random.default_rng(seed + 101)
    s_rows, c_rows = [], []
    for p in pts[:samples]:
        tr = sample_potential(flow, observable, p, N)
        s_rows.append(trace_statistic(tr, N))
        c_rows.append(trace_statistic(control_trace(tr, rng, control_scale), N))
    return ContrastReport(s_rows, c_rows, N)


def control_contrast(traces_a, traces_b, N: int) -> ContrastReport:
    return ContrastReport([trace_statistic(t, N) for t in traces_a], [trace_statistic(t, N) for t in traces_b], N)


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=str)
