"""Sampled potentials along flow orbits, Gordon checks and localization diagnostics."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import PreconditionError
from .flow import FlowMap, FlowPoint


# ---------------------------------------------------------------- observables

def embed(flow: FlowMap, p: FlowPoint):
    """(X, Y, tau) = (x + tau alpha, y + tau alpha', tau) with tau = s / phi(z).

    The embedding identifies (z, phi(z)) with (z + (alpha, alpha'), 0), so any
    function of (X, Y) mod 1 and tau with matching periodicity is continuous on M_phi.
    """
    h = flow.phi(p.x, p.y)
    tau = p.s / h
    X = float(p.x) + tau * float(flow.alpha)
    Y = float(p.y) + tau * float(flow.alpha_prime)
    return X, Y, tau


@dataclass
class Observable:
    name: str
    func: object = field(repr=False)   # (X, Y, tau) arrays -> values
    beta: float = 1.0
    C1: float = 1.0
    description: str = ""

    def values(self, X, Y, tau):
        return self.func(np.asarray(X, float), np.asarray(Y, float), np.asarray(tau, float))

    def __call__(self, flow: FlowMap, p: FlowPoint) -> float:
        X, Y, tau = embed(flow, p)
        return float(self.values(X, Y, tau))


def smooth_observable() -> Observable:
    """V1 = cos 2pi X + cos 2pi Y + cos 2pi tau (Lipschitz)."""
    f = lambda X, Y, t: np.cos(2 * np.pi * X) + np.cos(2 * np.pi * Y) + np.cos(2 * np.pi * t)
    return Observable("V1", f, 1.0, 2 * np.pi * 3, "cos 2pi X + cos 2pi Y + cos 2pi tau")


def holder_observable(beta: float = 0.5, terms: int = 20) -> Observable:
    """V2: lacunary series sum_k 2^(-k beta) cos(2pi 2^k .) in each of X, Y, tau."""
    w = 2.0 ** (-beta * np.arange(terms))
    fr = 2.0 ** np.arange(terms)

    def f(X, Y, t):
        out = 0.0
        for v in (X, Y, t):
            out = out + np.tensordot(np.cos(2 * np.pi * np.multiply.outer(v, fr)), w, axes=([-1], [0]))
        return out

    # |W(a) - W(b)| <= C |a-b|^beta with C bounded by the geometric series on both sides of 2^k ~ 1/d
    c = 3 * (2 * np.pi / (2 ** (1 - beta) - 1) + 2 / (1 - 2 ** (-beta)))
    return Observable("V2", f, beta, float(c), f"lacunary series, beta={beta}, {terms} terms")


def constant_observable(c: float) -> Observable:
    return Observable("const", lambda X, Y, t: np.full(np.shape(X), float(c)), 1.0, 0.0, f"constant {c}")


@dataclass
class HolderCheck:
    C1: float
    max_ratio: float
    violated: bool
    pairs: int


def holder_check(obs: Observable, flow: FlowMap, pairs: int = 1000, seed: int = 0) -> HolderCheck:
    """Empirical |V(p) - V(q)| / d(p, q)^beta over nearby random pairs."""
    from .flow import MeasureSampler

    rng = np.random.default_rng(seed + 1)
    pts = MeasureSampler(seed, "base").sample(pairs, flow.ceiling)
    worst = 0.0
    for p in pts:
        d = 10.0 ** rng.uniform(-6, -1)
        v = rng.normal(size=3)
        v *= d / np.linalg.norm(v)
        q = flow.canonical(p.x + Fraction(float(v[0])), p.y + Fraction(float(v[1])), p.s + v[2])
        dist = flow.quotient_distance(p, q)
        if dist == 0:
            continue
        worst = max(worst, abs(obs(flow, p) - obs(flow, q)) / dist**obs.beta)
    violated = worst > obs.C1
    if violated:
        warnings.warn(f"Hoelder constant of {obs.name} inflated from {obs.C1:.3g} to {1.1 * worst:.3g}")
        obs.C1 = 1.1 * worst
    return HolderCheck(obs.C1, worst, violated, pairs)


# ---------------------------------------------------------------- traces

@dataclass
class PotentialTrace:
    base: FlowPoint
    W: int
    samples: np.ndarray
    ambiguous: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if len(self.samples) != 2 * self.W + 1:
            raise PreconditionError("trace needs 2W+1 samples")
        if not np.all(np.isfinite(self.samples)):
            raise PreconditionError("trace has non-finite samples")

    def __getitem__(self, n):
        """V(n) for -W <= n <= W (arrays allowed)."""
        return self.samples[np.asarray(n) + self.W]

    def restrict(self, W: int) -> "PotentialTrace":
        if W > self.W:
            raise PreconditionError("cannot widen a trace")
        return PotentialTrace(self.base, W, self.samples[self.W - W:self.W + W + 1].copy(),
                              self.ambiguous, dict(self.provenance))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("n", "V"))
            for n, v in zip(range(-self.W, self.W + 1), self.samples):
                w.writerow((n, repr(float(v))))

    @classmethod
    def from_csv(cls, path) -> "PotentialTrace":
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        try:
            n = [int(r["n"]) for r in rows]
            vals = [float(r["V"]) for r in rows]
        except (KeyError, TypeError, ValueError) as e:
            raise PreconditionError(f"{path}: not a trace file (columns n, V)") from e
        if not n:
            raise PreconditionError(f"{path}: empty trace")
        W = -n[0]
        if n != list(range(-W, W + 1)):
            raise PreconditionError("trace file must list n = -W..W in order")
        return cls(FlowPoint(Fraction(0), Fraction(0), 0.0), W, vals,
                   provenance={"file": str(path)})

    @classmethod
    def from_values(cls, values, base: FlowPoint | None = None) -> "PotentialTrace":
        values = np.asarray(values, float)
        if len(values) % 2 != 1:
            raise PreconditionError("need an odd number of samples")
        return cls(base or FlowPoint(Fraction(0), Fraction(0), 0.0), (len(values) - 1) // 2, values)


def sample_potential(flow: FlowMap, obs: Observable, point: FlowPoint, W: int) -> PotentialTrace:
    """V(T^n point) for |n| <= W by repeated unit steps in both directions."""
    if W < 1:
        raise PreconditionError("W must be >= 1")
    vals = np.empty(2 * W + 1)
    vals[W] = obs(flow, point)
    amb = 0
    for direction in (1, -1):
        p = point
        for n in range(1, W + 1):
            p = flow.advance(p, direction)
            amb += p.ambiguous
            vals[W + direction * n] = obs(flow, p)
    return PotentialTrace(point, W, vals, amb, {"observable": obs.name})


# ---------------------------------------------------------------- Gordon condition

def default_threshold(k_cap: int = 20):
    return lambda n, k: float(n) ** (-min(int(k), k_cap))


@dataclass
class GordonReport:
    candidates: list
    indices: list
    defects: list
    thresholds: list

    @property
    def passes(self) -> list:
        return [d <= t for d, t in zip(self.defects, self.thresholds)]

    def to_json(self) -> dict:
        return {"schema": "gordon-report/1",
                "entries": [{"k": str(k), "index": n, "defect": d, "threshold": t, "pass": d <= t}
                            for k, n, d, t in zip(self.candidates, self.indices, self.defects, self.thresholds)]}


def gordon_defect(trace: PotentialTrace, k: int) -> float:
    k = int(k)
    if k < 1 or 2 * k > trace.W:
        raise PreconditionError(f"candidate k={k} needs W >= {2 * k}, trace has W={trace.W}")
    l = np.arange(1, k + 1)
    v = trace[l]
    return float(max(np.max(np.abs(v - trace[l + k])), np.max(np.abs(v - trace[l - k]))))


def gordon_check(trace: PotentialTrace, candidates, threshold_rule=None, indices=None,
                 k_cap: int = 20) -> GordonReport:
    """Defect max_{1<=l<=k} |V(l) - V(l +- k)| per candidate.

    ``indices`` gives the sequence position n used in the threshold n^-k; by
    default the i-th candidate (0-based) gets n = i + 2.
    """
    rule = threshold_rule or default_threshold(k_cap)
    cands = [int(k) for k in candidates]
    if indices is None:
        indices = [i + 2 for i in range(len(cands))]
    defects = [gordon_defect(trace, k) for k in cands]
    thresholds = [rule(n, k) for n, k in zip(indices, cands)]
    return GordonReport(cands, list(indices), defects, thresholds)


def auto_candidates(pair, ceiling, W: int, multiples=(1, 2, 3)):
    """(k, n) pairs: t_n = q_n q'_n and small multiples that fit the window."""
    out = []
    for inf in ceiling.info:
        t = pair.t(inf.level)
        for c in multiples:
            if 2 * c * t <= W:
                out.append((c * t, inf.width))
    return out


def gordon_bound(C1: float, beta: float, L: float, k: int, distance: float) -> float:
    """C1 (L^(2k) d)^beta, evaluated in logs."""
    if distance <= 0:
        return 0.0
    e = beta * (2 * k * math.log(L) + math.log(distance))
    return C1 * math.exp(min(e, 700.0))


@dataclass
class LipschitzEstimate:
    L: float
    ratios: np.ndarray

    def histogram(self, bins: int = 20):
        return np.histogram(self.ratios, bins=bins)


def lipschitz_estimate(flow: FlowMap, samples: int = 200, seed: int = 0, scale: float = 1e-7) -> LipschitzEstimate:
    """max d(T p, T q) / d(p, q) over random nearby pairs, inflated by 1.2."""
    from .flow import MeasureSampler

    if samples < 100:
        raise PreconditionError("need at least 100 samples")
    rng = np.random.default_rng(seed + 7)
    pts = MeasureSampler(seed, "base").sample(samples, flow.ceiling)
    ratios = []
    for p in pts:
        v = rng.normal(size=3)
        v *= scale / np.linalg.norm(v)
        q = flow.canonical(p.x + Fraction(float(v[0])), p.y + Fraction(float(v[1])), p.s + v[2])
        d0 = flow.quotient_distance(p, q)
        if d0 == 0:
            continue
        d1 = flow.quotient_distance(flow.advance(p, 1), flow.advance(q, 1))
        ratios.append(d1 / d0)
    ratios = np.array(ratios)
    return LipschitzEstimate(max(1.0, 1.2 * float(ratios.max())), ratios)


# ---------------------------------------------------------------- spectra

def truncated_spectrum(trace: PotentialTrace, N: int):
    """Eigenpairs of the Dirichlet truncation to [-N, N], eigenvalues ascending."""
    if N < 0 or N > trace.W:
        raise PreconditionError(f"N={N} exceeds the trace window W={trace.W}")
    d = trace[np.arange(-N, N + 1)]
    return eigh_tridiagonal(d, np.ones(2 * N))


def spectrum_of(values) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, float)
    return eigh_tridiagonal(values, np.ones(len(values) - 1))


@dataclass
class LocalizationMetrics:
    ipr: np.ndarray
    decay_rate: np.ndarray
    edge_mass: np.ndarray

    def interior(self, tol: float = 1e-3) -> np.ndarray:
        return self.edge_mass < tol


def _side_decay(a: np.ndarray) -> tuple[float, int]:
    if len(a) < 3:
        return math.nan, 0
    env = np.maximum.accumulate(a[::-1])[::-1]
    r = np.arange(len(env))
    ok = env > 1e-300
    if ok.sum() < 3:
        return math.nan, 0
    slope = np.polyfit(r[ok], np.log(env[ok]), 1)[0]
    return -slope, int(ok.sum())


def localization_metrics(eigvecs, edge_fraction: float = 0.1) -> LocalizationMetrics:
    """IPR, envelope decay rate and edge mass per column."""
    V = np.asarray(eigvecs, float)
    if V.ndim == 1:
        V = V[:, None]
    norms = np.sum(V**2, axis=0)
    if np.any(norms == 0):
        raise PreconditionError("zero eigenvector")
    M = V.shape[0]
    ipr = np.sum(V**4, axis=0) / norms**2
    e = max(1, int(round(edge_fraction * M)))
    edge = (np.sum(V[:e] ** 2, axis=0) + np.sum(V[M - e:] ** 2, axis=0)) / norms
    rates = np.empty(V.shape[1])
    for j in range(V.shape[1]):
        a = np.abs(V[:, j])
        c = int(np.argmax(a))
        rl, wl = _side_decay(a[c::-1])
        rr, wr = _side_decay(a[c:])
        vals = [(r, w) for r, w in ((rl, wl), (rr, wr)) if w]
        rates[j] = sum(r * w for r, w in vals) / sum(w for _, w in vals) if vals else math.nan
    return LocalizationMetrics(ipr, rates, edge)


# ---------------------------------------------------------------- transfer matrices

class TransferCocycle:
    """A_E(n) = [[E - V(n), -1], [1, 0]] along a trace, with renormalized products."""

    def __init__(self, trace: PotentialTrace, E: float):
        self.trace = trace
        self.E = float(E)

    def matrix(self, n: int) -> np.ndarray:
        return np.array([[self.E - self.trace[n], -1.0], [1.0, 0.0]])

    def product(self, a: int, b: int):
        """A(b) ... A(a) as (matrix, log scale); identity when b < a."""
        M = np.eye(2)
        logs = 0.0
        for n in range(a, b + 1):
            M = self.matrix(n) @ M
            s = np.abs(M).max()
            if s > 1e100:
                M /= s
                logs += math.log(s)
        return M, logs

    def forward(self, k: int):
        """Maps (u_1, u_0) to (u_(k+1), u_k)."""
        return self.product(1, k)

    def backward(self, k: int):
        """Maps (u_1, u_0) to (u_(1-k), u_(-k)): inverse of A(0) ... A(1-k)."""
        M, logs = self.product(1 - k, 0)
        # unit determinant: the inverse is the adjugate, and adj is linear in M
        return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]), logs

    def determinant_defect(self) -> float:
        n = np.arange(-self.trace.W, self.trace.W + 1)
        return float(max(abs(np.linalg.det(self.matrix(int(i))) - 1.0) for i in n))


@dataclass
class BlockBound:
    norms: np.ndarray           # shape (count, 3): |T_k Phi|, |T_2k Phi|, |T_-k Phi|
    phi_norms: np.ndarray
    satisfied: np.ndarray

    @property
    def fraction(self) -> float:
        return float(np.mean(self.satisfied))


def _apply(Ml, Phi):
    M, logs = Ml
    return np.linalg.norm(Phi @ M.T, axis=1) * math.exp(logs) if logs < 700 else np.full(len(Phi), np.inf)


def block_matrices(trace: PotentialTrace, E: float, k: int):
    if k < 1 or 2 * k > trace.W:
        raise PreconditionError(f"k={k} needs W >= {2 * k}")
    tc = TransferCocycle(trace, E)
    return tc.forward(k), tc.product(1, 2 * k), tc.backward(k)


def gordon_block_bound(trace: PotentialTrace, E: float, k: int, Phi=None) -> BlockBound:
    """max(|T_k Phi|, |T_2k Phi|, |T_-k Phi|) >= |Phi| / 2 for each row of Phi."""
    Phi = np.array([[1.0, 0.0]]) if Phi is None else np.atleast_2d(np.asarray(Phi, float))
    Tk, T2k, Tm = block_matrices(trace, E, k)
    norms = np.stack([_apply(Tk, Phi), _apply(T2k, Phi), _apply(Tm, Phi)], axis=1)
    pn = np.linalg.norm(Phi, axis=1)
    return BlockBound(norms, pn, norms.max(axis=1) >= pn / 2)


def cayley_hamilton_check(trace: PotentialTrace, E: float, k: int, Phi):
    """Independent verdict from T^2 - tr(T) T + I = 0 with T = T_k.

    For |tr T| <= 1, |T^2 Phi| + |T Phi| >= |Phi| forces max(|T Phi|, |T^2 Phi|) >= |Phi|/2;
    otherwise T Phi + T^-1 Phi = tr(T) Phi forces max(|T Phi|, |T^-1 Phi|) >= |Phi|/2.
    Returns (residual of the identity, verdict per row).
    """
    Phi = np.atleast_2d(np.asarray(Phi, float))
    M, logs = TransferCocycle(trace, E).product(1, k)
    T = M * math.exp(logs)
    tr = np.trace(T)
    inv = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])
    TP = Phi @ T.T
    T2P = TP @ T.T
    resid = np.linalg.norm(T2P - tr * TP + Phi, axis=1) / np.maximum(1.0, np.linalg.norm(T2P, axis=1))
    pn = np.linalg.norm(Phi, axis=1)
    if abs(tr) <= 1:
        verdict = np.maximum(np.linalg.norm(TP, axis=1), np.linalg.norm(T2P, axis=1)) >= pn / 2
    else:
        verdict = np.maximum(np.linalg.norm(TP, axis=1), np.linalg.norm(Phi @ inv.T, axis=1)) >= pn / 2
    return float(resid.max()), verdict


def energy_grid(trace: PotentialTrace, count: int = 201) -> np.ndarray:
    return np.linspace(trace.samples.min() - 2, trace.samples.max() + 2, count)


def write_spectrum_csv(path, evals, metrics: LocalizationMetrics):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("index", "eigenvalue", "IPR", "decay_rate", "edge_mass"))
        for i, (e, a, b, c) in enumerate(zip(evals, metrics.ipr, metrics.decay_rate, metrics.edge_mass)):
            w.writerow((i, repr(float(e)), repr(float(a)), repr(float(b)), repr(float(c))))
