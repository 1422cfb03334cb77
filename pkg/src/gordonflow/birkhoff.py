"""Birkhoff sums of trigonometric polynomials over the translation by (alpha, alpha').

Closed form: for a frequency k and rotation alpha,

    Y(m, k) = sum_{l<m} e(l k alpha) = sin(pi rho) / sin(pi theta) * e((rho - theta) / 2)

with theta = {k alpha} and rho = {m k alpha}, both reduced exactly from the
rational value of alpha before anything is rounded. The same expression is
valid for negative m, where it equals -sum_{m<=l<0} e(l k alpha).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .cfrac import FrequencyPair
from .errors import BudgetExceeded, PreconditionError
from .trig import TrigPolynomial

EPS = np.finfo(float).eps
DIRECT_BUDGET = 10**7


def as_fraction(v) -> Fraction:
    """Exact rational for Fraction, int, float or mpmath input."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, mpmath.mpf):
        man, exp = v.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(float(v))


def _signed(r: int, Q: int) -> int:
    return r - Q if 2 * r >= Q else r


def _factors(rs, m: int, Q: int) -> tuple[np.ndarray, np.ndarray]:
    """Y for theta = r/Q (mod 1), one entry per exact residue r.

    theta and rho = m theta are reduced in integers first, so each sine below is
    relatively accurate even for tiny theta and no extended precision is needed.
    """
    fQ = float(Q)
    th = np.array([float(_signed(r, Q)) for r in rs]) / fQ
    rho = np.array([float(_signed((m * r) % Q, Q)) for r in rs]) / fQ
    zero = np.array([r == 0 for r in rs], bool)
    s_th = np.sin(np.pi * np.where(zero, 0.5, th))
    val = np.sin(np.pi * rho) / s_th * np.exp(1j * np.pi * (rho - th))
    val = np.where(zero, complex(m), val)
    err = np.where(zero, 0.0, 8 * EPS * (np.abs(val) + 1.0))
    return val, err


def _factor(r: int, m: int, Q: int) -> tuple[complex, float]:
    v, e = _factors([r], m, Q)
    return complex(v[0]), float(e[0])


@lru_cache(maxsize=512)
def _factor_array_cached(stride: int, J: int, m: int, P: int, Q: int):
    base = (stride * P) % Q
    v, e = _factors([(j * base) % Q for j in range(1, J + 1)], m, Q)
    vals = np.concatenate([np.conj(v[::-1]), [complex(m)], v])
    errs = np.concatenate([e[::-1], [0.0], e])
    vals.setflags(write=False)
    errs.setflags(write=False)
    return vals, errs


def factor_array(stride: int, J: int, m: int, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Y(m, j*stride) for j = -J..J, with per-entry error bounds."""
    a = as_fraction(alpha)
    return _factor_array_cached(int(stride), int(J), int(m), a.numerator, a.denominator)


@dataclass(frozen=True)
class GeometricFactor:
    m: int
    k: int
    rotation: Fraction
    value: complex
    error: float


def geometric_sum(m, k, rotation) -> GeometricFactor:
    """sum_{l<m} exp(2 pi i k l rotation) in closed form with an error bound."""
    m, k = int(m), int(k)
    a = as_fraction(rotation)
    r = (k * a.numerator) % a.denominator
    v, e = _factor(r, m, a.denominator)
    return GeometricFactor(m, k, a, v, e)


# ---------------------------------------------------------------- queries

@dataclass(frozen=True)
class BirkhoffQuery:
    polynomial: TrigPolynomial
    axis: str            # "x", "y" or "const"
    m: int
    x: Fraction
    y: Fraction
    pair: FrequencyPair = field(repr=False)

    def __post_init__(self):
        if self.axis not in ("x", "y", "const"):
            raise PreconditionError(f"axis must be x, y or const, got {self.axis!r}")
        if self.axis == "const" and self.polynomial.harmonics:
            if np.any(np.delete(self.polynomial.coeffs, self.polynomial.harmonics) != 0):
                raise PreconditionError("a const-tagged polynomial must have only c_0")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "x", as_fraction(self.x))
        object.__setattr__(self, "y", as_fraction(self.y))

    @property
    def rotation(self) -> Fraction:
        return self.pair.alpha_value if self.axis == "x" else self.pair.alpha_prime_value

    @property
    def coordinate(self) -> Fraction:
        return self.x if self.axis == "x" else self.y


def _exact_phase(stride: int, c: Fraction) -> float:
    return ((stride * c.numerator) % c.denominator) / c.denominator


def closed_sum(poly: TrigPolynomial, m: int, coord, rotation, derivative: bool = False):
    """S_m p at ``coord`` along ``rotation``; returns (value, error)."""
    coord = as_fraction(coord)
    if poly.harmonics == 0:
        if derivative:
            return 0.0, 0.0
        return float((m * poly.coeffs[0]).real), 0.0
    Y, E = factor_array(poly.stride, poly.harmonics, m, rotation)
    c = poly.coeffs
    if derivative:
        c = c * (2j * np.pi * np.arange(-poly.harmonics, poly.harmonics + 1) * float(poly.stride))
    u = _exact_phase(poly.stride, coord)
    val = poly.__class__(c, poly.stride, poly.real).at_phase(np.array([u]), factors=Y)[0]
    err = float(np.sum(np.abs(c) * E)) + EPS * float(np.sum(np.abs(c * Y)))
    return float(np.real(val)), err


def birkhoff_closed(q: BirkhoffQuery):
    """(S_m f, S_m f', error) at the base point."""
    if q.axis == "const":
        return float(q.m * q.polynomial.mean.real), 0.0, 0.0
    v, e1 = closed_sum(q.polynomial, q.m, q.coordinate, q.rotation)
    d, e2 = closed_sum(q.polynomial, q.m, q.coordinate, q.rotation, derivative=True)
    return v, d, max(e1, e2)


def direct_phases(stride: int, coord: Fraction, rotation: Fraction, m: int) -> np.ndarray:
    """Exact phases {stride (coord + l rotation)} for 0 <= l < m, as floats."""
    D = coord.denominator * rotation.denominator // math.gcd(coord.denominator, rotation.denominator)
    a = (stride * coord.numerator * (D // coord.denominator)) % D
    d = (stride * rotation.numerator * (D // rotation.denominator)) % D
    if D < 2**62 // max(m, 1):
        idx = (a + np.arange(m, dtype=np.int64) * d) % D
        return idx / D
    return np.array([((a + l * d) % D) / D for l in range(m)])


def birkhoff_direct(q: BirkhoffQuery, stride_check: int = 0, budget: int = DIRECT_BUDGET):
    """Direct compensated summation of f along the orbit (oracle for birkhoff_closed).

    With ``stride_check`` > 0 the partial sums S_k for k = stride_check, 2*stride_check, ...
    are returned as well.
    """
    m = q.m
    if m < 0:
        raise PreconditionError("direct summation needs m >= 0")
    if m > budget:
        raise BudgetExceeded(f"m={m} exceeds the direct-sum budget {budget}")
    if m == 0:
        return (0.0, []) if stride_check else 0.0
    if q.axis == "const":
        vals = np.full(m, q.polynomial.mean.real)
    else:
        u = direct_phases(q.polynomial.stride, q.coordinate, q.rotation, m)
        vals = np.asarray(q.polynomial.at_phase(u), dtype=float)
    total = math.fsum(vals)
    if stride_check:
        partial = [math.fsum(vals[:k]) for k in range(stride_check, m + 1, stride_check)]
        return total, partial
    return total


# ---------------------------------------------------------------- ceiling sums

def _layers(ceiling, axis):
    return ceiling.x_layers if axis == "x" else ceiling.y_layers


def axis_deviation(ceiling, pair: FrequencyPair, m: int, coords, axis: str, derivative: bool = False):
    """sum over the axis layers of S_m (or S_m of the derivative) at each coordinate.

    ``coords`` is a sequence of rationals; returns (values array, error bound).
    """
    rot = pair.alpha_value if axis == "x" else pair.alpha_prime_value
    coords = [as_fraction(c) for c in coords]
    out = np.zeros(len(coords))
    err = 0.0
    for p in _layers(ceiling, axis):
        Y, E = factor_array(p.stride, p.harmonics, m, rot)
        c = p.coeffs
        if derivative:
            c = c * (2j * np.pi * np.arange(-p.harmonics, p.harmonics + 1) * float(p.stride))
        u = np.array([_exact_phase(p.stride, z) for z in coords])
        out += np.real(TrigPolynomial(c, p.stride, False).at_phase(u, factors=Y))
        err += float(np.sum(np.abs(c) * E)) + 4 * EPS * float(np.sum(np.abs(c * Y)))
    return out, err


def ceiling_deviation(ceiling, pair: FrequencyPair, m: int, x, y):
    """D_m(x, y) = S_m phi(x, y) - m, returned with an error bound."""
    dx, ex = axis_deviation(ceiling, pair, m, [x], "x")
    dy, ey = axis_deviation(ceiling, pair, m, [y], "y")
    return float(dx[0] + dy[0]), ex + ey


def ceiling_direct(ceiling, pair: FrequencyPair, m: int, x, y, budget: int = DIRECT_BUDGET) -> float:
    """Direct oracle for S_m phi - m."""
    if m > budget:
        raise BudgetExceeded(f"m={m} exceeds the direct-sum budget {budget}")
    x, y = as_fraction(x), as_fraction(y)
    terms = []
    for axis, coord, rot in (("x", x, pair.alpha_value), ("y", y, pair.alpha_prime_value)):
        for p in _layers(ceiling, axis):
            terms.extend(np.asarray(p.at_phase(direct_phases(p.stride, coord, rot, m)), dtype=float))
    return math.fsum(terms)


# ---------------------------------------------------------------- stretch and recurrence

def write_csv(path, rows, header):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def good_set(u: np.ndarray, n: int) -> np.ndarray:
    """|u - j/4| > 3/n for every j = 0..4."""
    d = np.min(np.abs(u[:, None] - np.arange(5)[None, :] / 4.0), axis=1)
    return d > 3.0 / n


def stretch_window(pair: FrequencyPair, ceiling, level: int, axis: str) -> tuple[float, float]:
    """[1/(2 A(q)^2), 2/A(q_next)^2] with q, q_next = q_n, q'_n (x) or q'_n, q_(n+1) (y)."""
    inf = ceiling.info[level - 1]
    from .ceiling import parse_amplitude
    amp = parse_amplitude(ceiling.amplitude)
    if axis == "x":
        a_lo, a_hi = inf.amp_x, inf.amp_y
    else:
        a_lo = inf.amp_y
        a_hi = amp(pair.q(level + 1))
    lo = 0.5 / a_lo**2 if a_lo**2 > 0 else math.inf
    hi = 2.0 / a_hi**2 if a_hi**2 > 0 else math.inf
    return lo, hi


@dataclass
class StretchProfile:
    level: int
    axis: str
    m: int
    window: tuple
    in_window: bool
    rows: list = field(default_factory=list)   # (x, y, value, threshold, pass)

    @property
    def pass_fraction(self) -> float:
        if not self.rows:
            return 0.0
        return sum(1 for r in self.rows if r[4]) / len(self.rows)

    def to_csv(self, path):
        write_csv(path, [(float(a), float(b), v, t, int(p)) for a, b, v, t, p in self.rows],
                  ("x", "y", "value", "threshold", "pass"))


def stretch_profile(ceiling, pair: FrequencyPair, level: int, m: int, axis: str = "x",
                    grid: int = 256, others: int = 1) -> StretchProfile:
    """|D S_m phi| on the good set of the level, against m A(q) q / n."""
    if axis not in ("x", "y"):
        raise PreconditionError("axis must be x or y")
    if level < 1 or level > ceiling.levels:
        raise PreconditionError(f"level {level} not built")
    inf = ceiling.info[level - 1]
    n = inf.width
    q, A = (inf.q, inf.amp_x) if axis == "x" else (inf.q_prime, inf.amp_y)
    m = int(m)
    win = stretch_window(pair, ceiling, level, axis)
    prof = StretchProfile(level, axis, m, win, m > 0 and win[0] <= m <= win[1])
    if grid == 1:
        us = [Fraction(1, 8)]
    else:
        us = [Fraction(2 * i + 1, 2 * grid) for i in range(grid)]
        keep = good_set(np.array([float(u) for u in us]), n)
        us = [u for u, k in zip(us, keep) if k]
    coords = [u / q for u in us]
    if m == 0:
        vals = np.zeros(len(coords))
    else:
        vals, _ = axis_deviation(ceiling, pair, m, coords, axis, derivative=True)
    thr = m * A * q / n
    other = [Fraction(2 * k + 1, 2 * others) for k in range(others)]
    for c, v in zip(coords, vals):
        for o in other:
            x, y = (c, o) if axis == "x" else (o, c)
            ok = prof.in_window and abs(v) >= thr
            prof.rows.append((x, y, float(abs(v)), thr, ok))
    return prof


@dataclass
class RecurrenceReport:
    level: int
    t: int
    tolerance: float
    max_deviation: float
    error_bound: float
    points: int
    direct_checked: int = 0
    direct_max_diff: float = math.nan
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_deviation + self.error_bound <= self.tolerance

    def to_json(self) -> dict:
        return {"level": self.level, "t": str(self.t), "tolerance": self.tolerance,
                "max_deviation": self.max_deviation, "error_bound": self.error_bound,
                "points": self.points, "direct_checked": self.direct_checked,
                "direct_max_diff": self.direct_max_diff, "passed": self.passed}

    def to_csv(self, path):
        write_csv(path, self.rows, ("x", "y", "value", "threshold", "pass"))


def c_set_phases(n: int, grid: int) -> list[Fraction]:
    """Evenly spaced phases covering [1/n^2, 1/n - 1/n^2] including both ends."""
    lo, hi = Fraction(1, n * n), Fraction(1, n) - Fraction(1, n * n)
    if grid < 2:
        return [(lo + hi) / 2]
    return [lo + (hi - lo) * i / (grid - 1) for i in range(grid)]


def recurrence_estimate(ceiling, pair: FrequencyPair, level: int, grid: int = 64, y_grid: int = 16,
                        tolerances=None, direct_points: int = 4, budget: int = DIRECT_BUDGET) -> RecurrenceReport:
    """max |S_t phi - t| with t = q q' over the C-set of the level times a y grid."""
    from .ceiling import ToleranceSchema

    tol = tolerances or ToleranceSchema()
    if level < 1 or level > ceiling.levels:
        raise PreconditionError(f"level {level} not built")
    inf = ceiling.info[level - 1]
    t = pair.t(level)
    xs = [u / inf.q for u in c_set_phases(inf.width, grid)]
    ys = [Fraction(2 * k + 1, 2 * y_grid) for k in range(y_grid)]
    dx, ex = axis_deviation(ceiling, pair, t, xs, "x")
    dy, ey = axis_deviation(ceiling, pair, t, ys, "y")
    dev = np.abs(dx[:, None] + dy[None, :])
    thr = tol.recurrence(t)
    rep = RecurrenceReport(level, t, thr, float(dev.max()), float(ex + ey), dev.size)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            rep.rows.append((float(x), float(y), float(dev[i, j]), thr, int(dev[i, j] <= thr)))
    if t <= budget and direct_points:
        diffs = []
        idx = np.linspace(0, len(xs) - 1, direct_points).astype(int)
        for k, i in enumerate(idx):
            y = ys[k % len(ys)]
            d = ceiling_direct(ceiling, pair, t, xs[i], y, budget)
            diffs.append(abs(d - (dx[i] + dy[k % len(ys)])))
        rep.direct_checked = len(diffs)
        rep.direct_max_diff = float(max(diffs))
    return rep
