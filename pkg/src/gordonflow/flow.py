"""The special flow over the translation by (alpha, alpha') under the ceiling phi.

Points keep x, y as exact rationals; only the fiber coordinate s is a float.
Times are split into an exact integer part and a float remainder, and the
Birkhoff sums enter only through the deviation D_m = S_m phi - m, so very
large times do not cost precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .birkhoff import as_fraction, ceiling_deviation
from .cfrac import FrequencyPair
from .errors import PreconditionError

SCAN_LIMIT = 64
AMBIGUITY = 1e-12
DIRECT_REACH = 64
NEWTON_STEPS = 8


def _mod1(v: Fraction) -> Fraction:
    return v - math.floor(v)


def _circle(d: Fraction) -> float:
    r = float(_mod1(d))
    return min(r, 1.0 - r)


@dataclass(frozen=True)
class FlowPoint:
    x: Fraction
    y: Fraction
    s: float
    ambiguous: bool = False

    def coords(self) -> tuple[float, float, float]:
        return float(self.x), float(self.y), self.s


@dataclass(frozen=True)
class FiberCount:
    n: int
    residual: float      # t + s - S_n phi, the new fiber coordinate
    height: float        # phi at the landing base point
    ambiguous: bool


def _split_time(t):
    if isinstance(t, (int, np.integer)):
        return int(t), 0.0
    if isinstance(t, Fraction):
        T = math.floor(t)
        return T, float(t - T)
    t = float(t)
    T = math.floor(t)
    return int(T), t - T


class FlowMap:
    """T^t for the special flow; immutable apart from internal caches."""

    def __init__(self, pair: FrequencyPair, ceiling):
        self.pair = pair
        self.ceiling = ceiling
        self.alpha = pair.alpha_value
        self.alpha_prime = pair.alpha_prime_value

    # base dynamics -------------------------------------------------------

    def rotate(self, x, y, m: int):
        return _mod1(x + m * self.alpha), _mod1(y + m * self.alpha_prime)

    def phi(self, x, y) -> float:
        return float(self.ceiling(as_fraction(x), as_fraction(y)))

    def deviation(self, m: int, x, y):
        """(D_m, error) with D_m = S_m phi - m."""
        m = int(m)
        if m == 0 or self.ceiling.is_trivial():
            return 0.0, 0.0
        if abs(m) <= DIRECT_REACH:
            terms = []
            rng = range(m) if m > 0 else range(m, 0)
            for l in rng:
                xl, yl = self.rotate(x, y, l)
                terms.append(self.phi(xl, yl) - 1.0)
            d = math.fsum(terms)
            return (d if m > 0 else -d), 4e-16 * abs(m) * self.ceiling.sup()
        return ceiling_deviation(self.ceiling, self.pair, m, x, y)

    # fiber counting ------------------------------------------------------

    def fiber_count_info(self, t, point: FlowPoint) -> FiberCount:
        """Largest m with S_m phi(z) <= t + s, with an ambiguity flag."""
        T, tf = _split_time(t)
        x, y, s = point.x, point.y, float(point.s)
        target = tf + s
        m = T + math.floor(target)
        D, err = self.deviation(m, x, y)
        # one Newton-like correction (mean of phi is 1)
        for _ in range(NEWTON_STEPS):
            g = (m - T) + D - target
            if abs(g) < 2:
                break
            m -= math.floor(g)
            D, err = self.deviation(m, x, y)
        steps = 0
        xm, ym = self.rotate(x, y, m)
        h = self.phi(xm, ym)
        while (m - T) + D - target > 0:          # too far: step back
            xm, ym = self.rotate(xm, ym, -1)
            h = self.phi(xm, ym)
            D -= h - 1.0
            m -= 1
            steps += 1
            if steps > SCAN_LIMIT:
                raise PreconditionError("fiber scan did not converge")
        while (m - T) + D + h - target <= 0:     # next fiber still reachable
            D += h - 1.0
            m += 1
            xm, ym = self.rotate(xm, ym, 1)
            h = self.phi(xm, ym)
            steps += 1
            if steps > SCAN_LIMIT:
                raise PreconditionError("fiber scan did not converge")
        r = target - (m - T) - D
        amb_tol = AMBIGUITY * max(1.0, abs(target) + abs(D)) + err + 1e-16 * steps
        ambiguous = r < amb_tol or h - r < amb_tol
        r = min(max(r, 0.0), math.nextafter(h, 0.0))
        return FiberCount(m, r, h, ambiguous)

    def fiber_count(self, t, point: FlowPoint) -> int:
        return self.fiber_count_info(t, point).n

    def advance(self, point: FlowPoint, t) -> FlowPoint:
        """T^t point; negative t is handled by the signed Birkhoff sums."""
        fc = self.fiber_count_info(t, point)
        x, y = self.rotate(point.x, point.y, fc.n)
        return FlowPoint(x, y, fc.residual, fc.ambiguous or point.ambiguous)

    def canonical(self, x, y, s: float) -> FlowPoint:
        return self.advance(FlowPoint(_mod1(as_fraction(x)), _mod1(as_fraction(y)), float(s)), 0)

    # geometry ------------------------------------------------------------

    def shifted(self, p: FlowPoint, k: int) -> FlowPoint:
        """The representative (T^k z, s - S_k phi(z)) of the same point of M_phi."""
        if k == 0:
            return p
        D, _ = self.deviation(k, p.x, p.y)
        x, y = self.rotate(p.x, p.y, k)
        return FlowPoint(x, y, p.s - (k + D), p.ambiguous)

    def raw_distance(self, p: FlowPoint, q: FlowPoint) -> float:
        return math.sqrt(_circle(p.x - q.x) ** 2 + _circle(p.y - q.y) ** 2 + (p.s - q.s) ** 2)

    def quotient_distance(self, p: FlowPoint, q: FlowPoint, shifts=(-1, 0, 1)) -> float:
        best = math.inf
        for k in shifts:
            best = min(best, self.raw_distance(p, self.shifted(q, k)))
            if k:
                best = min(best, self.raw_distance(self.shifted(p, k), q))
        return best


def quotient_distance(p: FlowPoint, q: FlowPoint, flow: FlowMap) -> float:
    return flow.quotient_distance(p, q)


@dataclass(frozen=True)
class RecurrenceWitness:
    t: int
    distance: float
    radius: float
    witness: bool
    ambiguous: bool


def orbit_recurrences(flow: FlowMap, point: FlowPoint, times, radius) -> list[RecurrenceWitness]:
    """Distances d(point, T^t point) and whether they fall within radius(t)."""
    times = list(times)
    if any(b < a for a, b in zip(times, times[1:])):
        raise PreconditionError("times must be sorted ascending")
    out = []
    for t in times:
        img = flow.advance(point, t)
        d = flow.quotient_distance(point, img)
        r = float(radius(t))
        out.append(RecurrenceWitness(t, d, r, d <= r, img.ambiguous))
    return out


# ---------------------------------------------------------------- sampling

SAMPLE_BITS = 53


class MeasureSampler:
    """Seeded sampling on M_phi.

    mode "haar": the normalized product measure (density phi on the base, by
    rejection); mode "base": Haar on the torus, uniform on each fiber.
    """

    def __init__(self, seed: int = 0, mode: str = "haar"):
        if mode not in ("haar", "base"):
            raise PreconditionError(f"unknown sampler mode {mode!r}")
        self.seed = int(seed)
        self.mode = mode

    def sample(self, count: int, ceiling) -> list[FlowPoint]:
        if count < 1:
            raise PreconditionError("count must be >= 1")
        rng = np.random.default_rng(self.seed)
        top = ceiling.sup()
        den = 2**SAMPLE_BITS
        out = []
        while len(out) < count:
            k = rng.integers(0, den, size=2)
            x, y = Fraction(int(k[0]), den), Fraction(int(k[1]), den)
            h = float(ceiling(x, y))
            if self.mode == "haar" and rng.random() * top > h:
                continue
            s = rng.random() * h
            out.append(FlowPoint(x, y, min(s, math.nextafter(h, 0.0))))
        return out


def sample_points(sampler: MeasureSampler, count: int, ceiling) -> list[FlowPoint]:
    return sampler.sample(count, ceiling)


def in_c_set(x, q: int, n: int) -> bool:
    u = as_fraction(x) * q
    u = u - math.floor(u)
    return Fraction(1, n * n) <= u <= Fraction(1, n) - Fraction(1, n * n)
