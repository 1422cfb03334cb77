"""Continued fractions driven by explicit partial-quotient lists.

A frequency is always the exact rational value of its (finite) quotient list.
High-precision reals only appear when a caller asks for them explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from .errors import PrecisionError, PreconditionError, ScheduleOverflow

# below this |k|, circle distances are computed in exact rational arithmetic
EXACT_K_THRESHOLD = 10**12


@dataclass(frozen=True)
class PartialQuotients:
    a: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        if not a:
            raise PreconditionError("partial quotient list is empty")
        if a[0] < 0:
            raise PreconditionError("a0 must be >= 0")
        bad = [i for i, v in enumerate(a[1:], start=1) if v < 1]
        if bad:
            raise PreconditionError(f"partial quotients must be >= 1 for i >= 1, got a[{bad[0]}]={a[bad[0]]}")
        object.__setattr__(self, "a", a)

    def __len__(self):
        return len(self.a)

    def extended(self, value: int) -> "PartialQuotients":
        return PartialQuotients(self.a + (int(value),))

    def value(self) -> Fraction:
        """Exact value of the finite continued fraction, evaluated from the tail."""
        x = Fraction(self.a[-1])
        for v in reversed(self.a[:-1]):
            x = v + 1 / x
        return x


@dataclass(frozen=True)
class ConvergentTable:
    quotients: PartialQuotients
    p: tuple[int, ...]
    q: tuple[int, ...]

    def __len__(self):
        return len(self.q)

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])

    def value(self) -> Fraction:
        return Fraction(self.p[-1], self.q[-1])


def convergents(a: PartialQuotients | Sequence[int]) -> ConvergentTable:
    """Numerators and denominators of all convergents of ``a``.

    Seeds are p0 = a0, p1 = a0*a1 + 1, q0 = 1, q1 = a1; afterwards the usual
    three-term recurrences, in exact integer arithmetic.
    """
    if not isinstance(a, PartialQuotients):
        a = PartialQuotients(tuple(a))
    seq = a.a
    p = [seq[0]]
    q = [1]
    if len(seq) > 1:
        p.append(seq[0] * seq[1] + 1)
        q.append(seq[1])
    for n in range(2, len(seq)):
        p.append(seq[n] * p[n - 1] + p[n - 2])
        q.append(seq[n] * q[n - 1] + q[n - 2])
    return ConvergentTable(a, tuple(p), tuple(q))


def _extend_table(table: ConvergentTable, value: int) -> ConvergentTable:
    quot = table.quotients.extended(value)
    p, q = list(table.p), list(table.q)
    if len(q) == 1:
        p.append(quot.a[0] * value + 1)
        q.append(value)
    else:
        p.append(value * p[-1] + p[-2])
        q.append(value * q[-1] + q[-2])
    return ConvergentTable(quot, tuple(p), tuple(q))


def two_sided_error(table: ConvergentTable, n: int) -> tuple[Fraction, Fraction]:
    """Bounds ``1/(q_n(q_n+q_{n+1})) <= (-1)^n (alpha - p_n/q_n) <= 1/(q_n q_{n+1})``."""
    if n < 0 or n + 1 >= len(table):
        raise PreconditionError(f"n={n} needs q_(n+1) but table has {len(table)} rows")
    qn, qn1 = table.q[n], table.q[n + 1]
    return Fraction(1, qn * (qn + qn1)), Fraction(1, qn * qn1)


@dataclass(frozen=True)
class Certified:
    """A real value with an absolute error bound (0 for exact rationals)."""

    value: Fraction | mpmath.mpf | float
    error: float = 0.0

    def __float__(self):
        return float(self.value)


def frac_part(x: Fraction) -> Fraction:
    return x - math.floor(x)


def signed_frac(x: Fraction) -> Fraction:
    """Representative of x mod 1 in [-1/2, 1/2)."""
    r = frac_part(x)
    return r - 1 if r >= Fraction(1, 2) else r


def circle_distance(k: int, alpha, *, alpha_error: float = 0.0, tol: float | None = None) -> Certified:
    """``||k alpha||``, the distance from k*alpha to the nearest integer.

    ``alpha`` may be an exact Fraction (result exact) or an mpmath real with
    absolute error ``alpha_error``; in the latter case the result error is
    |k| * alpha_error and PrecisionError is raised if it exceeds ``tol``.
    """
    k = int(k)
    if k == 0:
        return Certified(Fraction(0), 0.0)
    if isinstance(alpha, (Fraction, int)) and abs(k) < EXACT_K_THRESHOLD:
        return Certified(abs(signed_frac(k * Fraction(alpha))), 0.0)
    if isinstance(alpha, (Fraction, int)):
        alpha = Fraction(alpha)
        bits = max(64, 2 * k.bit_length() + 64)
        with mpmath.workprec(bits):
            val = mpmath.mpf(alpha.numerator) / alpha.denominator
            x = k * val
            d = abs(x - mpmath.nint(x))
            err = float(abs(k) * mpmath.mpf(2) ** (-bits + 4))
            return Certified(+d, err)
    err = abs(k) * float(alpha_error)
    if tol is not None and err >= tol:
        raise PrecisionError(f"|k|*error = {err:.3g} exceeds tolerance {tol:.3g}")
    x = k * alpha
    return Certified(abs(x - mpmath.nint(x)), err)


@dataclass
class BestApproxReport:
    k_max: int
    checked_pairs: int = 0
    violations: list[tuple[int, int]] = field(default_factory=list)
    min_margin: float = math.inf

    @property
    def ok(self) -> bool:
        return not self.violations


def best_approx_check(table: ConvergentTable, alpha_value=None, k_max: int | None = None,
                      *, alpha_error: float = 0.0) -> BestApproxReport:
    """Check ``||q_(n-1) alpha|| < ||k alpha||`` for 1 <= k < q_n, k != q_(n-1).

    Every n with q_n <= k_max + 1 is checked, except the last row of the table:
    there alpha = p_N/q_N and k = q_N - q_(N-1) ties with q_(N-1), so the strict
    inequality belongs to the irrational limit only. ``alpha_value`` defaults to the
    exact value of the table; an mpmath value with ``alpha_error`` may be given
    instead, in which case the smallest margin must dominate the error.
    """
    if alpha_value is None:
        alpha_value = table.value()
    if k_max is None:
        k_max = table.q[-1] - 1
    if k_max > table.q[-1]:
        raise PreconditionError(f"k_max={k_max} exceeds the largest denominator {table.q[-1]}")
    report = BestApproxReport(k_max=k_max)
    exact = isinstance(alpha_value, (Fraction, int))
    if exact:
        alpha = Fraction(alpha_value)
        P, Q = alpha.numerator, alpha.denominator

        def dist_num(k):
            r = (k * P) % Q
            return min(r, Q - r)
    else:
        def dist_num(k):
            x = k * alpha_value
            return abs(x - mpmath.nint(x))

    cache = {}

    def dist(k):
        if k not in cache:
            cache[k] = dist_num(k)
        return cache[k]

    worst_err = 0.0
    exact_last = exact and Fraction(alpha_value) == table.value()
    top = len(table) - 1 if exact_last else len(table)
    for n in range(1, top):
        qn, qprev = table.q[n], table.q[n - 1]
        if qn > k_max + 1:
            break
        ref = dist(qprev)
        for k in range(1, qn):
            if k == qprev:
                continue
            d = dist(k)
            report.checked_pairs += 1
            margin = (d - ref) / Q if exact else float(d - ref)
            margin = float(margin)
            report.min_margin = min(report.min_margin, margin)
            if not exact:
                worst_err = max(worst_err, (k + qprev) * float(alpha_error))
            if not d > ref:
                report.violations.append((n, k))
    if not exact and report.checked_pairs and worst_err >= report.min_margin > 0:
        raise PrecisionError(f"error bound {worst_err:.3g} exceeds the smallest margin {report.min_margin:.3g}")
    return report


# ---------------------------------------------------------------- schedules

@dataclass(frozen=True)
class GrowthSchedule:
    """Required minimum next denominator as a function of (level, previous denominator).

    ``bits`` returns a cheap upper estimate of log2 of the requirement so that
    overflow can be detected before anything huge is materialised.
    """

    name: str
    params: tuple = ()
    func: Callable[[int, int], int] = field(default=None, compare=False, repr=False)
    bits: Callable[[int, int], float] = field(default=None, compare=False, repr=False)
    description: str = ""

    def __call__(self, level: int, q: int) -> int:
        return self.func(level, q)

    def spec(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(str(p) for p in self.params)


def _ceil_exp(x) -> int:
    """ceil(e**x) for a nonnegative integer/real x, exactly."""
    bits = int(x * 1.4426950408889634) + 64
    with mpmath.workprec(bits):
        return int(mpmath.ceil(mpmath.exp(mpmath.mpf(x))))


def power_schedule(p: int) -> GrowthSchedule:
    p = int(p)
    if p < 2:
        raise PreconditionError("power schedule needs exponent >= 2")
    return GrowthSchedule(
        name="power", params=(p,),
        func=lambda n, q: q**p,
        bits=lambda n, q: p * max(q, 1).bit_length(),
        description=f"q_next >= q**{p}",
    )


def cubic_schedule() -> GrowthSchedule:
    s = power_schedule(3)
    return GrowthSchedule("cubic", (), s.func, s.bits, "q_next >= q**3")


def exp_mild_schedule() -> GrowthSchedule:
    return GrowthSchedule(
        name="exp-mild", func=lambda n, q: _ceil_exp(q),
        bits=lambda n, q: q * 1.4426950408889634 + 1,
        description="q_next >= ceil(e**q)",
    )


def paper_literal_schedule() -> GrowthSchedule:
    """q_next >= ceil(e**(q**5)); usable only for tiny q."""
    return GrowthSchedule(
        name="paper-literal", func=lambda n, q: _ceil_exp(q**5),
        bits=lambda n, q: float(q) ** 5 * 1.4426950408889634 + 1,
        description="q_next >= ceil(e**(q**5))",
    )


def parse_schedule(spec: str) -> GrowthSchedule:
    name, _, params = spec.partition(":")
    if name == "cubic":
        return cubic_schedule()
    if name == "power":
        return power_schedule(int(params or 3))
    if name == "exp-mild":
        return exp_mild_schedule()
    if name == "paper-literal":
        return paper_literal_schedule()
    raise PreconditionError(f"unknown schedule {spec!r}")


# ---------------------------------------------------------------- frequency pairs

@dataclass(frozen=True)
class FrequencyPair:
    """The rotation vector (alpha, alpha') together with its level structure.

    Level i (1-based) pairs the alpha-denominator ``q(i)`` with the
    alpha'-denominator ``q_prime(i)``; tables also hold q(levels+1) and
    q_prime(levels+1) so that two-sided bounds are available at every level.
    """

    alpha: ConvergentTable
    alpha_prime: ConvergentTable
    levels: int
    alpha_offset: int        # table index of q(1)
    alpha_prime_offset: int  # table index of q_prime(1)
    schedule_spec: str = ""
    value_precision_bits: int = 256

    def q(self, level: int) -> int:
        return self.alpha.q[self.alpha_offset + level - 1]

    def q_prime(self, level: int) -> int:
        return self.alpha_prime.q[self.alpha_prime_offset + level - 1]

    def t(self, level: int) -> int:
        return self.q(level) * self.q_prime(level)

    @property
    def alpha_value(self) -> Fraction:
        return self.alpha.value()

    @property
    def alpha_prime_value(self) -> Fraction:
        return self.alpha_prime.value()

    def rotation(self) -> tuple[Fraction, Fraction]:
        return self.alpha_value, self.alpha_prime_value

    def real_values(self, bits: int | None = None):
        """alpha, alpha' as mpmath reals, each with an absolute error bound."""
        bits = bits or self.value_precision_bits
        with mpmath.workprec(bits):
            out = []
            for v in self.rotation():
                out.append(Certified(mpmath.mpf(v.numerator) / v.denominator, 2.0 ** (-bits + 1)))
        return out

    def check_schedule(self, schedule: GrowthSchedule) -> list[str]:
        """Exact integer check of the interlacing inequalities; returns failures."""
        bad = []
        for n in range(1, self.levels + 1):
            if self.q_prime(n) < schedule(n, self.q(n)):
                bad.append(f"q'({n}) < g({n}, q({n}))")
            if self.q(n + 1) < schedule(n, self.q_prime(n)):
                bad.append(f"q({n + 1}) < g({n}, q'({n}))")
        return bad

    def to_json(self) -> dict:
        def tab(t: ConvergentTable):
            return {"quotients": [str(v) for v in t.quotients.a],
                    "p": [str(v) for v in t.p], "q": [str(v) for v in t.q]}

        return {
            "schema": "frequency-pair/1",
            "schedule": self.schedule_spec,
            "levels": self.levels,
            "alpha_offset": self.alpha_offset,
            "alpha_prime_offset": self.alpha_prime_offset,
            "value_precision_bits": self.value_precision_bits,
            "alpha": tab(self.alpha),
            "alpha_prime": tab(self.alpha_prime),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FrequencyPair":
        if doc.get("schema") != "frequency-pair/1":
            raise PreconditionError(f"unsupported frequency pair schema {doc.get('schema')!r}")
        tabs = []
        for key in ("alpha", "alpha_prime"):
            t = convergents([int(v) for v in doc[key]["quotients"]])
            if [str(v) for v in t.q] != doc[key]["q"] or [str(v) for v in t.p] != doc[key]["p"]:
                raise PreconditionError(f"stored convergents for {key} do not match its quotients")
            tabs.append(t)
        return cls(tabs[0], tabs[1], int(doc["levels"]), int(doc["alpha_offset"]),
                   int(doc["alpha_prime_offset"]), doc.get("schedule", ""),
                   int(doc.get("value_precision_bits", 256)))


def _next_quotient(table: ConvergentTable, target: int) -> int:
    q_last = table.q[-1]
    q_prev = table.q[-2] if len(table) > 1 else 0
    # smallest a with a*q_last + q_prev >= target, and at least 1
    return max(1, -(-(target - q_prev) // q_last))


def design_pair(schedule: GrowthSchedule, levels: int,
                seed_quotients: tuple[Sequence[int], Sequence[int]] = ((0, 1), (0,)),
                *, max_bits: int = 1 << 16) -> FrequencyPair:
    """Greedy construction of (alpha, alpha') with tower-interlaced denominators.

    q(1) is the last denominator of the alpha seed. For each level n the next
    alpha' quotient makes q'(n) >= g(n, q(n)), then the next alpha quotient
    makes q(n+1) >= g(n, q'(n)). One closing alpha' step gives q'(levels+1).
    """
    if levels < 1:
        raise PreconditionError("levels must be >= 1")
    seed_a, seed_b = seed_quotients
    ta = convergents(seed_a)
    tb = convergents(seed_b)
    off_a = len(ta) - 1
    off_b = len(tb)

    def grow(table, level, prev):
        est = schedule.bits(level, prev)
        if est > max_bits:
            raise ScheduleOverflow(
                f"schedule {schedule.spec()} needs ~{est:.3g} bits at level {level} (budget {max_bits})",
                partial=(ta, tb))
        target = schedule(level, prev)
        return _extend_table(table, _next_quotient(table, target))

    for n in range(1, levels + 1):
        tb = grow(tb, n, ta.q[off_a + n - 1])
        ta = grow(ta, n, tb.q[off_b + n - 1])
    tb = grow(tb, levels + 1, ta.q[off_a + levels])
    return FrequencyPair(ta, tb, levels, off_a, off_b, schedule.spec())


def golden_quotients(length: int) -> PartialQuotients:
    return PartialQuotients((0,) + (1,) * (length - 1))
