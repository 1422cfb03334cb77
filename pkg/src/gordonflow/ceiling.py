"""The ceiling function: bump kernel, step layers, periodized layers and their truncations.

All x-layers are evaluated in phase coordinates u = {q x}. With that change of
variable the periodized layer collapses to ``scale * Wu(u)`` where ``Wu`` does not
depend on q at all, so huge denominators never enter floating point arithmetic.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .cfrac import FrequencyPair
from .errors import PositivityViolation, PrecisionError, PreconditionError
from .trig import TrigPolynomial, phase

MIN_WIDTH = 17
_Z_CUT = 700.0

# shifts and signs of the four copies of U making up W (in phase units)
_W_COPIES = ((0.0, 1.0), (0.25, -1.0), (0.5, -1.0), (0.75, 1.0))


# ---------------------------------------------------------------- kernel

class BumpKernel:
    """theta(v) = 1/(1+exp(-z)), z = 1/(1-v) - 1/v on (0,1); 0 below, 1 above.

    Derivatives up to order 3 are available in closed form. The primitive
    ``integral(v) = int_0^v theta`` uses Gauss-Legendre on [0, 1/2] and the
    symmetry theta(v) + theta(1-v) = 1 elsewhere.
    """

    r_max = 3

    def __init__(self, nodes: int = 80, check_nodes: int = 120):
        self.nodes = nodes
        self._gl = np.polynomial.legendre.leggauss(nodes)
        self._gl_check = np.polynomial.legendre.leggauss(check_nodes)
        self._err = None

    def theta(self, v, order: int = 0):
        v = np.asarray(v, dtype=float)
        if order < 0 or order > self.r_max:
            raise PreconditionError(f"derivative order {order} not in 0..{self.r_max}")
        out = np.zeros(v.shape)
        if order == 0:
            out[v >= 1] = 1.0
        inside = (v > 0) & (v < 1)
        x = v[inside]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            z = 1.0 / (1.0 - x) - 1.0 / x
        live = np.abs(z) < _Z_CUT
        res = np.where(z > 0, 1.0, 0.0) if order == 0 else np.zeros(x.shape)
        x, z = x[live], z[live]
        sig = 1.0 / (1.0 + np.exp(-z))
        if order == 0:
            r = sig
        else:
            s1 = sig * (1.0 - sig)
            z1 = 1.0 / (1.0 - x) ** 2 + 1.0 / x**2
            if order == 1:
                r = s1 * z1
            else:
                z2 = 2.0 / (1.0 - x) ** 3 - 2.0 / x**3
                if order == 2:
                    r = s1 * ((1.0 - 2.0 * sig) * z1**2 + z2)
                else:
                    z3 = 6.0 / (1.0 - x) ** 4 + 6.0 / x**4
                    r = s1 * ((1.0 - 6.0 * sig + 6.0 * sig**2) * z1**3 + 3.0 * (1.0 - 2.0 * sig) * z1 * z2 + z3)
        res[live] = r
        out[inside] = res
        return out

    __call__ = theta

    def _half(self, v, rule):
        gx, gw = rule
        v = np.asarray(v, dtype=float)
        nodes = (gx + 1.0) / 2.0 * v[..., None]
        return (self.theta(nodes) * gw / 2.0).sum(-1) * v

    def integral(self, v, rule=None):
        """int_0^v theta for arrays v (v - 1/2 for v >= 1, 0 for v <= 0)."""
        rule = rule or self._gl
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape)
        lo = (v > 0) & (v <= 0.5)
        hi = (v > 0.5) & (v < 1)
        top = v >= 1
        out[lo] = self._half(v[lo], rule)
        out[hi] = v[hi] - 0.5 + self._half(1.0 - v[hi], rule)
        out[top] = v[top] - 0.5
        return out

    def quadrature_error(self) -> float:
        """Largest difference between the two Gauss rules on a probe grid."""
        if self._err is None:
            v = np.linspace(0.0, 1.0, 401)
            self._err = float(np.max(np.abs(self.integral(v) - self.integral(v, self._gl_check))))
        return self._err


# ---------------------------------------------------------------- step layer

@dataclass(frozen=True)
class StepLayer:
    """theta_n, U_n, V_n, W_n for width parameter n and denominator q.

    ``*_u`` evaluators take the phase u = q x (not reduced); the x versions take
    real x and are only meaningful for moderate q.
    """

    n: int
    q: int
    kernel: BumpKernel = field(repr=False, compare=False)

    def __post_init__(self):
        if self.n < MIN_WIDTH:
            raise PreconditionError(f"width parameter n={self.n} < {MIN_WIDTH}: the plateau J_n is empty")
        if self.q < 1:
            raise PreconditionError("q must be >= 1")
        if self.kernel.quadrature_error() > 1e-13:
            raise PrecisionError(f"kernel quadrature error {self.kernel.quadrature_error():.2e} too large")

    # phase coordinates
    def theta_u(self, u):
        u = np.asarray(u, dtype=float)
        n = self.n
        return self.kernel(n * u - 1.0) - self.kernel(n * u - n / 4.0 + 2.0)

    def U_u(self, u):
        u = np.asarray(u, dtype=float)
        n, I = self.n, self.kernel.integral
        return (I(n * u - 1.0) - I(n * u - n / 4.0 + 2.0)) / n

    def V_u(self, u):
        u = np.asarray(u, dtype=float)
        return self.U_u(u) - self.U_u(u - 0.25)

    def W_u(self, u):
        u = np.asarray(u, dtype=float)
        return self.V_u(u) - self.V_u(u - 0.5)

    def W_u_derivative(self, u, order: int = 1):
        """d^r W_u / du^r for r = 1..4."""
        if order < 1 or order > self.kernel.r_max + 1:
            raise PreconditionError(f"order {order} not supported")
        u = np.asarray(u, dtype=float)
        n = self.n
        out = np.zeros(u.shape)
        for a, sgn in _W_COPIES:
            w = n * (u - a)
            out += sgn * (self.kernel(w - 1.0, order - 1) - self.kernel(w - n / 4.0 + 2.0, order - 1))
        return out * float(n) ** (order - 1)

    # x coordinates
    def theta_n(self, x):
        return self.theta_u(self.q * np.asarray(x, dtype=float))

    def U(self, x):
        return self.U_u(self.q * np.asarray(x, dtype=float)) / self.q

    def V(self, x):
        return self.V_u(self.q * np.asarray(x, dtype=float)) / self.q

    def W(self, x):
        return self.W_u(self.q * np.asarray(x, dtype=float)) / self.q

    def W_derivative(self, x):
        return self.W_u_derivative(self.q * np.asarray(x, dtype=float), 1)

    # geometry
    def plateau(self) -> tuple[Fraction, Fraction]:
        """J_n = [2/(n q), 1/(4q) - 2/(n q)]."""
        n, q = self.n, self.q
        return Fraction(2, n * q), Fraction(1, 4 * q) - Fraction(2, n * q)

    def plateau_phases(self) -> list[tuple[float, float, int]]:
        """The four plateau intervals in phase units with the sign of W'."""
        lo, hi = 2.0 / self.n, 0.25 - 2.0 / self.n
        return [(lo + a, hi + a, 1 if s > 0 else -1) for a, s in
                ((0.0, 1), (0.25, -1), (0.5, -1), (0.75, 1))]

    def sup(self) -> float:
        return 0.25 - 3.0 / self.n


def build_step_layer(n: int, q: int, kernel: BumpKernel | None = None) -> StepLayer:
    return StepLayer(int(n), int(q), kernel or BumpKernel())


# ---------------------------------------------------------------- periodized layer

@dataclass(frozen=True)
class XHat:
    """scale * q * sum_k W(x + k/q), i.e. scale * W_u({q x})."""

    layer: StepLayer
    scale: float

    def at_phase(self, u):
        return self.scale * self.layer.W_u(np.mod(u, 1.0))

    def derivative_at_phase(self, u, order: int = 1):
        # d/dx = q d/du
        return self.scale * float(self.layer.q) ** order * self.layer.W_u_derivative(np.mod(u, 1.0), order)

    def __call__(self, x):
        if isinstance(x, (Fraction, int)):
            return float(self.at_phase(phase(self.layer.q, x)))
        return self.at_phase(phase(self.layer.q, x))

    def sup(self) -> float:
        return self.scale * self.layer.sup()


def build_xhat(layer: StepLayer, scale: float) -> XHat:
    if not scale > 0:
        raise PreconditionError("scale must be positive")
    return XHat(layer, float(scale))


def build_x_cosine_layer(q: int, amplitude: float) -> TrigPolynomial:
    """The unmodified layer amplitude * cos(2 pi q x), kept for comparisons."""
    return TrigPolynomial.cosine(q, amplitude)


# ---------------------------------------------------------------- truncation

def fourier_truncate(f, degree: int, sample_count: int, stride: int = 1, zero_mean: bool = False):
    """Keep harmonics |j| < degree of a function of the phase u in [0, 1).

    Returns (poly, tail) where tail is the sum of |c_j| over all discarded
    harmonics resolved by the samples, an estimate of the sup-norm error.
    """
    degree = int(degree)
    if degree < 1:
        raise PreconditionError("degree must be >= 1")
    if sample_count < 4 * degree:
        raise PreconditionError(f"sample_count={sample_count} < 4*degree={4 * degree}")
    u = np.arange(sample_count) / sample_count
    vals = np.asarray(f(u), dtype=float)
    c = np.fft.fft(vals) / sample_count
    J = degree - 1
    coeffs = np.concatenate([c[sample_count - J:], c[:J + 1]]) if J else c[:1].copy()
    if zero_mean:
        coeffs[J] = 0.0
    # enforce conjugate symmetry exactly for a real input
    coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))
    kept = np.zeros(sample_count, bool)
    kept[:J + 1] = True
    if J:
        kept[sample_count - J:] = True
    tail = float(np.sum(np.abs(c[~kept])))
    return TrigPolynomial(coeffs, stride, True), tail


def _tail_profile(c: np.ndarray, N: int) -> np.ndarray:
    """tail[J] = sum over |j| > J of |c_j| for J = 0..N//2 - 1."""
    a = np.abs(c)
    half = N // 2
    sym = a[1:half] + a[N - 1:N - half:-1]
    # sum over j > J of sym[j-1]
    cs = np.concatenate([np.cumsum(sym[::-1])[::-1], [0.0]])
    return cs + (a[half] if N % 2 == 0 else 0.0)


def truncate_layer(xhat: XHat, max_harmonics: int, cap: int = 4096, floor_factor: float = 4.0):
    """Adaptive truncation of an x-layer.

    Picks the smallest J whose tail sum is within ``floor_factor`` of the
    rounding floor (the tail at the cap), then limits J by ``max_harmonics``.
    Returns (poly, tail, tail_c1) with tail_c1 the C^1 analogue.
    """
    N = 4 * cap
    u = np.arange(N) / N
    vals = xhat.at_phase(u)
    c = np.fft.fft(vals) / N
    tails = _tail_profile(c, N)
    floor = tails[cap]
    ok = np.nonzero(tails[:cap + 1] <= floor_factor * floor)[0]
    J = int(ok[0]) if len(ok) else cap
    J = max(1, min(J, cap - 1, int(max_harmonics)))
    poly, tail = fourier_truncate(xhat.at_phase, J + 1, N, stride=xhat.layer.q, zero_mean=True)
    j = np.abs(np.fft.fftfreq(N, 1.0 / N))
    dropped = j > J
    tail_c1 = float(np.sum(np.abs(c[dropped]) * 2 * math.pi * j[dropped] * float(xhat.layer.q)))
    return poly, tail, tail_c1


def build_y_layer(n: int, q_prime: int, amplitude: float) -> TrigPolynomial:
    if not amplitude > 0:
        raise PreconditionError("amplitude must be positive")
    return TrigPolynomial.cosine(int(q_prime), float(amplitude))


# ---------------------------------------------------------------- amplitude schedules

@dataclass(frozen=True)
class AmplitudeSchedule:
    """A(q): the stand-in for exp(-q**4)."""

    name: str
    power: int = 4

    def __call__(self, q: int) -> float:
        q = int(q)
        if self.name == "poly":
            a = float(q) ** -self.power if q.bit_length() < 1000 else 0.0
        elif self.name == "exp-mild":
            a = math.exp(-q) if q < 690 else 0.0
            a = max(a, 1e-300)
        elif self.name == "paper-literal":
            a = math.exp(-float(q) ** 4) if q < 27 else 0.0
        else:
            raise PreconditionError(f"unknown amplitude schedule {self.name!r}")
        if a == 0.0:
            raise PrecisionError(f"amplitude {self.spec()} underflows at q={q}")
        return a

    def spec(self) -> str:
        return f"poly:{self.power}" if self.name == "poly" and self.power != 4 else self.name


def parse_amplitude(spec: str) -> AmplitudeSchedule:
    name, _, p = spec.partition(":")
    if name not in ("poly", "exp-mild", "paper-literal"):
        raise PreconditionError(f"unknown amplitude schedule {spec!r}")
    if name == "poly":
        return AmplitudeSchedule("poly", int(p or 4))
    return AmplitudeSchedule(name)


# ---------------------------------------------------------------- tolerances

@dataclass(frozen=True)
class ToleranceSchema:
    """Scaled tolerances as powers of t = q q'.

    recurrence: |S_t phi - t| <= t**-recurrence_exponent
    smallness:  properties (3) and (5) use t**-smallness_exponent
    truncation: sup |X~ - X^| <= t**-truncation_exponent
    radius:     recurrence radius radius_factor * recurrence tolerance
    """

    recurrence_exponent: float = 0.5
    smallness_exponent: float = 1.5
    truncation_exponent: float = 1.5
    radius_factor: float = 2.0
    gordon_k_cap: int = 20

    def _pow(self, t, e):
        return math.exp(-e * math.log(t)) if t > 1 else 1.0

    def recurrence(self, t) -> float:
        return self._pow(t, self.recurrence_exponent)

    def smallness(self, t) -> float:
        return self._pow(t, self.smallness_exponent)

    def truncation(self, t) -> float:
        return self._pow(t, self.truncation_exponent)

    def radius(self, t) -> float:
        return self.radius_factor * self.recurrence(t)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "ToleranceSchema":
        return cls(**doc)


# ---------------------------------------------------------------- ceiling

@dataclass(frozen=True)
class LayerInfo:
    level: int
    width: int
    q: int
    q_prime: int
    amp_x: float
    amp_y: float
    tail: float
    tail_c1: float


@dataclass(frozen=True, eq=False)
class CeilingFunction:
    """phi(x, y) = 1 + sum_i X~_i(x) + Y_i(y)."""

    x_layers: tuple = ()
    y_layers: tuple = ()
    n0: int = MIN_WIDTH
    info: tuple = ()
    amplitude: str = ""
    margin: float = 1.0

    @property
    def levels(self) -> int:
        return len(self.x_layers)

    def eval_x(self, x):
        """Sum of the x-layers; Fraction input uses exact phases."""
        if isinstance(x, (Fraction, int)):
            return float(sum(p(x) for p in self.x_layers))
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for p in self.x_layers:
            out += p(x)
        return out

    def eval_y(self, y):
        if isinstance(y, (Fraction, int)):
            return float(sum(p(y) for p in self.y_layers))
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for p in self.y_layers:
            out += p(y)
        return out

    def __call__(self, x, y):
        return 1.0 + self.eval_x(x) + self.eval_y(y)

    def sup_layers(self) -> float:
        return sum(p.sup_bound() for p in self.x_layers) + sum(p.sup_bound() for p in self.y_layers)

    def sup(self) -> float:
        return 1.0 + self.sup_layers()

    def is_trivial(self) -> bool:
        return not self.x_layers and not self.y_layers

    # bundle io -----------------------------------------------------------

    def save(self, directory, pair: FrequencyPair | None = None):
        os.makedirs(directory, exist_ok=True)
        meta = {"schema": "ceiling-bundle/1", "n0": self.n0, "n_max": self.n0 + self.levels - 1,
                "levels": self.levels, "amplitude": self.amplitude,
                "schedule": pair.schedule_spec if pair else "",
                "layers": [asdict(i) for i in self.info]}
        for d in meta["layers"]:
            d["q"], d["q_prime"] = str(d["q"]), str(d["q_prime"])
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)
        if pair is not None:
            with open(os.path.join(directory, "pair.json"), "w") as fh:
                json.dump(pair.to_json(), fh, indent=1)
        for i, (px, py) in enumerate(zip(self.x_layers, self.y_layers), start=1):
            for tag, p in (("x", px), ("y", py)):
                with open(os.path.join(directory, f"{tag}_{i}.json"), "w") as fh:
                    json.dump(p.to_json(), fh)

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        if meta.get("schema") != "ceiling-bundle/1":
            raise PreconditionError("not a ceiling bundle")
        xs, ys = [], []
        for i in range(1, meta["levels"] + 1):
            for tag, acc in (("x", xs), ("y", ys)):
                with open(os.path.join(directory, f"{tag}_{i}.json")) as fh:
                    acc.append(TrigPolynomial.from_json(json.load(fh)))
        info = []
        for d in meta["layers"]:
            d = dict(d)
            d["q"], d["q_prime"] = int(d["q"]), int(d["q_prime"])
            info.append(LayerInfo(**d))
        return assemble_ceiling(xs, ys, meta["n0"], info=info, amplitude=meta.get("amplitude", ""))


def load_pair(directory) -> FrequencyPair:
    with open(os.path.join(directory, "pair.json")) as fh:
        return FrequencyPair.from_json(json.load(fh))


def assemble_ceiling(x_layers, y_layers, n0: int, *, info=(), amplitude: str = "") -> CeilingFunction:
    x_layers, y_layers = tuple(x_layers), tuple(y_layers)
    if len(x_layers) != len(y_layers):
        raise PreconditionError("x and y layer lists must be aligned by level")
    total = sum(p.sup_bound() for p in x_layers + y_layers)
    margin = 1.0 - total
    if not margin > 0:
        raise PositivityViolation(f"sum of layer sup-norms {total:.4g} >= 1; increase n0 or shrink amplitudes")
    return CeilingFunction(x_layers, y_layers, int(n0), tuple(info), amplitude, margin)


def build_ceiling(pair: FrequencyPair, amplitude: AmplitudeSchedule | str = "poly", n0: int = 32,
                  levels: int | None = None, *, kernel: BumpKernel | None = None,
                  harmonic_cap: int = 4096) -> CeilingFunction:
    """Build X~_i and Y_i for levels 1..levels; level i uses width n0 + i - 1."""
    if isinstance(amplitude, str):
        amplitude = parse_amplitude(amplitude)
    levels = pair.levels if levels is None else int(levels)
    if levels < 0 or levels > pair.levels:
        raise PreconditionError(f"pair has {pair.levels} levels, asked for {levels}")
    if n0 < MIN_WIDTH:
        raise PreconditionError(f"n0={n0} < {MIN_WIDTH}")
    kernel = kernel or BumpKernel()
    xs, ys, info = [], [], []
    for i in range(1, levels + 1):
        n, q, qp = n0 + i - 1, pair.q(i), pair.q_prime(i)
        ax, ay = amplitude(q), amplitude(qp)
        xhat = build_xhat(build_step_layer(n, q, kernel), ax)
        limit = (pair.q(i + 1) - 1) // q
        px, tail, tail_c1 = truncate_layer(xhat, limit, cap=harmonic_cap)
        xs.append(px)
        ys.append(build_y_layer(n, qp, ay))
        info.append(LayerInfo(i, n, q, qp, ax, ay, tail, tail_c1))
    return assemble_ceiling(xs, ys, n0, info=info, amplitude=amplitude.spec())


def constant_ceiling() -> CeilingFunction:
    return assemble_ceiling([], [], MIN_WIDTH)


def rebuild_xhat(ceiling: CeilingFunction, level: int, kernel: BumpKernel | None = None) -> XHat:
    inf = ceiling.info[level - 1]
    return build_xhat(build_step_layer(inf.width, inf.q, kernel), inf.amp_x)


# ---------------------------------------------------------------- property report

@dataclass
class PropertyEntry:
    prop: int
    level: int
    measured: float
    bound: float
    passed: bool
    r: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        if self.prop == 4:
            return self.measured - self.bound
        return self.bound - self.measured


@dataclass
class Prop36Report:
    entries: list = field(default_factory=list)

    def for_prop(self, prop: int) -> list:
        return [e for e in self.entries if e.prop == prop]

    def passed(self, prop: int | None = None) -> bool:
        es = self.entries if prop is None else self.for_prop(prop)
        return bool(es) and all(e.passed for e in es)

    def min_margin(self, prop: int) -> float:
        return min(e.margin for e in self.for_prop(prop))

    def to_json(self) -> dict:
        out = []
        for e in self.entries:
            d = asdict(e)
            d["margin"] = e.margin
            out.append(d)
        return {"schema": "prop36-report/1", "passed": self.passed(),
                "summary": {str(p): self.passed(p) for p in range(1, 7)}, "entries": out}


def _grid_size(poly: TrigPolynomial, per_period: int = 64) -> int:
    return max(per_period * max(poly.harmonics, 1), 1024)


def verify_properties(ceiling: CeilingFunction, pair: FrequencyPair, tolerances: ToleranceSchema | None = None,
                      *, r_max: int = 3, per_period: int = 64, m_samples: int = 24) -> Prop36Report:
    from .birkhoff import factor_array

    tol = tolerances or ToleranceSchema()
    if not ceiling.info or len(ceiling.info) != ceiling.levels:
        raise PreconditionError("ceiling carries no level metadata")
    rep = Prop36Report()
    for inf, px in zip(ceiling.info, ceiling.x_layers):
        if inf.q != pair.q(inf.level) or inf.q_prime != pair.q_prime(inf.level):
            raise PreconditionError(f"level {inf.level} does not match the frequency pair")
        lvl, n, q, A = inf.level, inf.width, inf.q, inf.amp_x
        t = pair.t(lvl)
        # (1) zero mean
        c0 = abs(px.mean)
        rep.entries.append(PropertyEntry(1, lvl, c0, 0.0, c0 == 0.0))
        # (2) C^r norms against sqrt(A) (n q)^r; the literal sqrt(A) margin is kept too
        for r in range(r_max + 1):
            norm = px.cr_norm_bound(r)
            bound = math.sqrt(A) * float(n * q) ** r
            rep.entries.append(PropertyEntry(2, lvl, norm, bound, norm <= bound, r,
                                             {"literal_bound": math.sqrt(A), "literal_pass": norm <= math.sqrt(A)}))
        M = _grid_size(px, per_period)
        vals = px.on_grid(M)
        u = np.arange(M) / M
        h = 1.0 / M
        # (3) smallness where {q x} <= 1/n; X^ vanishes there, so the tail bounds X~ too
        region = u <= 1.0 / n
        edge = px.at_phase(np.array([1.0 / n]))
        grid_sup = float(max(np.max(np.abs(vals[region])), np.abs(edge).max()))
        lip = 0.5 * h * px.derivative_bound(1) / q
        bound = tol.smallness(t)
        rep.entries.append(PropertyEntry(3, lvl, grid_sup, bound, grid_sup <= bound and inf.tail <= bound, None,
                                         {"tail_bound": inf.tail, "lipschitz_inflated": grid_sup + lip,
                                          "truncation_tolerance": tol.truncation(t),
                                          "truncation_pass": inf.tail <= tol.truncation(t)}))
        # (4) derivative on the plateaus, in x units
        dvals = px.on_grid(M, factors=2j * np.pi * np.arange(-px.harmonics, px.harmonics + 1) * float(q))
        worst = math.inf
        for lo, hi, sgn in build_step_layer(n, q).plateau_phases():
            sel = (u >= lo) & (u <= hi)
            ends = px.derivative(1).at_phase(np.array([lo, hi]))
            worst = min(worst, float(np.min(sgn * dvals[sel])), float(np.min(sgn * ends)))
        bound = A * q - inf.tail_c1
        rep.entries.append(PropertyEntry(4, lvl, worst, bound, worst >= bound, None,
                                         {"literal_bound": A * q, "literal_margin": worst - A * q,
                                          "c1_tail": inf.tail_c1}))
    # (5) and (6): Birkhoff sums of the lower layers at the level-n rotation
    alpha = pair.alpha_value
    for inf in ceiling.info:
        lvl, qn = inf.level, inf.q
        lower = list(zip(ceiling.info[:lvl - 1], ceiling.x_layers[:lvl - 1]))
        bound5 = tol.smallness(pair.t(lvl))
        if not lower:
            rep.entries.append(PropertyEntry(5, lvl, 0.0, bound5, True, None, {"empty": True}))
            rep.entries.append(PropertyEntry(6, lvl, 0.0, float(qn), True, None, {"empty": True}))
            continue
        s5 = 0.0
        for li, p in lower:
            Y, _ = factor_array(p.stride, p.harmonics, qn, alpha)
            s5 += float(np.sum(np.abs(p.coeffs * Y)))
        rep.entries.append(PropertyEntry(5, lvl, s5, bound5, s5 <= bound5))
        ms = sorted(set([1, 2, 3] + [li.q for li, _ in lower] + [qn - 1, qn, qn + 1]
                        + [int(v) for v in np.unique(np.round(np.logspace(0, math.log10(max(pair.t(lvl), 10)),
                                                                             m_samples)))]))
        s6 = 0.0
        for m in ms:
            tot = 0.0
            for li, p in lower:
                Y, _ = factor_array(p.stride, p.harmonics, m, alpha)
                k = np.arange(-p.harmonics, p.harmonics + 1) * float(p.stride)
                tot += float(np.sum(np.abs(p.coeffs * 2 * np.pi * k * Y)))
            s6 = max(s6, tot)
        rep.entries.append(PropertyEntry(6, lvl, s6, float(qn), s6 <= qn, None, {"m_values": len(ms)}))
    return rep
