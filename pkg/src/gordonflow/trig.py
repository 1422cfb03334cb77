"""Finite Fourier series on the circle with strided frequency support.

A ``TrigPolynomial`` stores harmonics j = -J..J of a base frequency ``stride``:

    p(x) = sum_j c_j exp(2 pi i j stride x)

so the frequency of harmonic j is ``j * stride``. Layers of the ceiling are
supported on multiples of a (possibly huge) denominator, and keeping the stride
separate lets evaluation work on the phase u = {stride * x}, which can be
computed exactly from rational coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PreconditionError

TWO_PI = 2.0 * math.pi


def phase(stride: int, x) -> float | np.ndarray:
    """{stride * x} in [0, 1). Exact for Fraction/int x, floating point otherwise."""
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        return float(Fraction((stride * x.numerator) % x.denominator, x.denominator))
    return np.mod(stride * np.asarray(x, dtype=float), 1.0)


def phase_grid(stride: int, M: int) -> np.ndarray:
    """Exact phases {stride * i / M} for i = 0..M-1, as floats."""
    r = int(stride) % M
    idx = (np.arange(M, dtype=object) * r) % M
    return idx.astype(float) / M


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    coeffs: np.ndarray          # complex, length 2J+1, index j+J
    stride: int = 1
    real: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 != 1:
            raise PreconditionError("coefficient array must have odd length 2J+1")
        if int(self.stride) < 1:
            raise PreconditionError("stride must be a positive integer")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "stride", int(self.stride))

    # construction --------------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls(np.zeros(1, complex))

    @classmethod
    def constant(cls, value: float) -> "TrigPolynomial":
        return cls(np.array([value], complex))

    @classmethod
    def cosine(cls, frequency: int, amplitude: float) -> "TrigPolynomial":
        """amplitude * cos(2 pi frequency x)."""
        return cls(np.array([amplitude / 2, 0.0, amplitude / 2], complex), stride=int(frequency))

    @classmethod
    def from_dict(cls, coefficients: dict[int, complex], real: bool = True) -> "TrigPolynomial":
        ks = [int(k) for k, v in coefficients.items() if v != 0]
        if not ks or all(k == 0 for k in ks):
            return cls.constant(complex(coefficients.get(0, 0.0)).real if real else coefficients.get(0, 0.0))
        stride = math.gcd(*[abs(k) for k in ks if k])
        J = max(abs(k) for k in ks) // stride
        c = np.zeros(2 * J + 1, complex)
        for k, v in coefficients.items():
            c[int(k) // stride + J] += v
        return cls(c, stride, real)

    # basic properties ----------------------------------------------------

    @property
    def harmonics(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def degree_bound(self) -> int:
        """Smallest B with c_k = 0 for all |k| >= B."""
        nz = np.nonzero(self.coeffs)[0]
        if len(nz) == 0:
            return 0
        return int(np.max(np.abs(nz - self.harmonics))) * self.stride + 1

    def frequencies(self) -> list[int]:
        J = self.harmonics
        return [j * self.stride for j in range(-J, J + 1)]

    def coefficient(self, k: int) -> complex:
        if k % self.stride:
            return 0j
        j = k // self.stride
        if abs(j) > self.harmonics:
            return 0j
        return complex(self.coeffs[j + self.harmonics])

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[self.harmonics])

    def is_conjugate_symmetric(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs - np.conj(self.coeffs[::-1])) <= tol))

    def sup_bound(self) -> float:
        """Sum of |c_k|, an upper bound for the sup norm."""
        return float(np.sum(np.abs(self.coeffs)))

    def derivative_bound(self, r: int) -> float:
        """Sum of |c_k| (2 pi |k|)^r >= sup |p^(r)|."""
        J = self.harmonics
        k = np.abs(np.arange(-J, J + 1)) * float(self.stride)
        return float(np.sum(np.abs(self.coeffs) * (TWO_PI * k) ** r))

    def cr_norm_bound(self, r: int) -> float:
        return max(self.derivative_bound(i) for i in range(r + 1))

    # evaluation ----------------------------------------------------------

    def at_phase(self, u, factors: np.ndarray | None = None):
        """Evaluate given u = {stride x}. ``factors`` multiplies coefficient j first."""
        u = np.asarray(u, dtype=float)
        c = self.coeffs if factors is None else self.coeffs * factors
        J = self.harmonics
        if J == 0:
            out = np.full(u.shape, c[0], dtype=complex)
        else:
            # Horner-free direct sum: rows are points, columns are harmonics
            j = np.arange(-J, J + 1)
            flat = u.reshape(-1)
            out = np.empty(flat.shape, complex)
            chunk = max(1, 4_000_000 // len(j))
            for s in range(0, len(flat), chunk):
                e = np.exp(2j * np.pi * np.outer(flat[s:s + chunk], j))
                out[s:s + chunk] = e @ c
            out = out.reshape(u.shape)
        return out.real if self.real else out

    def on_grid(self, M: int, factors: np.ndarray | None = None):
        """Values at the phases u = i/M, i = 0..M-1, by one inverse FFT (needs M > 2J)."""
        J = self.harmonics
        if M <= 2 * J:
            raise PreconditionError(f"grid of {M} points cannot hold {J} harmonics")
        c = self.coeffs if factors is None else self.coeffs * factors
        buf = np.zeros(M, complex)
        buf[:J + 1] = c[J:]
        if J:
            buf[M - J:] = c[:J]
        out = np.fft.ifft(buf) * M
        return out.real if self.real else out

    def __call__(self, x):
        if isinstance(x, (Fraction, int)):
            return self.at_phase(phase(self.stride, x)).item()
        return self.at_phase(phase(self.stride, x))

    def derivative(self, order: int = 1) -> "TrigPolynomial":
        J = self.harmonics
        k = np.arange(-J, J + 1) * float(self.stride)
        return TrigPolynomial(self.coeffs * (2j * np.pi * k) ** order, self.stride, self.real)

    def scaled(self, factor: float) -> "TrigPolynomial":
        return TrigPolynomial(self.coeffs * factor, self.stride, self.real)

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        if self.stride == other.stride or self.harmonics == 0 or other.harmonics == 0:
            stride = self.stride if self.harmonics else other.stride
            J = max(self.harmonics, other.harmonics)
            c = np.zeros(2 * J + 1, complex)
            for p in (self, other):
                h = p.harmonics
                c[J - h:J + h + 1] += p.coeffs
            return TrigPolynomial(c, stride, self.real and other.real)
        d = {}
        for p in (self, other):
            for k, v in zip(p.frequencies(), p.coeffs):
                if v != 0:
                    d[k] = d.get(k, 0) + v
        return TrigPolynomial.from_dict(d, self.real and other.real)

    # serialization -------------------------------------------------------

    def to_json(self) -> dict:
        coeffs = {}
        for k, v in zip(self.frequencies(), self.coeffs):
            if v != 0:
                coeffs[str(k)] = [repr(float(v.real)), repr(float(v.imag))]
        return {"schema": "trig-polynomial/1", "stride": str(self.stride), "harmonics": self.harmonics,
                "real": self.real, "coefficients": coeffs}

    @classmethod
    def from_json(cls, doc: dict) -> "TrigPolynomial":
        stride = int(doc["stride"])
        J = int(doc["harmonics"])
        c = np.zeros(2 * J + 1, complex)
        for k, (re, im) in doc["coefficients"].items():
            k = int(k)
            if k % stride:
                raise PreconditionError(f"frequency {k} is not a multiple of stride {stride}")
            c[k // stride + J] = complex(float(re), float(im))
        return cls(c, stride, bool(doc.get("real", True)))

    def __eq__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return (self.stride == other.stride and self.real == other.real
                and self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs)))

    __hash__ = None
