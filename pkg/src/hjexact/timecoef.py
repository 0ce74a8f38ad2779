"""Closed algebra of time coefficients ``sum_k a_k t**n_k exp(rate_k t)``.

All time dependence in the harmonic families lives here.  The algebra is
closed under addition, multiplication, differentiation and
antidifferentiation, so integrals such as ``int_0^t alpha(s)**2 ds`` are
computed exactly, never by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, complex]


def _canonical(terms: Iterable[tuple[Number, int, float]]) -> tuple:
    acc: dict[tuple[int, float], complex] = {}
    for a, n, rate in terms:
        n = int(n)
        if n < 0:
            raise ValueError(f"negative power {n}")
        rate = float(rate)
        key = (n, rate)
        acc[key] = acc.get(key, 0j) + complex(a)
    return tuple(
        (acc[key], key[0], key[1]) for key in sorted(acc) if acc[key] != 0
    )


@dataclass(frozen=True)
class TimeCoefficient:
    """Finite sum of ``a * t**n * exp(rate * t)`` terms.

    ``terms`` is kept canonical: sorted by ``(n, rate)``, no duplicate keys and
    no zero amplitudes.  Build instances with :meth:`from_terms` or the small
    constructors rather than by hand.
    """

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical(self.terms))

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[Number, int, float]]) -> "TimeCoefficient":
        return cls(tuple(terms))

    @classmethod
    def constant(cls, a: Number) -> "TimeCoefficient":
        return cls(((a, 0, 0.0),))

    @classmethod
    def monomial(cls, a: Number = 1.0, n: int = 0, rate: float = 0.0) -> "TimeCoefficient":
        return cls(((a, n, rate),))

    @classmethod
    def polynomial(cls, coeffs: Iterable[Number]) -> "TimeCoefficient":
        """``coeffs[j]`` multiplies ``t**j``."""
        return cls(tuple((a, j, 0.0) for j, a in enumerate(coeffs)))

    # -- evaluation -------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for a, n, rate in self.terms:
            term = a * t**n
            if rate != 0.0:
                term = term * np.exp(rate * t)
            out = out + term
        return out[()] if out.ndim == 0 else out

    def real_value(self, t):
        """Evaluate and drop the imaginary part (for real-valued coefficients)."""
        v = self(t)
        return float(v.real) if np.ndim(v) == 0 else v.real

    @property
    def is_real(self) -> bool:
        return all(a.imag == 0 for a, _, _ in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    # -- algebra ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return TimeCoefficient(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return TimeCoefficient(tuple((-a, n, r) for a, n, r in self.terms))

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return TimeCoefficient(
            tuple(
                (a1 * a2, n1 + n2, r1 + r2)
                for a1, n1, r1 in self.terms
                for a2, n2, r2 in other.terms
            )
        )

    __rmul__ = __mul__

    def conj(self) -> "TimeCoefficient":
        return TimeCoefficient(tuple((a.conjugate(), n, r) for a, n, r in self.terms))

    def derivative(self) -> "TimeCoefficient":
        out = []
        for a, n, rate in self.terms:
            if n > 0:
                out.append((a * n, n - 1, rate))
            if rate != 0.0:
                out.append((a * rate, n, rate))
        return TimeCoefficient(tuple(out))

    def antiderivative(self) -> "TimeCoefficient":
        """Antiderivative that vanishes at ``t = 0``.

        For ``rate != 0``::

            int t**n e^{rt} dt = e^{rt} sum_{k=0}^{n} (-1)**k n!/(n-k)! t**(n-k) / r**(k+1)
        """
        out = []
        for a, n, rate in self.terms:
            if rate == 0.0:
                out.append((a / (n + 1), n + 1, 0.0))
                continue
            for k in range(n + 1):
                c = (-1) ** k * factorial(n) / factorial(n - k) / rate ** (k + 1)
                out.append((a * c, n - k, rate))
            # value of the sum above at t = 0 comes from the k = n term only
            out.append((-a * (-1) ** n * factorial(n) / rate ** (n + 1), 0, 0.0))
        return TimeCoefficient(tuple(out))

    def allclose(self, other: "TimeCoefficient", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        """Term-wise comparison; missing terms count as zero amplitude."""
        other = _coerce(other)
        mine = {(n, r): a for a, n, r in self.terms}
        theirs = {(n, r): a for a, n, r in other.terms}
        scale = max([abs(a) for a in mine.values()] + [abs(a) for a in theirs.values()] + [0.0])
        for key in set(mine) | set(theirs):
            if abs(mine.get(key, 0j) - theirs.get(key, 0j)) > atol + rtol * scale:
                return False
        return True

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list:
        return [
            {"a": [a.real, a.imag], "n": n, "rate": rate} for a, n, rate in self.terms
        ]

    @classmethod
    def from_json(cls, data) -> "TimeCoefficient":
        if isinstance(data, (int, float)):
            return cls.constant(data)
        terms = []
        for item in data:
            a = item["a"]
            if isinstance(a, (list, tuple)):
                a = complex(a[0], a[1])
            terms.append((a, item.get("n", 0), item.get("rate", 0.0)))
        return cls.from_terms(terms)

    def __repr__(self):
        parts = []
        for a, n, rate in self.terms:
            s = f"({a:g})"
            if n:
                s += f"*t^{n}"
            if rate:
                s += f"*exp({rate:g}t)"
            parts.append(s)
        return "TimeCoefficient(" + (" + ".join(parts) or "0") + ")"


def _coerce(value):
    if isinstance(value, TimeCoefficient):
        return value
    if isinstance(value, (int, float, complex, np.number)):
        return TimeCoefficient.constant(complex(value))
    return NotImplemented
