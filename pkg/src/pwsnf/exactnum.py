"""Exact scalars.

Rationals are ``fractions.Fraction``.  ``ExtScalar`` is the small ring of
finite sums ``q * pi**e * E**m`` where ``E = exp(gamma1 * pi)`` for one fixed
rational ``gamma1``.  It is exactly what closed-form integrals over
``[0, pi]`` of ``tau**p * exp(a*tau) * sin/cos(b*tau)`` produce.

Coefficients are normally rationals, but any commutative ring element that
supports ``+``, ``-``, ``*`` and ``== 0`` works (``MultiPoly`` is used that
way by the return-map code).
"""

from __future__ import annotations

import threading
from fractions import Fraction
from numbers import Rational as _RationalABC

import mpmath

from .errors import EvaluationError

Rational = Fraction

_IV_LOCK = threading.Lock()


def rat(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, str, _RationalABC)):
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def rat_arith(a, b, op: str) -> Fraction:
    """Apply ``op`` in ``+ - * /`` to two rationals, exactly."""
    a, b = rat(a), rat(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op in ("*", "x", "×"):
        return a * b
    if op in ("/", "÷"):
        if b == 0:
            raise ZeroDivisionError("rational division by zero")
        return a / b
    raise ValueError(f"unknown operator {op!r}")


def _is_zero(c) -> bool:
    return c == 0


class ExtScalar:
    """Finite sum of ``coef * pi**e * E**m`` with ``E = exp(gamma1*pi)``."""

    __slots__ = ("gamma1", "_terms")

    def __init__(self, terms=None, gamma1=0):
        self.gamma1 = rat(gamma1)
        merged: dict[tuple[int, int], object] = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, c in items:
                e, m = key
                if self.gamma1 == 0:
                    # E = 1 when gamma1 = 0, so every E power collapses.
                    m = 0
                key = (int(e), int(m))
                if key in merged:
                    merged[key] = merged[key] + c
                else:
                    merged[key] = c
        self._terms = {k: v for k, v in merged.items() if not _is_zero(v)}

    @classmethod
    def const(cls, c, gamma1=0):
        return cls({(0, 0): c}, gamma1)

    @classmethod
    def pi(cls, power=1, gamma1=0, coef=1):
        return cls({(power, 0): rat(coef) if isinstance(coef, (int, str)) else coef}, gamma1)

    @classmethod
    def E(cls, power=1, gamma1=0, coef=1):
        return cls({(0, power): rat(coef) if isinstance(coef, (int, str)) else coef}, gamma1)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, e: int, m: int = 0):
        return self._terms.get((e, m), 0)

    def _check(self, other: "ExtScalar"):
        if self.gamma1 != other.gamma1:
            raise ValueError("ExtScalars with different gamma1 are not comparable")

    def _lift(self, other):
        if isinstance(other, ExtScalar):
            self._check(other)
            return other
        return ExtScalar.const(other, self.gamma1)

    def __add__(self, other):
        other = self._lift(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return ExtScalar(out, self.gamma1)

    __radd__ = __add__

    def __neg__(self):
        return ExtScalar({k: -v for k, v in self._terms.items()}, self.gamma1)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, ExtScalar):
            return ExtScalar({k: v * other for k, v in self._terms.items()}, self.gamma1)
        self._check(other)
        out: dict = {}
        for (e1, m1), c1 in self._terms.items():
            for (e2, m2), c2 in other._terms.items():
                key = (e1 + e2, m1 + m2)
                prod = c1 * c2
                out[key] = out[key] + prod if key in out else prod
        return ExtScalar(out, self.gamma1)

    def __rmul__(self, other):
        return self * other

    def map(self, fn) -> "ExtScalar":
        """Apply ``fn`` to every coefficient."""
        return ExtScalar({k: fn(v) for k, v in self._terms.items()}, self.gamma1)

    def __eq__(self, other):
        if isinstance(other, ExtScalar):
            return self.gamma1 == other.gamma1 and (self - other).is_zero()
        try:
            return (self - ExtScalar.const(other, self.gamma1)).is_zero()
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.gamma1, frozenset(self._terms.items())))

    def __repr__(self):
        return f"ExtScalar({self.to_text()}, gamma1={self.gamma1})"

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (e, m), c in sorted(self._terms.items(), reverse=True):
            factors = [f"({c})"]
            if e:
                factors.append("pi" if e == 1 else f"pi^{e}")
            if m:
                factors.append("E" if m == 1 else f"E^{m}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def ext_eval(s: ExtScalar, precision: int = 30):
    """Certified interval enclosure of ``s``.

    ``precision`` is in decimal digits; the returned ``mpmath`` interval has
    absolute width at most ``10**(-precision + 2)``.  Coefficients must be
    rational.
    """
    if precision < 15:
        raise ValueError("precision must be at least 15 digits")
    for c in s._terms.values():
        if not isinstance(c, (int, Fraction)):
            raise EvaluationError("ext_eval needs rational coefficients")
    target = mpmath.mpf(10) ** (-precision + 2)
    extra = 10
    with _IV_LOCK:
        while True:
            iv = mpmath.iv
            saved = iv.dps
            iv.dps = precision + extra
            try:
                pi = iv.pi
                E = iv.exp(iv.mpf(s.gamma1.numerator) / s.gamma1.denominator * pi)
                total = iv.mpf(0)
                for (e, m), c in s._terms.items():
                    c = Fraction(c)
                    term = iv.mpf(c.numerator) / c.denominator
                    if e:
                        term = term * pi**e
                    if m:
                        term = term * E**m
                    total = total + term
                lo, hi = total._mpi_
                width = mpmath.mpf(hi) - mpmath.mpf(lo)
            finally:
                iv.dps = saved
            if width <= target:
                return total
            extra += 20
            if extra > 2000:
                raise EvaluationError("could not reach the requested interval width")


def ext_value(s: ExtScalar, precision: int = 30):
    """Midpoint of ``ext_eval(s, precision)`` as an ``mpmath.mpf``.

    The value carries ``precision + 10`` decimal digits regardless of the
    caller's working precision.
    """
    enc = ext_eval(s, precision)
    lo, hi = enc._mpi_
    with mpmath.workdps(precision + 10):
        return (mpmath.mp.make_mpf(lo) + mpmath.mp.make_mpf(hi)) / 2
