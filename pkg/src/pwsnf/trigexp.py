"""Exact trig-exponential polynomials in one variable ``tau``.

A ``TrigExpPoly`` is a finite sum of terms

    c * tau**p * exp(a*tau) * cos(b*tau)   or   c * tau**p * exp(a*tau) * sin(b*tau)

with rational ``a``, ``b`` and coefficients ``c`` that are rationals or
``MultiPoly`` values.  The set is closed under products (product-to-sum
identities), derivatives and antiderivatives, which is all the half return
map of a focus needs.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath

from .errors import EvaluationError
from .exactnum import ExtScalar, rat

COS = "cos"
SIN = "sin"


def _is_zero(c):
    return c == 0


def _canon(p, a, b, kind, c):
    """Return ``(key, coefficient)`` with ``b >= 0`` or ``None`` if zero."""
    if b < 0:
        b = -b
        if kind == SIN:
            c = -c
    if kind == SIN and b == 0:
        return None
    return (p, a, b, kind), c


class TrigExpPoly:
    """Immutable sum of ``tau^p e^{a tau} cos|sin(b tau)`` terms."""

    __slots__ = ("_t",)

    def __init__(self, terms=None):
        d: dict = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, c in items:
                p, a, b, kind = key
                if kind not in (COS, SIN):
                    raise ValueError(f"unknown kind {kind!r}")
                if isinstance(c, (int, str)):
                    c = rat(c)
                res = _canon(int(p), rat(a), rat(b), kind, c)
                if res is None:
                    continue
                k, c = res
                d[k] = d[k] + c if k in d else c
        self._t = {k: v for k, v in d.items() if not _is_zero(v)}

    @classmethod
    def _make(cls, d):
        obj = object.__new__(cls)
        obj._t = {k: v for k, v in d.items() if not _is_zero(v)}
        return obj

    @classmethod
    def const(cls, c):
        return cls({(0, 0, 0, COS): c})

    @classmethod
    def term(cls, c=1, p=0, a=0, b=0, kind=COS):
        return cls({(p, a, b, kind): c})

    @classmethod
    def sin_power(cls, n: int, rate=0, coef=1):
        """``coef * sin(tau)**n * exp(rate*tau)``, linearized."""
        out = cls.term(coef, 0, rate, 0, COS)
        s = cls.term(1, 0, 0, 1, SIN)
        for _ in range(n):
            out = out * s
        return out

    @property
    def terms(self) -> dict:
        return dict(self._t)

    def is_zero(self):
        return not self._t

    def __eq__(self, other):
        if isinstance(other, TrigExpPoly):
            return (self - other).is_zero()
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._t.items()))

    def __add__(self, other):
        if not isinstance(other, TrigExpPoly):
            other = TrigExpPoly.const(other)
        d = dict(self._t)
        for k, v in other._t.items():
            d[k] = d[k] + v if k in d else v
        return TrigExpPoly._make(d)

    __radd__ = __add__

    def __neg__(self):
        return TrigExpPoly._make({k: -v for k, v in self._t.items()})

    def __sub__(self, other):
        if not isinstance(other, TrigExpPoly):
            other = TrigExpPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return TrigExpPoly.const(other) - self

    def scale(self, c):
        return TrigExpPoly._make({k: v * c for k, v in self._t.items()})

    def __mul__(self, other):
        if not isinstance(other, TrigExpPoly):
            return self.scale(other)
        half = Fraction(1, 2)
        d: dict = {}

        def put(p, a, b, kind, c):
            res = _canon(p, a, b, kind, c)
            if res is None:
                return
            k, c = res
            d[k] = d[k] + c if k in d else c

        for (p1, a1, b1, k1), c1 in self._t.items():
            for (p2, a2, b2, k2), c2 in other._t.items():
                p, a = p1 + p2, a1 + a2
                c = c1 * c2
                if b1 == 0 and k1 == COS:
                    put(p, a, b2, k2, c)
                    continue
                if b2 == 0 and k2 == COS:
                    put(p, a, b1, k1, c)
                    continue
                hc = c * half
                if k1 == COS and k2 == COS:
                    put(p, a, b1 - b2, COS, hc)
                    put(p, a, b1 + b2, COS, hc)
                elif k1 == SIN and k2 == SIN:
                    put(p, a, b1 - b2, COS, hc)
                    put(p, a, b1 + b2, COS, -hc)
                elif k1 == SIN:
                    put(p, a, b1 + b2, SIN, hc)
                    put(p, a, b1 - b2, SIN, hc)
                else:
                    put(p, a, b1 + b2, SIN, hc)
                    put(p, a, b2 - b1, SIN, hc)
        return TrigExpPoly._make(d)

    def __rmul__(self, other):
        return self.scale(other)

    def derivative(self) -> "TrigExpPoly":
        d: dict = {}

        def put(key, c):
            d[key] = d[key] + c if key in d else c

        for (p, a, b, kind), c in self._t.items():
            if p:
                put((p - 1, a, b, kind), c * p)
            if a:
                put((p, a, b, kind), c * a)
            if b:
                if kind == COS:
                    put((p, a, b, SIN), -(c * b))
                else:
                    put((p, a, b, COS), c * b)
        return TrigExpPoly._make(d)

    def antiderivative(self) -> "TrigExpPoly":
        return te_antiderivative(self)

    def eval_at_pi(self, gamma1) -> ExtScalar:
        return te_eval_at_pi(self, gamma1)

    def numeric(self, tau, dps=30):
        """Evaluate at a real ``tau`` (coefficients must be rational)."""
        with mpmath.workdps(dps):
            t = mpmath.mpf(tau) if not isinstance(tau, Fraction) else \
                mpmath.mpf(tau.numerator) / tau.denominator
            total = mpmath.mpf(0)
            for (p, a, b, kind), c in self._t.items():
                c = Fraction(c)
                fa = mpmath.mpf(a.numerator) / a.denominator
                fb = mpmath.mpf(b.numerator) / b.denominator
                trig = mpmath.cos(fb * t) if kind == COS else mpmath.sin(fb * t)
                total += mpmath.mpf(c.numerator) / c.denominator * t**p * mpmath.exp(fa * t) * trig
            return total

    def __repr__(self):
        parts = []
        for (p, a, b, kind), c in sorted(self._t.items(), key=lambda kv: kv[0]):
            parts.append(f"({c})*tau^{p}*e^({a}tau)*{kind}({b}tau)")
        return "TrigExpPoly(" + " + ".join(parts) + ")" if parts else "TrigExpPoly(0)"


def te_product(f: TrigExpPoly, g: TrigExpPoly) -> TrigExpPoly:
    return f * g


_PRIM_CACHE: dict = {}


def _primitive(p, a, b, kind):
    """Antiderivative (no constant) of ``tau^p e^{a tau} kind(b tau)`` as a
    dict of rational-coefficient terms; ``(a, b) != (0, 0)``."""
    key = (p, a, b, kind)
    hit = _PRIM_CACHE.get(key)
    if hit is not None:
        return hit
    den = a * a + b * b
    # Primitive G of e^{a t} kind(b t):
    #   cos -> e^{at} (a cos + b sin) / (a^2 + b^2)
    #   sin -> e^{at} (a sin - b cos) / (a^2 + b^2)
    if kind == COS:
        g = {COS: a / den, SIN: b / den}
    else:
        g = {SIN: a / den, COS: -b / den}
    out: dict = {}

    def put(k, c):
        if not c:
            return
        res = _canon(*k, c)
        if res is None:
            return
        kk, cc = res
        out[kk] = out.get(kk, 0) + cc

    # integrate by parts: int t^p g = t^p G - p int t^{p-1} G
    for knd, c in g.items():
        put((p, a, b, knd), c)
        if p:
            for k2, c2 in _primitive(p - 1, a, b, knd).items():
                put(k2, -p * c * c2)
    out = {k: v for k, v in out.items() if v}
    _PRIM_CACHE[key] = out
    return out


def te_antiderivative(f: TrigExpPoly) -> TrigExpPoly:
    """Exact antiderivative ``F`` with ``F' = f`` and ``F(0) = 0``."""
    d: dict = {}

    def put(key, c):
        d[key] = d[key] + c if key in d else c

    for (p, a, b, kind), c in f._t.items():
        if a == 0 and b == 0:
            put((p + 1, a, b, COS), c * Fraction(1, p + 1))
            continue
        for k, r in _primitive(p, a, b, kind).items():
            put(k, c * r)
    F = TrigExpPoly._make(d)
    # F(0): only tau^0 cos terms survive at tau = 0
    c0 = None
    for (p, a, b, kind), c in F._t.items():
        if p == 0 and kind == COS:
            c0 = c if c0 is None else c0 + c
    if c0 is not None and not _is_zero(c0):
        F = F - TrigExpPoly.const(c0)
    return F


def te_eval_at_pi(f: TrigExpPoly, gamma1) -> ExtScalar:
    """Value at ``tau = pi`` as an ``ExtScalar`` over ``E = exp(gamma1*pi)``."""
    gamma1 = rat(gamma1)
    terms: dict = {}
    for (p, a, b, kind), c in f._t.items():
        if b.denominator != 1:
            raise EvaluationError(f"frequency {b} is not an integer; cannot evaluate at pi")
        if kind == SIN:
            continue
        sign = -1 if b.numerator % 2 else 1
        if a == 0:
            m = 0
        else:
            if gamma1 == 0:
                raise EvaluationError(f"rate {a} with gamma1 = 0 cannot be expressed through E")
            ratio = a / gamma1
            if ratio.denominator != 1:
                raise EvaluationError(f"rate {a} is not an integer multiple of gamma1 = {gamma1}")
            m = ratio.numerator
        key = (p, m)
        val = c if sign == 1 else -c
        terms[key] = terms[key] + val if key in terms else val
    return ExtScalar(terms, gamma1)
