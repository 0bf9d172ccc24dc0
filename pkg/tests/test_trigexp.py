import random
from fractions import Fraction

import mpmath
import pytest

from pwsnf.exactnum import ExtScalar, ext_eval
from pwsnf.trigexp import COS, SIN, TrigExpPoly, te_antiderivative, te_eval_at_pi, te_product


def rand_te(rng, n=4):
    out = TrigExpPoly.const(0)
    for _ in range(n):
        out = out + TrigExpPoly.term(Fraction(rng.randint(-6, 6), rng.randint(1, 4)), rng.randint(0, 2),
                                     Fraction(rng.randint(-3, 3), rng.randint(1, 2)), rng.randint(0, 3),
                                     rng.choice((COS, SIN)))
    return out


def test_product_numeric():
    rng = random.Random(2)
    for _ in range(20):
        f, g = rand_te(rng), rand_te(rng)
        h = te_product(f, g)
        with mpmath.workdps(30):
            for t in (Fraction(1, 3), Fraction(7, 5)):
                assert abs(h.numeric(t) - f.numeric(t) * g.numeric(t)) < mpmath.mpf(10) ** -20


def test_antiderivative_against_quadrature():
    rng = random.Random(3)
    for _ in range(10):
        f = rand_te(rng, 3)
        F = te_antiderivative(f)
        with mpmath.workdps(30):
            assert abs(F.numeric(0)) < mpmath.mpf(10) ** -25
            q = mpmath.quad(lambda t: f.numeric(t), [0, 1])
            assert abs(F.numeric(1) - q) < mpmath.mpf(10) ** -20


def test_derivative_inverts_antiderivative():
    rng = random.Random(4)
    for _ in range(50):
        f = rand_te(rng)
        assert te_antiderivative(f).derivative() == f


def test_sin_power_linearization():
    f = TrigExpPoly.sin_power(3, Fraction(1, 2), 2)
    t = Fraction(2, 3)
    with mpmath.workdps(30):
        want = 2 * mpmath.sin(mpmath.mpf(2) / 3) ** 3 * mpmath.exp(mpmath.mpf(1) / 3)
        assert abs(f.numeric(t) - want) < mpmath.mpf(10) ** -25


def test_eval_at_pi_closed_form():
    g = Fraction(2, 3)
    F = te_antiderivative(TrigExpPoly.sin_power(1, g))
    val = te_eval_at_pi(F, g)
    want = (ExtScalar.const(1, g) + ExtScalar.E(1, g)) * Fraction(1, 1 + g * g)
    assert val == want


def test_eval_at_pi_needs_integer_multiples_of_gamma():
    F = TrigExpPoly.term(1, 0, Fraction(1, 3), 0, COS)
    with pytest.raises(Exception):
        te_eval_at_pi(F, Fraction(1, 2))


def test_eval_at_pi_numeric():
    g = Fraction(-1, 4)
    F = te_antiderivative(TrigExpPoly.sin_power(4, 3 * g))
    with mpmath.workdps(40):
        q = mpmath.quad(lambda t: mpmath.sin(t) ** 4 * mpmath.exp(-3 * t / 4), [0, mpmath.pi])
        v = ext_eval(te_eval_at_pi(F, g), 30)
        lo, hi = mpmath.mpf(v.a.a), mpmath.mpf(v.b.b)
        assert lo - mpmath.mpf(10) ** -25 <= q <= hi + mpmath.mpf(10) ** -25
