import random
from fractions import Fraction

import pytest
import sympy as sp

from pwsnf.errors import PreconditionError
from pwsnf.lyapunov import analyze
from pwsnf.nf_focus import recompose_rescaled, reduce_lower_focus, reduce_upper_focus, to_rotation_form
from pwsnf.sysmodel import PiecewiseSystem

x, y = sp.symbols("x y")


def sym(poly):
    return sp.sympify(poly.to_text().replace("^", "**"), locals={"x": x, "y": y})


def truncate(e, d):
    p = sp.Poly(sp.expand(e), x, y)
    return sum(c * x ** i * y ** j for (i, j), c in p.terms() if i + j <= d)


def pull_back(F, G, g1, g2, d):
    """(I + Dg)^{-1} (F, G)(u + g), truncated at degree d (sympy oracle)."""
    Fs = truncate(F.subs({x: x + g1, y: y + g2}, simultaneous=True), d)
    Gs = truncate(G.subs({x: x + g1, y: y + g2}, simultaneous=True), d)
    J = sp.Matrix([[sp.diff(g1, x), sp.diff(g1, y)], [sp.diff(g2, x), sp.diff(g2, y)]])
    inv = sp.eye(2)
    term = sp.eye(2)
    for _ in range(d):
        term = (-J * term).applyfunc(lambda e: truncate(e, d))
        inv = inv + term
    v = inv * sp.Matrix([Fs, Gs])
    return truncate(v[0], d), truncate(v[1], d)


def normal_form_field(nf, d):
    a, b = sp.Rational(nf.alpha), sp.Rational(nf.beta)
    X = a * x - b * y
    Y = b * x + a * y
    for k in range(1, nf.N + 1):
        nu = sym(nf.nu[k + 1])
        eta = sym(nf.eta[k + 1])
        X += y ** k * (nu * x - eta * y)
        Y += y ** k * (eta * x + nu * y)
    return truncate(X, d), truncate(Y, d)


def rand_field(rng, deg=3):
    def part():
        return " + ".join(f"({Fraction(rng.randint(-3, 3), rng.randint(1, 3))})*x^{i}*y^{j}"
                          for i in range(deg + 1) for j in range(deg + 1) if 2 <= i + j <= deg)
    return part(), part()


@pytest.mark.parametrize("seed", range(4))
def test_recorded_transforms_conjugate_to_normal_form(seed):
    rng = random.Random(seed)
    p, q = rand_field(rng)
    s = PiecewiseSystem((f"-y + {p}", f"x + {q}"), ("-y", "x"))
    N = 3
    nf = reduce_upper_focus(*s.upper, N)
    F, G = sym(s.upper[0]), sym(s.upper[1])
    for degree, g1, g2 in nf.transform.orders:
        F, G = pull_back(F, G, sym(g1), sym(g2), N + 1)
    NX, NY = normal_form_field(nf, N + 1)
    assert sp.expand(F - NX) == 0
    assert sp.expand(G - NY) == 0


def test_transforms_fix_the_switching_line():
    s = PiecewiseSystem(("-y + x^2 - x*y + y^3", "x + y^2 + x^3"), ("-y", "x"))
    nf = reduce_upper_focus(*s.upper, 5)
    for _, g1, g2 in nf.transform.orders:
        assert g2.subs({"y": 0}).is_zero()


def test_time_rescaling_removes_eta():
    s = PiecewiseSystem(("x/3 - 2*y + x^2 - x*y", "2*x + y/3 + y^2 + x^3"), ("-y", "x"))
    N = 4
    nf = reduce_upper_focus(*s.upper, N)
    gam, eta, _ = recompose_rescaled(nf.alpha, nf.beta, nf.nu, nf.eta, nf.T, N, s.table)
    for k in range(1, N + 2):
        assert gam[k] == nf.gamma[k]
    for k in range(2, N + 2):
        assert eta[k].is_zero()


def test_rotation_form():
    s = PiecewiseSystem(("x - 5*y", "2*x - y"), ("-y", "x"))
    alpha, beta, q1, q2, Xr, Yr = to_rotation_form(*s.upper)
    assert (alpha, beta) == (0, 3)
    assert q1 > 0


def test_rotation_form_refuses_symbolic_linear_part():
    s = PiecewiseSystem(("a*x - y", "x"), ("-y", "x"), ["a"])
    with pytest.raises(PreconditionError, match="--set"):
        to_rotation_form(*s.upper)


def test_lower_focus_sign_convention():
    # the same field on both sides is smooth: gamma^- = (-1)^k gamma~ makes
    # odd indices of the two sides equal up to the flip
    s = PiecewiseSystem(("-y + x^2 + x*y", "x + y^2"), ("-y + x^2 + x*y", "x + y^2"))
    up = reduce_upper_focus(*s.upper, 4)
    lo = reduce_lower_focus(*s.lower, 4)
    assert set(up.gamma) == set(lo.gamma)


def test_first_lyapunov_coefficient_textbook_formula():
    """Smooth limit: V_3 = 2 pi a with the classical Hopf coefficient ``a``."""
    rng = random.Random(9)
    for _ in range(5):
        p, q = rand_field(rng)
        s = PiecewiseSystem((f"-y + {p}", f"x + {q}"), (f"-y + {p}", f"x + {q}"))
        f, g = sym(s.upper[0]) + y, sym(s.upper[1]) - x
        d = lambda e, *v: sp.diff(e, *v).subs({x: 0, y: 0})
        a = (d(f, x, x, x) + d(f, x, y, y) + d(g, x, x, y) + d(g, y, y, y)) / 16 + (
            d(f, x, y) * (d(f, x, x) + d(f, y, y)) - d(g, x, y) * (d(g, x, x) + d(g, y, y))
            - d(f, x, x) * d(g, x, x) + d(f, y, y) * d(g, y, y)) / 16
        an = analyze(s, 3)
        assert an.sequence.L(2).is_zero()
        # V_3 = (pi/2) L_3 and V_3 = 2 pi a
        assert an.sequence.L(3).constant_value() == 4 * Fraction(str(a))
