import random
from fractions import Fraction

import pytest
import sympy as sp

from pwsnf.bell import DEFAULT_TABLE, bell, bell_powers


def test_small_values():
    # B(3, 2)(v1, v2) = 2 v1 v2 ; B(4, 2) = 2 v1 v3 + v2^2
    assert bell(3, 2, [2, 5]) == 20
    assert bell(4, 2, [1, 2, 3]) == 2 * 3 + 4
    assert bell(5, 5, [3]) == 243
    assert bell(4, 3, [0, 7]) == 0


def test_bad_arguments():
    with pytest.raises(ValueError):
        bell(2, 3, [1, 2])
    with pytest.raises(ValueError):
        bell(5, 2, [1, 2])


def test_symbolic_table_against_sympy():
    x = sp.Symbol("x")
    vs = sp.symbols("v1:9")
    series = sum(vs[j] * x ** (j + 1) for j in range(8))
    for i in range(1, 9):
        power = sp.expand(series ** i)
        for k in range(i, 9):
            mine = DEFAULT_TABLE.get(k, i).to_text().replace("^", "**")
            theirs = power.coeff(x, k)
            assert sp.expand(sp.sympify(mine, locals={f"v{j}": vs[j - 1] for j in range(1, 9)}) - theirs) == 0


def test_bell_powers_with_rationals():
    rng = random.Random(5)
    args = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(10)]
    table = bell_powers(10, args)
    x = sp.Symbol("x")
    s = sum(sp.Rational(a.numerator, a.denominator) * x ** (j + 1) for j, a in enumerate(args))
    for i in range(1, 11):
        p = sp.expand(s ** i)
        for k in range(i, 11):
            assert table.get((k, i), 0) == p.coeff(x, k)
