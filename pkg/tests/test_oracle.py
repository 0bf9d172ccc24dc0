import csv
from fractions import Fraction

import mpmath
import pytest

from pwsnf.errors import OracleError, PreconditionError, ResourceBudgetError
from pwsnf.oracle import displacement, fit_displacement, half_return
from pwsnf.sysmodel import PiecewiseSystem, classify

from conftest import load

ROT = PiecewiseSystem(("-y", "x"), ("-y", "x"))


def test_rigid_rotation_half_maps():
    up = half_return(ROT, Fraction(1, 100), "upper")
    lo = half_return(ROT, Fraction(1, 100), "lower-inverse")
    for r in (up, lo):
        assert abs(r.exit_x + mpmath.mpf("0.01")) < 1e-12
        assert r.event_residual < 1e-30
        assert r.steps >= 1


def test_linear_focus_half_map_closed_form():
    s = PiecewiseSystem(("x/4 - y", "x + y/4"), ("-y", "x"))
    r = half_return(s, Fraction(1, 50), "upper")
    with mpmath.workdps(40):
        want = -mpmath.mpf(1) / 50 * mpmath.exp(mpmath.pi / 4)
        assert abs(r.exit_x - want) < mpmath.mpf(10) ** -30


def test_tangency_half_map_closed_form():
    # x' = -1, y' = x: y = (x0^2 - x^2)/2 returns at -x0 exactly
    s = PiecewiseSystem(("-y", "x"), ("1", "x"))
    r = half_return(s, Fraction(3, 100), "lower-inverse")
    assert abs(r.exit_x * 100 + 3) < 1e-28


def test_escape_is_reported():
    s = load("quadratic.toml", p20=1, p11=1, p02=0, q20=1, q11=0, q02=1)
    with pytest.raises(OracleError, match="escape"):
        half_return(s, 10)


def test_step_budget():
    with pytest.raises(ResourceBudgetError):
        half_return(ROT, Fraction(1, 100), "upper", max_steps=2)


def test_needs_numeric_and_monodromic_system():
    with pytest.raises(PreconditionError):
        half_return(load("quadratic.toml"), Fraction(1, 100))
    with pytest.raises(PreconditionError):
        half_return(PiecewiseSystem(("-y", "x"), ("y", "-x")), Fraction(1, 100))


def test_time_reversal_consistency():
    s = PiecewiseSystem(("-y + x^2 + x*y", "x + y^2"), ("-y", "x"))
    x0 = Fraction(1, 40)
    r = half_return(s, x0, "upper", normalized=True)
    # integrating backwards from the exit point: mirror x and reverse time,
    # which keeps the upper half plane and the rotation sense
    X, Y = s.upper
    xm = -s.var("x")
    back = PiecewiseSystem((X.subs({"x": xm}), -Y.subs({"x": xm})), s.lower, table=s.table)
    x1 = -r.exit_x
    rb = half_return(back, float(x1), "upper", normalized=True)
    assert abs(rb.exit_x * 40 + 1) < 1e-10


def test_example_52_case_one():
    s = load("focus_tangency.toml", delta=0, a2=1, a3=0, a4=0, a5=0, a6=0, b1=0, b2=0, b3=0)
    fit = fit_displacement(s)
    assert fit.order == 2
    assert abs(fit.coefficient - mpmath.mpf(2) / 3) < 1e-6


def test_center_consistent():
    fit = fit_displacement(ROT)
    assert fit.center_consistent
    assert fit.order is None


def test_ambiguous_order_is_reported():
    s = PiecewiseSystem(("-y + x^2 - 199/200*x*y", "x + x^2"), ("-y", "x"))
    with pytest.raises(OracleError, match="order ambiguous"):
        fit_displacement(s, 0.01, 0.7, 8)


def test_grid_validation():
    with pytest.raises(ValueError):
        fit_displacement(ROT, 0.01, 0.7, 5)
    with pytest.raises(ValueError):
        fit_displacement(ROT, 0.01, 1.5, 10)


def test_parallel_merge_is_deterministic(tmp_path):
    s = load("tangency_family.toml", kplus=1, kminus=1, **{"lambda": -2})
    a = fit_displacement(s, workers=1)
    b = fit_displacement(s, workers=4)
    assert a.samples == b.samples
    path = tmp_path / "samples.csv"
    b.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "delta"] and len(rows) == 11
    assert mpmath.mpf(rows[1][0]) == mpmath.mpf("0.01")


def test_tolerance_scaling():
    s = load("tangency_family.toml", kplus=1, kminus=1, **{"lambda": -2})
    a = fit_displacement(s, prec=128)
    b = fit_displacement(s, prec=192)
    assert abs(a.coefficient - b.coefficient) <= max(a.uncertainty, mpmath.mpf(10) ** -15)


def test_displacement_sign_matches_symbolic():
    s = classify(load("tangency_family.toml", kplus=1, kminus=1, **{"lambda": -2})).system
    d, _, _ = displacement(s, Fraction(1, 100))
    assert d > 0
