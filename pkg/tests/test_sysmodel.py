from fractions import Fraction

import pytest

from pwsnf.errors import InputError, PolySyntaxError, PreconditionError
from pwsnf.polyring import MultiPoly, SymbolTable
from pwsnf.sysmodel import (PiecewiseSystem, classify, homeomorphism_consistency_check,
                            parse_field, system_from_dict, tokenize)

from conftest import load

T = SymbolTable(["a"])


def test_parser_precedence():
    f = parse_field("-x^2 + 3*a*(x - y)^2/2 - 1/4", T)
    g = parse_field("-(x^2) + (3/2)*a*(x^2 - 2*x*y + y^2) - 1/4", T)
    assert f == g


def test_parser_double_sign_reports_token():
    with pytest.raises(PolySyntaxError) as info:
        parse_field("x + + y", T)
    assert info.value.token_index == 3


@pytest.mark.parametrize("text", ["x^y", "x^-1", "x / y", "x / 0", "(x + 1", "2 x", "x $ 1", "x^1/2^"])
def test_parser_rejects(text):
    with pytest.raises(InputError):
        parse_field(text, T)


def test_undeclared_symbol():
    with pytest.raises(InputError):
        parse_field("b*x", T)


def test_tokenizer_positions():
    toks = tokenize("x  + 12")
    assert [(t.kind, t.index, t.column) for t in toks[:3]] == [("ident", 1, 1), ("op", 2, 4), ("num", 3, 6)]


def test_fixed_parameters_in_exponents():
    data = {"params": {"names": ["k", "c"]}, "upper": {"X": "1", "Y": "-x^(2*k-1)*(c*x+1)"},
            "lower": {"X": "-1", "Y": "x^(2*k+1)"}}
    s = system_from_dict(data, {"k": 2})
    assert s.params == ("c",)
    assert s.upper[1] == parse_field("-x^3 - c*x^4", s.table)
    with pytest.raises(InputError):
        system_from_dict(data)
    with pytest.raises(InputError):
        system_from_dict(data, {"z": 1})
    with pytest.raises(InputError):
        system_from_dict(data, {"k": Fraction(1, 3)})


def test_classify_examples():
    assert classify(load("quadratic.toml")).kind == "FF"
    bc = classify(load("focus_tangency.toml", delta=0))
    assert bc.kind == "FP" and bc.lower.ell == 1
    bc = classify(load("tangency_family.toml", kplus=2, kminus=1))
    assert bc.kind == "PP" and (bc.upper.ell, bc.lower.ell) == (2, 1)


def test_classify_normalizes_clockwise_rotation():
    s = PiecewiseSystem(("y", "-x + x^2"), ("y", "-x"))
    bc = classify(s)
    assert bc.kind == "FF"
    assert bc.orientation_record == ("(x,y,t)->(-x,y,t)",)
    assert bc.system.upper[1] == parse_field("-x + x^2", s.table).subs({"x": parse_field("-x", s.table)}) * 1


def test_classify_moves_focus_to_top():
    s = PiecewiseSystem(("-1", "x"), ("-y", "x"))
    bc = classify(s)
    assert bc.kind == "FP"
    assert bc.orientation_record == ("(x,y,t)->(x,-y,-t)",)
    assert bc.upper.kind == "focus" and bc.lower.kind == "tangency"


@pytest.mark.parametrize("upper,lower,why", [
    (("-y", "x"), ("y", "-x"), "opposite"),
    (("-y", "x"), ("1", "x^2"), "multiplicity"),
    (("-y", "x"), ("-1", "x"), "visible"),
    (("y", "x"), ("-y", "x"), "eigen"),
    (("-y", "1 + x"), ("-y", "x"), "Y"),
])
def test_not_monodromic(upper, lower, why):
    bc = classify(PiecewiseSystem(upper, lower))
    assert bc.kind == "NotMonodromic"
    assert not bc.monodromic
    assert bc.reason


def test_symbolic_type_is_refused():
    s = PiecewiseSystem(("-y", "x"), ("a", "x"), ["a"])
    with pytest.raises(PreconditionError, match="--set"):
        classify(s)


def test_irrational_rotation_is_refused():
    with pytest.raises(PreconditionError):
        classify(PiecewiseSystem(("-2*y", "x"), ("-y", "x")))


def test_transformations_are_involutions():
    s = load("quadratic.toml")
    for op in ("mirror_x", "flip_y_time", "rotate_half_turn"):
        twice = getattr(getattr(s, op)(), op)()
        assert twice.upper == s.upper and twice.lower == s.lower
        assert len(twice.orientation_record) == 2


class _Record:
    def __init__(self, table, phi, q1=1):
        self.q1 = q1
        self.order_cap = 3
        self._phi = parse_field(phi, table)
        self._psi = MultiPoly.zero(table)

    def boundary_restriction(self):
        return self._phi, self._psi


def test_gluing_check_detects_mismatch():
    rep = homeomorphism_consistency_check(_Record(T, "x + a*x^2"), _Record(T, "x + a*x^2 - x^3"))
    assert not rep.ok and rep.first_mismatch == 3
    assert homeomorphism_consistency_check(_Record(T, "x + x^2"), _Record(T, "x + x^2")).ok
    rep = homeomorphism_consistency_check(_Record(T, "x", q1=-1), _Record(T, "x"))
    assert not rep.ok


def test_gluing_check_on_real_analysis():
    from pwsnf.lyapunov import analyze

    an = analyze(load("quadratic.toml"), 4)
    assert an.gluing.ok
