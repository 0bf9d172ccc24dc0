"""Input model: polynomial parser, piecewise systems and boundary classification.

The switching line is ``y = 0``.  ``classify`` decides whether the origin is
a focus-focus (FF), focus-parabolic (FP) or parabolic-parabolic (PP)
monodromic point and brings the system to counterclockwise orientation with
an upper focus whenever one exists.  Every coordinate or time flip applied is
recorded so reported quantities can be traced back to the input frame.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import InputError, PolySyntaxError, PreconditionError
from .exactnum import rat
from .polyring import MultiPoly, SymbolTable

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml


# ---------------------------------------------------------------------------
# Parser

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*)|(.))")


class _Tok:
    __slots__ = ("kind", "text", "index", "column")

    def __init__(self, kind, text, index, column):
        self.kind = kind
        self.text = text
        self.index = index
        self.column = column

    def __repr__(self):
        return f"{self.kind}:{self.text}@{self.index}"


def tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        num, ident, other = m.groups()
        col = m.start(m.lastindex) + 1
        idx = len(toks) + 1
        if num is not None:
            toks.append(_Tok("num", num, idx, col))
        elif ident is not None:
            toks.append(_Tok("ident", ident, idx, col))
        elif other is not None:
            if other not in "+-*/^()":
                raise PolySyntaxError(f"unexpected character {other!r} at column {col}", idx, col)
            toks.append(_Tok("op", other, idx, col))
        pos = m.end()
    toks.append(_Tok("end", "", len(toks) + 1, n + 1))
    return toks


class _Parser:
    """Precedence climbing over ``+ -`` < ``* /`` < ``^``.

    A sign is accepted only at the start of an expression (top level or
    right after an opening parenthesis), so ``x + + y`` is rejected.
    """

    def __init__(self, text, table, fixed=None):
        self.toks = tokenize(text)
        self.pos = 0
        self.table = table
        self.fixed = fixed or {}

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def error(self, tok, what):
        shown = tok.text if tok.kind != "end" else "end of input"
        raise PolySyntaxError(f"syntax error at token {tok.index} ({shown!r}, column {tok.column}): {what}",
                              tok.index, tok.column)

    def parse(self):
        value = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.error(tok, "unexpected token")
        return value

    def expr(self):
        tok = self.peek()
        negate = False
        if tok.kind == "op" and tok.text in "+-":
            self.take()
            negate = tok.text == "-"
        value = self.term()
        if negate:
            value = -value
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.take()
                rhs = self.term()
                value = value + rhs if tok.text == "+" else value - rhs
            else:
                return value

    def term(self):
        value = self.power()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text == "*":
                self.take()
                value = value * self.power()
            elif tok.kind == "op" and tok.text == "/":
                self.take()
                at = self.peek()
                rhs = self.power()
                if not rhs.is_constant() or rhs.is_zero():
                    self.error(at, "division only by a nonzero numeric constant")
                value = value / rhs.constant_value()
            else:
                return value

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.take()
            e = self.peek()
            if e.kind == "num":
                self.take()
                return base ** int(e.text)
            # a fixed parameter or a parenthesized constant also works,
            # e.g. x^(2*k-1) with k given by --set
            if e.kind == "ident" or (e.kind == "op" and e.text == "("):
                value = self.atom()
                if value.is_constant():
                    n = value.constant_value()
                    if n.denominator == 1 and n >= 0:
                        return base ** int(n)
            self.error(e, "exponent must be a non-negative integer literal")
        return base

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            return MultiPoly.const(self.table, int(tok.text))
        if tok.kind == "ident":
            if tok.text in self.fixed:
                return MultiPoly.const(self.table, self.fixed[tok.text])
            if tok.text not in self.table.index:
                raise InputError(f"undeclared symbol {tok.text!r} at token {tok.index}")
            return MultiPoly.var(self.table, tok.text)
        if tok.kind == "op" and tok.text == "(":
            value = self.expr()
            close = self.take()
            if not (close.kind == "op" and close.text == ")"):
                self.error(close, "expected ')'")
            return value
        self.error(tok, "expected a number, a symbol or '('")


def parse_field(text: str, table: SymbolTable, fixed=None) -> MultiPoly:
    """Parse one polynomial component; see the README for the grammar.

    ``fixed`` maps parameter names to rational values substituted while
    parsing, which is what allows parameters inside exponents.
    """
    if not isinstance(text, str):
        raise InputError("polynomial text must be a string")
    return _Parser(text, table, fixed).parse()


# ---------------------------------------------------------------------------
# Systems


class PiecewiseSystem:
    """Upper (``y > 0``) and lower (``y < 0``) polynomial vector fields."""

    def __init__(self, upper, lower, params=(), table=None, orientation_record=()):
        self.table = table if table is not None else SymbolTable(params)
        self.params = tuple(self.table.params)
        self.upper = tuple(self._coerce(f) for f in upper)
        self.lower = tuple(self._coerce(f) for f in lower)
        if len(self.upper) != 2 or len(self.lower) != 2:
            raise InputError("each side needs exactly two components X, Y")
        self.orientation_record = tuple(orientation_record)

    def _coerce(self, f):
        if isinstance(f, str):
            return parse_field(f, self.table)
        if isinstance(f, MultiPoly):
            if f.table != self.table:
                return f.to_table(self.table)
            return f
        return MultiPoly.const(self.table, f)

    @classmethod
    def from_strings(cls, upper, lower, params=()):
        return cls(upper, lower, params)

    def var(self, name):
        return MultiPoly.var(self.table, name)

    def _mapped(self, field, sx, sy):
        x, y = self.var("x"), self.var("y")
        return tuple(f.subs({"x": x * sx, "y": y * sy}) for f in field)

    def mirror_x(self) -> "PiecewiseSystem":
        """``(x, y, t) -> (-x, y, t)``: reverses the rotation sense."""
        def tr(field):
            X, Y = self._mapped(field, -1, 1)
            return (-X, Y)
        return PiecewiseSystem(tr(self.upper), tr(self.lower), table=self.table,
                               orientation_record=self.orientation_record + ("(x,y,t)->(-x,y,t)",))

    def flip_y_time(self) -> "PiecewiseSystem":
        """``(x, y, t) -> (x, -y, -t)``: swaps the half planes."""
        def tr(field):
            X, Y = self._mapped(field, 1, -1)
            return (-X, Y)
        return PiecewiseSystem(tr(self.lower), tr(self.upper), table=self.table,
                               orientation_record=self.orientation_record + ("(x,y,t)->(x,-y,-t)",))

    def rotate_half_turn(self) -> "PiecewiseSystem":
        """``(x, y, t) -> (-x, -y, t)``: swaps the half planes."""
        def tr(field):
            X, Y = self._mapped(field, -1, -1)
            return (-X, -Y)
        return PiecewiseSystem(tr(self.lower), tr(self.upper), table=self.table,
                               orientation_record=self.orientation_record + ("(x,y,t)->(-x,-y,t)",))

    def scale_time(self, c) -> "PiecewiseSystem":
        c = rat(c)
        if c <= 0:
            raise ValueError("time scale must be positive")
        return PiecewiseSystem(tuple(f * c for f in self.upper), tuple(f * c for f in self.lower),
                               table=self.table, orientation_record=self.orientation_record)

    def substitute(self, values) -> "PiecewiseSystem":
        """Fix some parameters to rational values; they leave the table."""
        values = {k: rat(v) for k, v in values.items()}
        for k in values:
            if k not in self.params:
                raise InputError(f"--set refers to undeclared parameter {k!r}")
        rest = [p for p in self.params if p not in values]
        table = SymbolTable(rest)

        def tr(field):
            return tuple(f.subs(values).to_table(table) for f in field)

        return PiecewiseSystem(tr(self.upper), tr(self.lower), table=table,
                               orientation_record=self.orientation_record)

    def is_numeric(self) -> bool:
        return not any(f.free_symbols() & set(self.params) for f in self.upper + self.lower)

    def to_dict(self):
        return {
            "params": list(self.params),
            "upper": {"X": self.upper[0].to_text(), "Y": self.upper[1].to_text()},
            "lower": {"X": self.lower[0].to_text(), "Y": self.lower[1].to_text()},
            "orientation_record": list(self.orientation_record),
        }

    def __repr__(self):
        return f"PiecewiseSystem({self.to_dict()})"


def load_system(path, values=None) -> PiecewiseSystem:
    """Read a TOML file with ``[params] names``, ``[upper]`` and ``[lower]``."""
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except _toml.TOMLDecodeError as exc:
        raise InputError(f"malformed TOML in {path}: {exc}") from exc
    return system_from_dict(data, values)


def system_from_dict(data, values=None) -> PiecewiseSystem:
    """Build a system; ``values`` fixes parameters before parsing."""
    params = data.get("params", {}).get("names", [])
    if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
        raise InputError("[params] names must be a list of strings")
    sides = []
    for side in ("upper", "lower"):
        block = data.get(side)
        if not isinstance(block, dict) or "X" not in block or "Y" not in block:
            raise InputError(f"missing [{side}] table with X and Y")
        sides.append((str(block["X"]), str(block["Y"])))
    values = {k: rat(v) for k, v in (values or {}).items()}
    for k in values:
        if k not in params:
            raise InputError(f"--set refers to undeclared parameter {k!r}")
    table = SymbolTable([p for p in params if p not in values])
    fields = [tuple(parse_field(t, table, values) for t in side) for side in sides]
    return PiecewiseSystem(fields[0], fields[1], table=table)


# ---------------------------------------------------------------------------
# Classification


class SideInfo:
    """Local type of one subsystem at the origin."""

    def __init__(self, kind, **data):
        self.kind = kind  # "focus" or "tangency"
        self.alpha = data.get("alpha")
        self.beta = data.get("beta")
        self.c = data.get("c")
        self.ell = data.get("ell")
        self.a0 = data.get("a0")
        self.lead = data.get("lead")

    def to_dict(self):
        if self.kind == "focus":
            return {"kind": "focus", "alpha": str(self.alpha), "beta": str(self.beta)}
        return {"kind": "tangency", "ell": self.ell, "a0": str(self.a0)}

    def __repr__(self):
        return f"SideInfo({self.to_dict()})"


class BoundaryClass:
    """Outcome of ``classify``.

    ``kind`` is ``"FF"``, ``"FP"``, ``"PP"`` or ``"NotMonodromic"``;
    ``system`` is the orientation-normalized system the pipelines consume.
    """

    def __init__(self, kind, upper=None, lower=None, system=None, reason=None):
        self.kind = kind
        self.upper = upper
        self.lower = lower
        self.system = system
        self.reason = reason

    @property
    def orientation_record(self):
        return self.system.orientation_record if self.system is not None else ()

    @property
    def monodromic(self):
        return self.kind in ("FF", "FP", "PP")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.reason:
            out["reason"] = self.reason
        if self.upper is not None:
            out["upper"] = self.upper.to_dict()
        if self.lower is not None:
            out["lower"] = self.lower.to_dict()
        out["orientation_record"] = list(self.orientation_record)
        return out

    def __repr__(self):
        return f"BoundaryClass({self.to_dict()})"


class _Reject(Exception):
    pass


def _numeric(poly: MultiPoly, what: str) -> Fraction:
    if not poly.is_constant():
        raise PreconditionError(
            f"parameter-dependent type: {what} = {poly.to_text()} depends on parameters; "
            "fix parameter values with --set")
    return poly.constant_value()


def _rational_sqrt(q: Fraction):
    if q < 0:
        return None
    from math import isqrt
    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def analyze_side(X: MultiPoly, Y: MultiPoly, side: str) -> SideInfo:
    """Local type of one side; raises ``_Reject`` when not monodromic."""
    X0 = _numeric(X.coeff_xy(0, 0), f"X{side}(0,0)")
    Y0 = _numeric(Y.coeff_xy(0, 0), f"Y{side}(0,0)")
    if Y0 != 0:
        raise _Reject(f"{side} field crosses y=0 transversally at O (Y(0,0) = {Y0})")
    if X0 == 0:
        a = _numeric(X.coeff_xy(1, 0), f"dX{side}/dx(0,0)")
        b = _numeric(X.coeff_xy(0, 1), f"dX{side}/dy(0,0)")
        c = _numeric(Y.coeff_xy(1, 0), f"dY{side}/dx(0,0)")
        d = _numeric(Y.coeff_xy(0, 1), f"dY{side}/dy(0,0)")
        tr = a + d
        det = a * d - b * c
        if tr * tr - 4 * det >= 0:
            raise _Reject(f"{side} linear part has real eigenvalues")
        alpha = tr / 2
        beta2 = det - alpha * alpha
        beta = _rational_sqrt(beta2)
        return SideInfo("focus", alpha=alpha, beta=beta, beta2=beta2, c=c)
    # tangency: first non-vanishing x-derivative of Y along y = 0
    yline = Y.xy_coefficients()
    degs = sorted(i for (i, j) in yline if j == 0)
    for i in degs:
        coef = yline[(i, 0)]
        if coef.is_zero():
            continue
        lead = _numeric(coef, f"coefficient of x^{i} in Y{side}(x,0)")
        if lead == 0:
            continue
        if i % 2 == 0:
            raise _Reject(f"{side} tangency has even multiplicity {i} (fold is not invisible from one side)")
        ell = (i + 1) // 2
        inv = X0 * lead
        if side == "upper" and inv >= 0:
            raise _Reject("upper tangency is visible")
        if side == "lower" and inv <= 0:
            raise _Reject("lower tangency is visible")
        return SideInfo("tangency", ell=ell, a0=X0, lead=lead)
    raise _Reject(f"{side} field is tangent to y=0 along the whole line near O")


def _counterclockwise(info: SideInfo, side: str) -> bool:
    if info.kind == "focus":
        return info.c > 0
    return info.a0 < 0 if side == "upper" else info.a0 > 0


def classify(system: PiecewiseSystem) -> BoundaryClass:
    """Classify the origin and normalize orientation.

    Counterclockwise rotation is required by every later stage.  When both
    sides turn clockwise the mirror ``(x,y,t) -> (-x,y,t)`` is applied; a
    focus below a tangency is moved to the top with ``(x,y,t) -> (x,-y,-t)``.
    """
    try:
        up = analyze_side(system.upper[0], system.upper[1], "upper")
        lo = analyze_side(system.lower[0], system.lower[1], "lower")
    except _Reject as exc:
        return BoundaryClass("NotMonodromic", system=system, reason=str(exc))
    ccw_u = _counterclockwise(up, "upper")
    ccw_l = _counterclockwise(lo, "lower")
    if ccw_u != ccw_l:
        return BoundaryClass("NotMonodromic", up, lo, system,
                             reason="the two sides rotate in opposite senses (incompatible signs)")
    sys_n = system
    if not ccw_u:
        sys_n = sys_n.mirror_x()
    if up.kind == "tangency" and lo.kind == "focus":
        sys_n = sys_n.flip_y_time()
    up = analyze_side(sys_n.upper[0], sys_n.upper[1], "upper")
    lo = analyze_side(sys_n.lower[0], sys_n.lower[1], "lower")
    kinds = (up.kind, lo.kind)
    if kinds == ("focus", "focus"):
        kind = "FF"
    elif kinds == ("focus", "tangency"):
        kind = "FP"
    else:
        kind = "PP"
    for info, side in ((up, "upper"), (lo, "lower")):
        if info.kind == "focus" and info.beta is None:
            raise PreconditionError(
                f"irrational rotation rate on the {side} side (beta^2 = {info.__dict__.get('beta2', '?')}): "
                "pre-scale the system so that beta is rational")
    return BoundaryClass(kind, up, lo, sys_n)


# ---------------------------------------------------------------------------
# Gluing check


class GluingReport:
    def __init__(self, ok, reasons, first_mismatch=None):
        self.ok = ok
        self.reasons = list(reasons)
        self.first_mismatch = first_mismatch

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"ok": self.ok, "reasons": self.reasons, "first_mismatch": self.first_mismatch}

    def __repr__(self):
        return f"GluingReport({self.to_dict()})"


def homeomorphism_consistency_check(upper_map, lower_map) -> GluingReport:
    """Check that the two side transformations agree on the switching line.

    Each argument is a transformation record (see ``nf_focus.TransformRecord``)
    exposing ``q1`` and ``boundary_restriction()``.  Both maps must send
    ``(u, 0)`` to the same point of the x-axis up to the recorded order.
    """
    reasons = []
    first = None
    if not (rat(upper_map.q1) > 0 and rat(lower_map.q1) > 0):
        reasons.append(f"q1 signs differ or vanish: q1+ = {upper_map.q1}, q1- = {lower_map.q1}")
    phi_u, psi_u = upper_map.boundary_restriction()
    phi_l, psi_l = lower_map.boundary_restriction()
    for name, psi in (("upper", psi_u), ("lower", psi_l)):
        if not psi.is_zero():
            reasons.append(f"{name} map moves the switching line: Psi(u,0) = {psi.to_text()}")
    top = max(upper_map.order_cap, lower_map.order_cap)
    cu = phi_u.xy_coefficients()
    cl = phi_l.to_table(phi_u.table).xy_coefficients() if phi_l.table != phi_u.table else phi_l.xy_coefficients()
    zero = MultiPoly.zero(phi_u.table)
    for k in range(1, top + 1):
        a = cu.get((k, 0), zero)
        b = cl.get((k, 0), zero)
        if a != b:
            first = k
            reasons.append(f"Phi+(u,0) and Phi-(u,0) differ at order {k}: {a.to_text()} vs {b.to_text()}")
            break
    return GluingReport(not reasons, reasons, first)
