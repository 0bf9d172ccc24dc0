"""Lyapunov constants, focus orders and the return-map cross-check.

``V_k`` is stored as a polynomial part ``L_k`` times a positive factor, so
that vanishing questions stay exact:

    FF  L_1 = gamma_1^+ + gamma_1^-,  L_k = gamma_k^+ + (-1)^{k-1} gamma_k^-
    FP  L_k = gamma_k^+
    PP  L_k = sigma_k^+ for even k, 0 for odd k

Each ``L_k`` is reported modulo the ideal of the earlier nonzero ones.
The return-map coefficients ``u_k`` / ``v_k`` are computed independently
from the normal forms and compared against ``L_k`` times its factor.
"""

from __future__ import annotations

import threading
from fractions import Fraction

import mpmath

from .bell import bell_powers
from .errors import InputError, PreconditionError
from .exactnum import ExtScalar, ext_value, rat
from .polyring import DEFAULT_BUDGET, MultiPoly, SymbolTable, compose, reduce_mod_set
from .trigexp import TrigExpPoly, te_antiderivative, te_eval_at_pi


def double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# ---------------------------------------------------------------------------
# Factors


class FactorTag:
    """The positive factor ``V_k / L_k``.

    ``kind`` is ``"FF"``, ``"FP"`` or ``"PP"``.  For ``k = 1`` of FF/FP the
    true constant is an exponential difference with the same sign as ``L_1``.
    """

    def __init__(self, kind, k, gamma1=Fraction(0), ell=None):
        self.kind = kind
        self.k = k
        self.gamma1 = rat(gamma1)
        self.ell = ell

    @property
    def is_exp_difference(self):
        return self.k == 1 and self.kind in ("FF", "FP")

    def text(self):
        k = self.k
        if self.kind == "PP":
            return f"C_{k}^PP = {Fraction(2, k + 2 * self.ell - 1)}"
        if self.is_exp_difference:
            if self.kind == "FF":
                return "exp(gamma1+ pi) - exp(-gamma1- pi), same sign as L_1"
            return "exp(gamma1+ pi) - 1, same sign as L_1"
        if self.kind == "FP":
            return f"C_{k}^FP = {self.exact().to_text()}"
        if self.gamma1 == 0:
            return f"C_{k}^FF(0) = {self.exact().to_text()}"
        return f"C_{k}^FF(gamma1={self.gamma1})"

    def exact(self):
        """Exact value as an ``ExtScalar`` where one exists."""
        k = self.k
        if self.kind == "PP":
            return ExtScalar.const(Fraction(2, k + 2 * self.ell - 1))
        if self.is_exp_difference:
            return None
        if self.kind == "FP" or self.gamma1 == 0:
            base = Fraction(double_factorial(k - 2), double_factorial(k - 1))
            if k % 2 == 0:
                return ExtScalar.const(2 * base)
            return ExtScalar.pi(1, coef=base)
        return integral_factor(k, self.gamma1)

    def value(self, dps=30):
        """Numeric value of the closed form as printed (``mpmath.mpf``)."""
        with mpmath.workdps(dps + 10):
            if self.kind == "PP":
                return mpmath.mpf(2) / (self.k + 2 * self.ell - 1)
            if self.is_exp_difference:
                return None
            g = mpmath.mpf(self.gamma1.numerator) / self.gamma1.denominator
            if self.kind == "FP":
                g = mpmath.mpf(0)
            return printed_cff(self.k, g)

    def to_dict(self):
        return {"kind": self.kind, "k": self.k, "text": self.text()}


def printed_cff(k, g):
    """Closed-form ``C_k^FF`` as printed, at ``gamma1 = g`` (mpmath)."""
    k = int(k)
    E = mpmath.exp(g * mpmath.pi)
    s = mpmath.sqrt(1 + g * g)
    val = mpmath.pi * double_factorial(k - 2) * E / (double_factorial(k - 1) * (1 + g * g) ** (mpmath.mpf(k - 1) / 2))
    if k % 2 == 0:
        val *= (1 + E) / (mpmath.pi * s)
    return val


_INT_CACHE: dict = {}


def integral_factor(k, gamma1) -> ExtScalar:
    """``E * int_0^pi sin^{k-1}(t) exp((k-1) gamma1 t) dt`` exactly."""
    key = (k, rat(gamma1))
    hit = _INT_CACHE.get(key)
    if hit is None:
        g = rat(gamma1)
        f = te_antiderivative(TrigExpPoly.sin_power(k - 1, (k - 1) * g))
        hit = te_eval_at_pi(f, g) * ExtScalar.E(1, g)
        _INT_CACHE[key] = hit
    return hit


# ---------------------------------------------------------------------------
# Sequences


class LyapunovEntry:
    def __init__(self, k, L, reduced, factor):
        self.k = k
        self.L = L
        self.reduced = reduced
        self.factor = factor

    def to_dict(self):
        return {"k": self.k, "L": self.L.to_text(), "reduced": self.reduced.to_text(),
                "factor": self.factor.text()}


class LyapunovSequence:
    def __init__(self, kind, N, entries, table):
        self.kind = kind
        self.N = N
        self.entries = entries
        self.table = table

    def __getitem__(self, k):
        return self.entries[k]

    def L(self, k):
        return self.entries[k].L

    def reduced(self, k):
        return self.entries[k].reduced

    def first_nonzero(self):
        for k in sorted(self.entries):
            if not self.entries[k].reduced.is_zero():
                return k
        return None

    def to_dict(self):
        return {"type": self.kind, "N": self.N,
                "entries": [self.entries[k].to_dict() for k in sorted(self.entries)]}


def _reduce_all(Ls: dict, budget=DEFAULT_BUDGET):
    out = {}
    priors = []
    for k in sorted(Ls):
        L = Ls[k]
        out[k] = reduce_mod_set(L, priors, budget) if priors else L
        if not L.is_zero():
            priors.append(L)
    return out


def _sequence(kind, Ls, factors, N, table, budget):
    red = _reduce_all(Ls, budget)
    entries = {k: LyapunovEntry(k, Ls[k], red[k], factors[k]) for k in Ls}
    return LyapunovSequence(kind, N, entries, table)


def _gamma1_value(g):
    if isinstance(g, MultiPoly):
        if not g.is_constant():
            raise PreconditionError("gamma_1 must be a rational number")
        return g.constant_value()
    return rat(g)


def lyapunov_ff(gp: dict, gm: dict, N: int, budget=DEFAULT_BUDGET) -> LyapunovSequence:
    """Two-sided focus sequence; ``gm`` in the two-sided lower convention."""
    table = gp[1].table
    g1 = _gamma1_value(gp[1])
    Ls, factors = {}, {}
    for k in range(1, N + 2):
        sign = 1 if (k - 1) % 2 == 0 else -1
        Ls[k] = gp[k] + gm[k] * sign
        factors[k] = FactorTag("FF", k, g1)
    return _sequence("FF", Ls, factors, N, table, budget)


def lyapunov_fp(gp: dict, N: int, budget=DEFAULT_BUDGET) -> LyapunovSequence:
    table = gp[1].table
    Ls = {k: gp[k] for k in range(1, N + 2)}
    factors = {k: FactorTag("FP", k) for k in Ls}
    return _sequence("FP", Ls, factors, N, table, budget)


def lyapunov_pp(sigma: dict, ell: int, N: int, table=None, budget=DEFAULT_BUDGET) -> LyapunovSequence:
    if table is None:
        table = next(iter(sigma.values())).table
    zero = MultiPoly.zero(table)
    Ls = {}
    for k in range(1, N + 2):
        Ls[k] = sigma.get(k, zero) if k % 2 == 0 else zero
    factors = {k: FactorTag("PP", k, ell=ell) for k in Ls}
    return _sequence("PP", Ls, factors, N, table, budget)


# ---------------------------------------------------------------------------
# Orders


class FocusOrder:
    """``kind`` is ``"order"`` (``value`` a half-integer), ``"center"`` (no
    nonzero constant up to ``N + 1``) or ``"parametric"``."""

    def __init__(self, kind, value=None, N=None, conditions=(), index=None):
        self.kind = kind
        self.value = value
        self.N = N
        self.conditions = list(conditions)
        self.index = index

    def __eq__(self, other):
        if isinstance(other, FocusOrder):
            if self.kind != other.kind:
                return False
            if self.kind == "order":
                return self.value == other.value
            return (self.N, self.conditions) == (other.N, other.conditions)
        if self.kind == "order":
            try:
                return self.value == rat(other)
            except TypeError:
                return NotImplemented
        return NotImplemented

    def __hash__(self):
        return hash((self.kind, self.value) if self.kind == "order" else (self.kind, self.N))

    def text(self):
        if self.kind == "order":
            return f"focus of order {_half_text(self.value)}"
        if self.kind == "center":
            return f"center up to order {self.N}"
        return "parameter dependent: " + "; ".join(self.conditions)

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "order":
            out["value"] = _half_text(self.value)
            out["first_nonzero"] = self.index
        elif self.kind == "center":
            out["N"] = self.N
        else:
            out["conditions"] = self.conditions
        return out

    def __repr__(self):
        return f"FocusOrder({self.text()})"


def _half_text(v):
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def CenterUpToOrder(N):
    return FocusOrder("center", N=N)


def focus_order(seq: LyapunovSequence, point=None) -> FocusOrder:
    """First nonzero ``V_k`` gives ``(k - 1)/2``.

    Without ``point`` every reduced ``L_k`` must be either zero or a nonzero
    constant until the first nonzero one.  With ``point`` the raw ``L_k`` are
    evaluated exactly there.
    """
    if point is not None:
        for k in sorted(seq.entries):
            val = seq.entries[k].L.evaluate(point)
            if val != 0:
                return FocusOrder("order", Fraction(k - 1, 2), seq.N, index=k)
        return CenterUpToOrder(seq.N)
    for k in sorted(seq.entries):
        r = seq.entries[k].reduced
        if r.is_zero():
            continue
        if r.is_constant():
            return FocusOrder("order", Fraction(k - 1, 2), seq.N, index=k)
        conds = [f"L_{j} = 0" for j in sorted(seq.entries) if j < k and not seq.entries[j].L.is_zero()]
        conds.append(f"L_{k} = {r.to_text()} (sign undetermined)")
        return FocusOrder("parametric", N=seq.N, conditions=conds, index=k)
    return CenterUpToOrder(seq.N)


INF = float("inf")


class OrderSet:
    """Set of half-integers: ``finite`` values, every ``i/2 >= tail_from``,
    every odd half (``odd_halves_all``) and possibly a center."""

    def __init__(self, finite=(), tail_from=None, odd_halves_all=False, center=False):
        self.finite = frozenset(Fraction(v) for v in finite)
        self.tail_from = None if tail_from is None else Fraction(tail_from)
        self.odd_halves_all = odd_halves_all
        self.center = center

    def contains_value(self, v) -> bool:
        v = Fraction(v)
        if v in self.finite:
            return True
        if self.tail_from is not None and v >= self.tail_from and (2 * v).denominator == 1:
            return True
        if self.odd_halves_all and v.denominator == 2:
            return True
        return False

    def __contains__(self, item):
        if isinstance(item, FocusOrder):
            if item.kind == "order":
                return self.contains_value(item.value)
            if item.kind == "center":
                # only orders above N/2 are invisible at truncation N
                if self.center or self.tail_from is not None or self.odd_halves_all:
                    return True
                bound = Fraction(item.N + 1, 2)
                return any(v >= bound for v in self.finite)
            return False
        return self.contains_value(item)

    def text(self):
        parts = [_half_text(v) for v in sorted(self.finite)]
        if self.odd_halves_all:
            parts.append("every (2i+1)/2")
        if self.tail_from is not None:
            parts.append(f"every i/2 >= {_half_text(self.tail_from)}")
        if self.center:
            parts.append("center")
        return "{" + ", ".join(parts) + "}"

    def to_dict(self):
        return {"finite": [_half_text(v) for v in sorted(self.finite)],
                "tail_from": None if self.tail_from is None else _half_text(self.tail_from),
                "odd_halves_all": self.odd_halves_all, "center": self.center}

    def __repr__(self):
        return f"OrderSet({self.text()})"


def _as_order(v):
    if isinstance(v, FocusOrder):
        if v.kind == "center":
            return INF
        if v.kind != "order":
            raise PreconditionError("subsystem order is parameter dependent")
        if v.value.denominator != 1:
            raise PreconditionError("a smooth focus has an integer order")
        return int(v.value)
    if v == INF or v is None:
        return INF
    return int(v)


def possible_orders(s_plus, s_minus=None, kind="FF") -> OrderSet:
    """Orders allowed for the two-sided point given the subsystem orders.

    ``s_minus`` is ignored for ``FP`` (lower side is a tangency).
    """
    if kind == "PP":
        raise PreconditionError("no relation between subsystem data and the order for PP points")
    sp = _as_order(s_plus)

    def halves(m):
        return [Fraction(2 * i + 1, 2) for i in range(m)]

    if kind == "FP":
        if sp == 0:
            return OrderSet([0])
        if sp == INF:
            return OrderSet(odd_halves_all=True, center=True)
        return OrderSet(halves(sp) + [sp])
    if kind != "FF":
        raise InputError(f"unknown type {kind!r}")
    sm = _as_order(s_minus)
    if sp == 0 and sm == 0:
        return OrderSet(tail_from=0, center=True)
    if sp == 0 or sm == 0:
        return OrderSet([0])
    if sp != sm:
        m = min(sp, sm)
        return OrderSet(halves(m) + [m])
    if sp == INF:
        return OrderSet(odd_halves_all=True, center=True)
    return OrderSet(halves(sp), tail_from=sp, center=True)


class TruncationCheck:
    def __init__(self, is_center, witness=None):
        self.is_center = is_center
        self.witness = witness

    def __bool__(self):
        return self.is_center

    def to_dict(self):
        return {"center_of_truncation": self.is_center, "first_violation": self.witness}


def center_truncation_check(kind, N, gp=None, gm=None, sigma=None) -> TruncationCheck:
    """Is the truncated normal form itself a center?"""
    if kind == "FF":
        for k in range(1, N + 2):
            if not (gp[k] - gm[k] * (-1) ** k).is_zero():
                return TruncationCheck(False, k)
        return TruncationCheck(True)
    if kind == "FP":
        for k in range(1, N + 2):
            if not gp[k].is_zero():
                return TruncationCheck(False, k)
        return TruncationCheck(True)
    if kind == "PP":
        for k in range(2, N + 2, 2):
            if k in sigma and not sigma[k].is_zero():
                return TruncationCheck(False, k)
        return TruncationCheck(True)
    raise InputError(f"unknown type {kind!r}")


# ---------------------------------------------------------------------------
# Return maps


class ReturnMapSeries:
    """Coefficients of ``Pi(x) = -sum c_k x^k`` (``c_k`` ExtScalar or MultiPoly)."""

    def __init__(self, side, coefficients, gamma1=None, kind="FF"):
        self.side = side
        self.coefficients = coefficients
        self.gamma1 = gamma1
        self.kind = kind

    def __getitem__(self, k):
        return self.coefficients[k]


_RM_LOCK = threading.Lock()
_RM_CACHE: dict = {}


def _generic_focus_map(N: int, gamma1: Fraction):
    """``u_k`` for abstract ``g_2..g_{N+1}`` as ExtScalars over ``MultiPoly``."""
    key = (N, gamma1)
    with _RM_LOCK:
        hit = _RM_CACHE.get(key)
    if hit is not None:
        return hit
    tab = SymbolTable([f"g{i}" for i in range(2, N + 2)])
    gs = {i: MultiPoly.var(tab, f"g{i}") for i in range(2, N + 2)}
    one = MultiPoly.const(tab, 1)
    R = {1: TrigExpPoly.const(one)}
    weights = {i: TrigExpPoly.sin_power(i - 1, (i - 1) * gamma1, gs[i]) for i in range(2, N + 2)}
    for k in range(2, N + 2):
        bells = bell_powers(k, [R[j] for j in range(1, k)])
        integrand = TrigExpPoly()
        for i in range(2, k + 1):
            b = bells.get((k, i))
            if b is None:
                continue
            integrand = integrand + weights[i] * b
        R[k] = te_antiderivative(integrand)
    E = ExtScalar.E(1, gamma1, coef=one)
    u = {1: E}
    for k in range(2, N + 2):
        u[k] = te_eval_at_pi(R[k], gamma1) * E
    out = (tab, u)
    with _RM_LOCK:
        _RM_CACHE[key] = out
    return out


def upper_return_map_ff(gamma: dict, N: int, side="upper") -> ReturnMapSeries:
    """``u_1..u_{N+1}`` of ``Pi(x) = -sum u_k x^k`` for the normal form with
    ``dr/dtheta = gamma_1 r + sum gamma_k sin^{k-1}(theta) r^k``."""
    g1 = _gamma1_value(gamma[1])
    target = next(v.table for v in gamma.values() if isinstance(v, MultiPoly))
    tab, u = _generic_focus_map(N, g1)
    images = {f"g{i}": gamma[i] for i in range(2, N + 2)}

    def sub(c):
        return compose(c, images, target)

    coeffs = {k: u[k].map(sub) for k in u}
    return ReturnMapSeries(side, coeffs, g1, "FF")


def upper_return_map_pp(sigma: dict, ell: int, N: int, table=None, printed=False) -> ReturnMapSeries:
    """``v_1..v_{N+1}`` for ``x' = -1``, ``y' = x^{2l-1}(1 + sum sigma_{i+1} x^i)``.

    ``v_k = mu_{n} - mu_{2l} B(n, 2l)(v_1..v_{k-1}, 0)
    - sum_{i=2l+1}^{n} (-1)^i mu_i B(n, i)(v_1..v_{n-i+1})`` with
    ``n = k + 2l - 1``, ``mu_{2l} = 1/(2l)`` and ``mu_i = sigma_{i-2l+1}/i``.
    ``printed=True`` drops the ``1/(2l)`` weight of the second term.
    """
    if table is None:
        table = next(iter(sigma.values())).table
    zero = MultiPoly.zero(table)
    L = 2 * ell
    v = {1: MultiPoly.const(table, 1)}
    w2l = Fraction(1) if printed else Fraction(1, L)
    for k in range(2, N + 2):
        n = k + L - 1
        bells = bell_powers(n, [v[j] for j in range(1, k)])
        acc = sigma.get(k, zero) / n
        b = bells.get((n, L))
        if b is not None:
            acc = acc - b * w2l
        for i in range(L + 1, n + 1):
            b = bells.get((n, i))
            if b is None:
                continue
            s = sigma.get(i - L + 1, zero)
            if s.is_zero():
                continue
            term = b * s / i
            acc = acc - term if i % 2 == 0 else acc + term
        v[k] = acc
    return ReturnMapSeries("upper", v, None, "PP")


# ---------------------------------------------------------------------------
# Pipeline


class Analysis:
    """Everything computed for one system at truncation ``N``."""

    def __init__(self, classification, N, upper, lower, sequence, gluing):
        self.classification = classification
        self.N = N
        self.upper = upper
        self.lower = lower
        self.sequence = sequence
        self.gluing = gluing

    @property
    def kind(self):
        return self.classification.kind

    @property
    def table(self):
        return self.classification.system.table

    def gamma_lower_flipped(self):
        """``gamma~_k = (-1)^k gamma^-_k``: the lower coefficients in the
        flipped, upper-convention frame."""
        return {k: v if k % 2 == 0 else -v for k, v in self.lower.gamma.items()}

    def truncation_check(self):
        if self.kind == "FF":
            return center_truncation_check("FF", self.N, self.upper.gamma, self.lower.gamma)
        if self.kind == "FP":
            return center_truncation_check("FP", self.N, self.upper.gamma)
        return center_truncation_check("PP", self.N, sigma=self.upper.sigma)

    def order(self, point=None):
        return focus_order(self.sequence, point)


def _consts_to_table(consts, table):
    if not consts:
        return {}
    out = {}
    for k, v in consts.items():
        if isinstance(v, MultiPoly) and v.table != table:
            v = v.to_table(table)
        out[k] = v
    return out


def analyze(system, N: int, free_constants=None, budget=DEFAULT_BUDGET) -> Analysis:
    """Classify, reduce both sides and build the Lyapunov sequence."""
    from .nf_focus import reduce_lower_focus, reduce_upper_focus
    from .nf_tangency import reduce_lower_tangency, reduce_pp_upper
    from .sysmodel import classify, homeomorphism_consistency_check

    if N < 1:
        raise InputError("N must be at least 1")
    bc = classify(system)
    if not bc.monodromic:
        raise PreconditionError(f"origin is not monodromic: {bc.reason}")
    S = bc.system
    consts = _consts_to_table(free_constants, S.table)
    if bc.kind == "FF":
        up = reduce_upper_focus(*S.upper, N, consts)
        lo = reduce_lower_focus(*S.lower, N, consts)
        seq = lyapunov_ff(up.gamma, lo.gamma, N, budget)
    elif bc.kind == "FP":
        lo = reduce_lower_tangency(*S.lower, N)
        up = reduce_upper_focus(*S.upper, N, lo.r0)
        seq = lyapunov_fp(up.gamma, N, budget)
    else:
        lo = reduce_lower_tangency(*S.lower, N)
        up = reduce_pp_upper(*S.upper, N, lo.r0)
        seq = lyapunov_pp(up.sigma, up.ell, N, S.table, budget)
    gluing = homeomorphism_consistency_check(up.transform, lo.transform)
    return Analysis(bc, N, up, lo, seq, gluing)


def subsystem_order(X, Y, N, point=None, budget=DEFAULT_BUDGET) -> FocusOrder:
    """Order of a single focus field, via the system with that field on both sides."""
    from .sysmodel import PiecewiseSystem

    sys2 = PiecewiseSystem((X, Y), (X, Y), table=X.table)
    return analyze(sys2, N, budget=budget).order(point)


# ---------------------------------------------------------------------------
# Cross-check


class CrosscheckEntry:
    def __init__(self, k, agree, detail="", vacuous=False):
        self.k = k
        self.agree = agree
        self.detail = detail
        self.vacuous = vacuous

    def to_dict(self):
        return {"k": self.k, "agree": self.agree, "vacuous": self.vacuous, "detail": self.detail}


class CrosscheckReport:
    def __init__(self, kind, entries, notes=()):
        self.kind = kind
        self.entries = entries
        self.notes = list(notes)

    @property
    def ok(self):
        return all(e.agree for e in self.entries)

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {"type": self.kind, "ok": self.ok, "entries": [e.to_dict() for e in self.entries],
                "notes": self.notes}


def _ideal_zero(poly, priors, budget):
    if poly.is_zero():
        return True
    if not priors:
        return False
    return reduce_mod_set(poly, priors, budget).is_zero()


def _ext_diff_zero(diff: ExtScalar, priors, budget):
    bad = []
    for key, c in diff.terms.items():
        if not _ideal_zero(c, priors, budget):
            bad.append((key, c))
    return bad


def crosscheck_theorem12(an: Analysis, budget=DEFAULT_BUDGET) -> CrosscheckReport:
    """Compare ``L_k`` times its factor with return-map differences.

    Agreement is exact modulo the ideal of the earlier nonzero ``L_j``.
    """
    seq = an.sequence
    N = an.N
    entries, notes = [], []
    table = an.table
    Ls = {k: seq.L(k) for k in seq.entries}

    def priors(k):
        return [Ls[j] for j in range(1, k) if not Ls[j].is_zero()]

    if an.kind == "PP":
        v = upper_return_map_pp(an.upper.sigma, an.upper.ell, N, table)
        entries.append(CrosscheckEntry(1, Ls[1].is_zero(), "V_1 = 0 on both paths"))
        for k in range(2, N + 2):
            closed = Ls[k] * Fraction(2, k + 2 * an.upper.ell - 1)
            diff = v[k] - closed
            ok = _ideal_zero(diff, priors(k), budget)
            entries.append(CrosscheckEntry(k, ok, "" if ok else f"difference {diff.to_text()}"))
        return CrosscheckReport("PP", entries, notes)

    gp = an.upper.gamma
    up = upper_return_map_ff(gp, N)
    if an.kind == "FF":
        gl = an.gamma_lower_flipped()
        g1p, g1m = _gamma1_value(gp[1]), _gamma1_value(gl[1])
        same = g1p == g1m
        entries.append(CrosscheckEntry(1, same == Ls[1].is_zero(),
                                       f"gamma1+ = {g1p}, flipped lower gamma1 = {g1m}"))
        if not same:
            for k in range(2, N + 2):
                entries.append(CrosscheckEntry(k, True, "V_1 != 0, nothing to compare", vacuous=True))
            return CrosscheckReport("FF", entries, notes)
        lo = upper_return_map_ff(gl, N, side="lower")
        g1 = g1p
        for k in range(2, N + 2):
            rm = up[k] - lo[k]
            closed = integral_factor(k, g1).map(lambda c, L=Ls[k]: L * c)
            bad = _ext_diff_zero(rm - closed, priors(k), budget)
            entries.append(CrosscheckEntry(k, not bad, _bad_text(bad)))
            if g1 != 0 and k >= 2:
                notes.append(_factor_note(k, g1))
        return CrosscheckReport("FF", entries, notes)

    # FP: the lower half map is exactly -x
    g1 = _gamma1_value(gp[1])
    entries.append(CrosscheckEntry(1, (g1 == 0) == Ls[1].is_zero(), f"gamma1+ = {g1}"))
    if g1 != 0:
        for k in range(2, N + 2):
            entries.append(CrosscheckEntry(k, True, "V_1 != 0, nothing to compare", vacuous=True))
        return CrosscheckReport("FP", entries, notes)
    for k in range(2, N + 2):
        closed = FactorTag("FP", k).exact().map(lambda c, L=Ls[k]: L * c)
        bad = _ext_diff_zero(up[k] - closed, priors(k), budget)
        entries.append(CrosscheckEntry(k, not bad, _bad_text(bad)))
    return CrosscheckReport("FP", entries, notes)


def _bad_text(bad):
    if not bad:
        return ""
    return "; ".join(f"pi^{e} E^{m}: {c.to_text()}" for (e, m), c in bad)


def _factor_note(k, g1):
    with mpmath.workdps(40):
        mid = ext_value(integral_factor(k, g1), 30)
        printed = printed_cff(k, mpmath.mpf(g1.numerator) / g1.denominator)
        rel = abs(printed - mid) / abs(mid)
    status = "agree" if rel < mpmath.mpf(10) ** -20 else "DIFFER"
    return (f"k={k}, gamma1={g1}: closed-form C_k^FF = {mpmath.nstr(printed, 15)}, "
            f"integral factor = {mpmath.nstr(mid, 15)} ({status})")
