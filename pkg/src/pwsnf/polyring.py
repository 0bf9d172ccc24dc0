"""Sparse multivariate polynomials with rational coefficients.

A ``SymbolTable`` fixes the variable order: declared parameters first, then
the two phase variables ``x`` and ``y``.  Monomials are stored as packed
integers (16 bits per exponent), which makes monomial multiplication a
single integer addition.  Ordering is graded reverse lexicographic with the
first declared symbol largest.

Also here: quasi-homogeneous grading and a small Buchberger implementation
used for reduction modulo previously computed constants.
"""

from __future__ import annotations

import re
import threading
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InputError, ResourceBudgetError
from .exactnum import rat

BITS = 16
MASK = (1 << BITS) - 1
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")

DEFAULT_BUDGET = 2_000_000


class SymbolTable:
    """Ordered symbol names; parameters first, then the phase variables."""

    def __init__(self, params: Iterable[str] = (), variables: Iterable[str] = ("x", "y")):
        params = tuple(params)
        variables = tuple(variables)
        names = params + variables
        for n in names:
            if not _IDENT.match(n):
                raise InputError(f"invalid symbol name {n!r}")
        if len(set(names)) != len(names):
            raise InputError(f"duplicate symbol in {names}")
        self.params = params
        self.variables = variables
        self.names = names
        self.index = {n: i for i, n in enumerate(names)}
        self.n = len(names)
        self._high = sum(1 << (BITS * i + BITS - 1) for i in range(self.n))
        self._keycache: dict[int, tuple] = {}
        self._shift = {n: BITS * i for i, n in enumerate(names)}

    def __eq__(self, other):
        return isinstance(other, SymbolTable) and self.names == other.names and \
            self.params == other.params

    def __hash__(self):
        return hash((self.params, self.variables))

    def __repr__(self):
        return f"SymbolTable(params={self.params}, variables={self.variables})"

    def pack(self, exps) -> int:
        if len(exps) != self.n:
            raise ValueError("exponent vector length mismatch")
        key = 0
        for i, e in enumerate(exps):
            if e < 0 or e > MASK >> 1:
                raise ValueError(f"exponent {e} out of range")
            key |= e << (BITS * i)
        return key

    def unpack(self, key: int) -> tuple:
        return tuple((key >> (BITS * i)) & MASK for i in range(self.n))

    def exponent(self, key: int, name: str) -> int:
        return (key >> self._shift[name]) & MASK

    def unit(self, name: str, power: int = 1) -> int:
        if name not in self.index:
            raise InputError(f"undeclared symbol {name!r}")
        return power << self._shift[name]

    def degree(self, key: int) -> int:
        d = 0
        while key:
            d += key & MASK
            key >>= BITS
        return d

    def sortkey(self, key: int) -> tuple:
        sk = self._keycache.get(key)
        if sk is None:
            exps = self.unpack(key)
            sk = (sum(exps), tuple(-e for e in reversed(exps)))
            if len(self._keycache) < 500_000:
                self._keycache[key] = sk
        return sk

    def divides(self, a: int, b: int) -> bool:
        """True when monomial ``a`` divides monomial ``b``."""
        h = self._high
        return ((b | h) - a) & h == h

    def lcm(self, a: int, b: int) -> int:
        out = 0
        for i in range(self.n):
            s = BITS * i
            ea = (a >> s) & MASK
            eb = (b >> s) & MASK
            out |= (ea if ea > eb else eb) << s
        return out

    def coprime(self, a: int, b: int) -> bool:
        for i in range(self.n):
            s = BITS * i
            if (a >> s) & MASK and (b >> s) & MASK:
                return False
        return True

    def monomial_text(self, key: int) -> str:
        parts = []
        for i, name in enumerate(self.names):
            e = (key >> (BITS * i)) & MASK
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)


class MultiPoly:
    """Immutable polynomial over the rationals in the symbols of a table."""

    __slots__ = ("table", "_t", "_hash")

    def __init__(self, table: SymbolTable, terms: Mapping | None = None):
        """Build from a mapping ``exponent tuple -> coefficient``."""
        self.table = table
        d: dict[int, Fraction] = {}
        if terms:
            for exps, c in terms.items():
                key = table.pack(exps) if isinstance(exps, tuple) else int(exps)
                c = rat(c)
                d[key] = d.get(key, 0) + c
        self._t = {k: v for k, v in d.items() if v}
        self._hash = None

    @classmethod
    def _make(cls, table, d):
        obj = object.__new__(cls)
        obj.table = table
        obj._t = d
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, table):
        return cls._make(table, {})

    @classmethod
    def const(cls, table, c):
        c = rat(c)
        return cls._make(table, {0: c} if c else {})

    @classmethod
    def var(cls, table, name, power=1):
        return cls._make(table, {table.unit(name, power): Fraction(1)})

    @classmethod
    def from_xy(cls, table, coeffs: Mapping[tuple[int, int], "MultiPoly"]):
        """Assemble ``sum c_ij x^i y^j`` from parameter-only coefficients."""
        ux = table.unit("x")
        uy = table.unit("y")
        out: dict[int, Fraction] = {}
        for (i, j), c in coeffs.items():
            shift = ux * i + uy * j
            if isinstance(c, MultiPoly):
                for k, v in c._t.items():
                    kk = k + shift
                    out[kk] = out.get(kk, 0) + v
            else:
                c = rat(c)
                if c:
                    out[shift] = out.get(shift, 0) + c
        return cls._make(table, {k: v for k, v in out.items() if v})

    # -- basic queries -------------------------------------------------

    @property
    def terms(self) -> list[tuple[Fraction, tuple]]:
        """Terms as ``(coefficient, exponent tuple)``, grevlex descending."""
        tab = self.table
        keys = sorted(self._t, key=tab.sortkey, reverse=True)
        return [(self._t[k], tab.unpack(k)) for k in keys]

    def raw_items(self):
        return self._t.items()

    def __len__(self):
        return len(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def __bool__(self):
        return bool(self._t)

    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and 0 in self._t)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self._t.get(0, Fraction(0))

    def constant_term(self) -> Fraction:
        return self._t.get(0, Fraction(0))

    def degree(self) -> int:
        if not self._t:
            return -1
        return max(self.table.degree(k) for k in self._t)

    def degree_in(self, name: str) -> int:
        if not self._t:
            return -1
        return max(self.table.exponent(k, name) for k in self._t)

    def free_symbols(self) -> set[str]:
        used = 0
        for k in self._t:
            used |= k
        return {n for n in self.table.names if (used >> self.table._shift[n]) & MASK}

    def depends_on_xy(self) -> bool:
        return bool(self.free_symbols() & set(self.table.variables))

    def leading_key(self) -> int:
        return max(self._t, key=self.table.sortkey)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.table is not self.table and other.table != self.table:
                raise ValueError("polynomials live in different symbol tables")
            return other
        return MultiPoly.const(self.table, other)

    def __add__(self, other):
        other = self._coerce(other)
        if not other._t:
            return self
        if not self._t:
            return other
        a, b = (self._t, other._t) if len(self._t) >= len(other._t) else (other._t, self._t)
        d = dict(a)
        for k, v in b.items():
            w = d.get(k)
            if w is None:
                d[k] = v
            else:
                w = w + v
                if w:
                    d[k] = w
                else:
                    del d[k]
        return MultiPoly._make(self.table, d)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._make(self.table, {k: -v for k, v in self._t.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "MultiPoly":
        c = rat(c)
        if not c:
            return MultiPoly.zero(self.table)
        if c == 1:
            return self
        return MultiPoly._make(self.table, {k: v * c for k, v in self._t.items()})

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        other = self._coerce(other)
        a, b = self._t, other._t
        if not a or not b:
            return MultiPoly.zero(self.table)
        if len(a) < len(b):
            a, b = b, a
        d: dict[int, Fraction] = {}
        get = d.get
        for k2, c2 in b.items():
            for k1, c1 in a.items():
                k = k1 + k2
                v = get(k)
                d[k] = c1 * c2 if v is None else v + c1 * c2
        return MultiPoly._make(self.table, {k: v for k, v in d.items() if v})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, MultiPoly):
            if not other.is_constant() or other.is_zero():
                raise ZeroDivisionError("division only by nonzero constants")
            other = other.constant_value()
        other = rat(other)
        if other == 0:
            raise ZeroDivisionError("polynomial division by zero")
        return self.scale(1 / other)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MultiPoly.const(self.table, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_truncated(self, other: "MultiPoly", wx: int, wy: int, cap: int) -> "MultiPoly":
        """Product keeping only terms with ``wx*deg_x + wy*deg_y <= cap``."""
        other = self._coerce(other)
        tab = self.table
        sx, sy = tab._shift["x"], tab._shift["y"]

        def weighted(d):
            return [(k, c, wx * ((k >> sx) & MASK) + wy * ((k >> sy) & MASK)) for k, c in d.items()]

        a = [t for t in weighted(self._t) if t[2] <= cap]
        b = [t for t in weighted(other._t) if t[2] <= cap]
        d: dict[int, Fraction] = {}
        get = d.get
        for k1, c1, w1 in a:
            room = cap - w1
            for k2, c2, w2 in b:
                if w2 > room:
                    continue
                k = k1 + k2
                v = get(k)
                d[k] = c1 * c2 if v is None else v + c1 * c2
        return MultiPoly._make(tab, {k: v for k, v in d.items() if v})

    def truncate(self, wx: int, wy: int, cap: int) -> "MultiPoly":
        tab = self.table
        sx, sy = tab._shift["x"], tab._shift["y"]
        return MultiPoly._make(tab, {k: v for k, v in self._t.items()
                                     if wx * ((k >> sx) & MASK) + wy * ((k >> sy) & MASK) <= cap})

    # -- comparison ----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.table == other.table and self._t == other._t
        try:
            c = rat(other)
        except TypeError:
            return NotImplemented
        return self._t == ({0: c} if c else {})

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._t.items()))
        return self._hash

    # -- structure -----------------------------------------------------

    def xy_coefficients(self) -> dict[tuple[int, int], "MultiPoly"]:
        """Split into ``{(i, j): coefficient of x^i y^j}`` (parameters only)."""
        tab = self.table
        sx, sy = tab._shift["x"], tab._shift["y"]
        groups: dict[tuple[int, int], dict[int, Fraction]] = {}
        for k, v in self._t.items():
            i = (k >> sx) & MASK
            j = (k >> sy) & MASK
            rest = k - (i << sx) - (j << sy)
            groups.setdefault((i, j), {})[rest] = v
        return {ij: MultiPoly._make(tab, d) for ij, d in groups.items()}

    def coeff_xy(self, i: int, j: int) -> "MultiPoly":
        tab = self.table
        sx, sy = tab._shift["x"], tab._shift["y"]
        out = {}
        for k, v in self._t.items():
            if (k >> sx) & MASK == i and (k >> sy) & MASK == j:
                out[k - (i << sx) - (j << sy)] = v
        return MultiPoly._make(tab, out)

    def partial_derivative(self, name: str, order: int = 1) -> "MultiPoly":
        tab = self.table
        if name not in tab.index:
            raise InputError(f"undeclared symbol {name!r}")
        if order < 0:
            raise ValueError("order must be non-negative")
        s = tab._shift[name]
        unit = 1 << s
        out = {}
        for k, v in self._t.items():
            e = (k >> s) & MASK
            if e < order:
                continue
            c = v
            for t in range(order):
                c *= e - t
            out[k - order * unit] = c
        return MultiPoly._make(tab, out)

    def subs(self, mapping: Mapping[str, object]) -> "MultiPoly":
        """Substitute symbols by polynomials or rationals (same table)."""
        tab = self.table
        repl = {}
        for name, val in mapping.items():
            if name not in tab.index:
                raise InputError(f"undeclared symbol {name!r}")
            repl[name] = val if isinstance(val, MultiPoly) else MultiPoly.const(tab, val)
        if not repl:
            return self
        powers: dict[tuple[str, int], MultiPoly] = {}

        def power(name, e):
            key = (name, e)
            if key not in powers:
                powers[key] = repl[name] ** e
            return powers[key]

        shifts = [(n, tab._shift[n]) for n in repl]
        acc: MultiPoly = MultiPoly.zero(tab)
        grouped: dict[tuple, dict[int, Fraction]] = {}
        for k, v in self._t.items():
            pattern = []
            rest = k
            for n, s in shifts:
                e = (k >> s) & MASK
                if e:
                    pattern.append((n, e))
                    rest -= e << s
            grouped.setdefault(tuple(pattern), {})[rest] = v
        for pattern, d in grouped.items():
            term = MultiPoly._make(tab, d)
            for n, e in pattern:
                term = term * power(n, e)
            acc = acc + term
        return acc

    def evaluate(self, values: Mapping[str, object]) -> Fraction:
        """Exact value at a point; every used symbol must be given."""
        tab = self.table
        vals = {n: rat(v) for n, v in values.items()}
        missing = self.free_symbols() - set(vals)
        if missing:
            raise InputError(f"missing values for {sorted(missing)}")
        total = Fraction(0)
        used = [(n, tab._shift[n], vals[n]) for n in self.free_symbols()]
        for k, c in self._t.items():
            t = c
            for n, s, val in used:
                e = (k >> s) & MASK
                if e:
                    t *= val ** e
            total += t
        return total

    def to_table(self, table: SymbolTable) -> "MultiPoly":
        """Re-express in another table that contains every used symbol."""
        if table == self.table:
            return self if table is self.table else MultiPoly._make(table, dict(self._t))
        src = self.table
        out = {}
        for k, v in self._t.items():
            nk = 0
            for i, name in enumerate(src.names):
                e = (k >> (BITS * i)) & MASK
                if e:
                    if name not in table.index:
                        raise InputError(f"symbol {name!r} missing from target table")
                    nk += e << table._shift[name]
            out[nk] = out.get(nk, 0) + v
        return MultiPoly._make(table, {k: v for k, v in out.items() if v})

    def monic(self) -> "MultiPoly":
        if not self._t:
            return self
        lc = self._t[self.leading_key()]
        return self.scale(1 / lc)

    # -- rendering -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical text: grevlex order, explicit ``*`` and ``^``, ``a/b``."""
        if not self._t:
            return "0"
        tab = self.table
        out = []
        for n, k in enumerate(sorted(self._t, key=tab.sortkey, reverse=True)):
            c = self._t[k]
            mono = tab.monomial_text(k)
            neg = c < 0
            a = -c if neg else c
            if mono:
                body = mono if a == 1 else f"{a}*{mono}"
            else:
                body = str(a)
            if n == 0:
                out.append(("-" if neg else "") + body)
            else:
                out.append((" - " if neg else " + ") + body)
        return "".join(out)

    __str__ = to_text

    def __repr__(self):
        return f"MultiPoly({self.to_text()!r})"


def partial_derivative(f: MultiPoly, symbol: str, order: int = 1) -> MultiPoly:
    return f.partial_derivative(symbol, order)


def poly_arith(f: MultiPoly, g: MultiPoly, op: str) -> MultiPoly:
    if not isinstance(f, MultiPoly) or not isinstance(g, MultiPoly):
        raise TypeError("poly_arith expects two MultiPoly values")
    if f.table != g.table:
        raise ValueError("polynomials live in different symbol tables")
    if op == "+":
        return f + g
    if op == "-":
        return f - g
    if op in ("*", "×"):
        return f * g
    raise ValueError(f"unknown operator {op!r}")


class QuasiGrading:
    """Weights ``(1, 2*ell)`` for ``(x, y)``."""

    def __init__(self, ell: int):
        if not isinstance(ell, int) or ell < 1:
            raise ValueError("ell must be a positive integer")
        self.ell = ell
        self.p = 1
        self.q = 2 * ell

    def weight(self, i: int, j: int) -> int:
        return self.p * i + self.q * j

    def __repr__(self):
        return f"QuasiGrading(1, {self.q})"


def quasi_component(f: MultiPoly, grading: QuasiGrading, k: int) -> MultiPoly:
    """Sum of the terms ``c x^i y^j`` of ``f`` with ``i + 2*ell*j == k``."""
    tab = f.table
    sx, sy = tab._shift["x"], tab._shift["y"]
    out = {kk: v for kk, v in f._t.items()
           if grading.p * ((kk >> sx) & MASK) + grading.q * ((kk >> sy) & MASK) == k}
    return MultiPoly._make(tab, out)


# ---------------------------------------------------------------------------
# Groebner bases


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def spend(self, n=1):
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise ResourceBudgetError(
                f"Groebner computation exceeded its budget of {self.limit} steps")


def _check_params_only(polys):
    for p in polys:
        if p.depends_on_xy():
            raise ValueError("ideal reduction is only defined for parameter polynomials")


def _lead(p: dict, tab: SymbolTable) -> int:
    return max(p, key=tab.sortkey)


def _normal_form(f: dict, basis: list[tuple[int, dict]], tab: SymbolTable, budget: _Budget) -> dict:
    """Full reduction of ``f`` by monic polynomials ``(lead, terms)``."""
    p = dict(f)
    rem: dict[int, Fraction] = {}
    sortkey = tab.sortkey
    divides = tab.divides
    while p:
        lm = max(p, key=sortkey)
        lc = p[lm]
        for glm, g in basis:
            if divides(glm, lm):
                shift = lm - glm
                budget.spend(len(g))
                for k, v in g.items():
                    kk = k + shift
                    w = p.get(kk, 0) - lc * v
                    if w:
                        p[kk] = w
                    else:
                        p.pop(kk, None)
                break
        else:
            rem[lm] = lc
            del p[lm]
    return rem


def _spoly(f, flm, g, glm, tab):
    l = tab.lcm(flm, glm)
    sf, sg = l - flm, l - glm
    out: dict[int, Fraction] = {}
    for k, v in f.items():
        out[k + sf] = v
    for k, v in g.items():
        kk = k + sg
        w = out.get(kk, 0) - v
        if w:
            out[kk] = w
        else:
            out.pop(kk, None)
    return out


def _monic(d, tab):
    lm = _lead(d, tab)
    lc = d[lm]
    if lc != 1:
        inv = 1 / lc
        d = {k: v * inv for k, v in d.items()}
    return lm, d


def groebner_basis(G: Iterable[MultiPoly], budget: int | None = DEFAULT_BUDGET) -> list[MultiPoly]:
    """Reduced Groebner basis (grevlex) of the ideal generated by ``G``.

    Buchberger's algorithm with the Gebauer-Moeller pair criteria and the
    normal selection strategy.  ``budget`` caps the number of elementary
    reduction steps; exceeding it raises ``ResourceBudgetError``.
    """
    G = [g for g in G if not g.is_zero()]
    if not G:
        return []
    tab = G[0].table
    _check_params_only(G)
    bud = _Budget(budget)
    if any(g.is_constant() for g in G):
        return [MultiPoly.const(tab, 1)]
    polys: list[tuple[int, dict]] = []
    for g in G:
        polys.append(_monic(dict(g._t), tab))

    basis_idx: list[int] = []
    pairs: list[tuple[int, int]] = []
    lcm = tab.lcm
    divides = tab.divides
    coprime = tab.coprime

    def update(h):
        nonlocal basis_idx, pairs
        hlm = polys[h][0]
        C = list(basis_idx)
        D = []
        while C:
            g1 = C.pop()
            l1 = lcm(hlm, polys[g1][0])
            if coprime(hlm, polys[g1][0]):
                D.append(g1)
                continue
            if any(divides(lcm(hlm, polys[g2][0]), l1) for g2 in C) or \
                    any(divides(lcm(hlm, polys[g2][0]), l1) for g2 in D):
                continue
            D.append(g1)
        E = [g for g in D if not coprime(hlm, polys[g][0])]
        kept = []
        for (g1, g2) in pairs:
            l12 = lcm(polys[g1][0], polys[g2][0])
            if divides(hlm, l12) and lcm(polys[g1][0], hlm) != l12 and lcm(hlm, polys[g2][0]) != l12:
                continue
            kept.append((g1, g2))
        pairs = kept + [(h, g) for g in E]
        basis_idx = [g for g in basis_idx if not divides(hlm, polys[g][0])] + [h]

    # Inter-reduce the input first so the basis starts small.
    for i in range(len(polys)):
        update(i)

    while pairs:
        pairs.sort(key=lambda pr: tab.sortkey(lcm(polys[pr[0]][0], polys[pr[1]][0])))
        i, j = pairs.pop(0)
        bud.spend()
        s = _spoly(polys[i][1], polys[i][0], polys[j][1], polys[j][0], tab)
        if not s:
            continue
        red = [polys[g] for g in basis_idx]
        h = _normal_form(s, red, tab, bud)
        if not h:
            continue
        polys.append(_monic(h, tab))
        if polys[-1][0] == 0:
            return [MultiPoly.const(tab, 1)]
        update(len(polys) - 1)

    # Reduce: drop redundant leads, then tail-reduce each element.
    final = [polys[g] for g in basis_idx]
    final = [p for p in final
             if not any(q is not p and divides(q[0], p[0]) and (q[0] != p[0] or id(q) < id(p))
                        for q in final)]
    out = []
    for idx, (lm, p) in enumerate(final):
        others = [q for q in final if q is not final[idx]]
        rest = dict(p)
        del rest[lm]
        tail = _normal_form(rest, others, tab, bud)
        tail[lm] = Fraction(1)
        out.append(MultiPoly._make(tab, tail))
    out.sort(key=lambda q: tab.sortkey(q.leading_key()))
    return out


_GB_CACHE: dict = {}
_GB_LOCK = threading.Lock()


def reduce_mod_set(f: MultiPoly, G: Iterable[MultiPoly], budget: int | None = DEFAULT_BUDGET) -> MultiPoly:
    """Normal form of ``f`` modulo the ideal generated by ``G``.

    The result is zero exactly when ``f`` lies in the ideal; it is canonical
    (independent of how ``G`` is presented) because a reduced Groebner basis
    is used.
    """
    G = list(G)
    if not G:
        raise ValueError("reduce_mod_set needs a nonempty generating set")
    _check_params_only([f] + G)
    key = (f.table, frozenset(G), budget)
    with _GB_LOCK:
        basis = _GB_CACHE.get(key[:2])
    if basis is None:
        basis = groebner_basis(G, budget)
        with _GB_LOCK:
            if len(_GB_CACHE) > 256:
                _GB_CACHE.clear()
            _GB_CACHE[key[:2]] = basis
    if not basis:
        return f
    tab = f.table
    red = [(b.leading_key(), dict(b._t)) for b in basis]
    return MultiPoly._make(tab, _normal_form(dict(f._t), red, tab, _Budget(budget)))


def divide_by_set(f: MultiPoly, G: Iterable[MultiPoly]) -> MultiPoly:
    """Remainder of plain multivariate division by ``G`` in the given order.

    Not canonical in general; offered as the fallback when a Groebner basis
    is too expensive.
    """
    G = [g for g in G if not g.is_zero()]
    if not G:
        return f
    tab = f.table
    red = [_monic(dict(g._t), tab) for g in G]
    return MultiPoly._make(tab, _normal_form(dict(f._t), red, tab, _Budget(None)))


def compose(f: MultiPoly, images: Mapping[str, MultiPoly], target: SymbolTable) -> MultiPoly:
    """Substitute every symbol of ``f`` by a polynomial of ``target``.

    Symbols of ``f`` without an image must also exist in ``target``; they are
    carried over unchanged.
    """
    src = f.table
    imgs = {}
    for name in f.free_symbols():
        if name in images:
            img = images[name]
            imgs[name] = img if isinstance(img, MultiPoly) else MultiPoly.const(target, img)
        else:
            imgs[name] = MultiPoly.var(target, name)
    powers: dict[tuple[str, int], MultiPoly] = {}

    def power(name, e):
        key = (name, e)
        if key not in powers:
            if e == 1:
                powers[key] = imgs[name]
            else:
                half = power(name, e // 2)
                sq = half * half
                powers[key] = sq * imgs[name] if e % 2 else sq
        return powers[key]

    acc = MultiPoly.zero(target)
    names = [(n, src._shift[n]) for n in imgs]
    for k, c in f._t.items():
        term = MultiPoly.const(target, c)
        for n, s in names:
            e = (k >> s) & MASK
            if e:
                term = term * power(n, e)
        acc = acc + term
    return acc


def subs_xy_truncated(f: MultiPoly, fx: MultiPoly, fy: MultiPoly, wx: int, wy: int, cap: int) -> MultiPoly:
    """``f(fx, fy)`` keeping only terms of weight ``wx*i + wy*j <= cap``.

    Only the phase variables are replaced; parameter coefficients ride along.
    Weights must be non-negative so that truncating factors early is exact.
    """
    coeffs = f.xy_coefficients()
    if not coeffs:
        return f
    maxi = max(i for i, _ in coeffs)
    maxj = max(j for _, j in coeffs)
    tab = f.table
    one = MultiPoly.const(tab, 1)
    xp = [one]
    for _ in range(maxi):
        xp.append(xp[-1].mul_truncated(fx, wx, wy, cap))
    yp = [one]
    for _ in range(maxj):
        yp.append(yp[-1].mul_truncated(fy, wx, wy, cap))
    acc = MultiPoly.zero(tab)
    for (i, j), c in coeffs.items():
        mono = xp[i].mul_truncated(yp[j], wx, wy, cap)
        if mono:
            acc = acc + mono * c
    return acc.truncate(wx, wy, cap)
