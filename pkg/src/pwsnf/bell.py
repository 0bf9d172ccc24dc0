"""Ordinary Bell polynomials.

``B(k, i)(v1, ..., v_{k-i+1})`` is the coefficient of ``x**k`` in
``(v1*x + v2*x**2 + ...)**i``.  Values are computed from that generating
function by repeated truncated products, so the arguments may be anything
with ``+`` and ``*``: rationals, ``MultiPoly`` or ``TrigExpPoly``.
"""

from __future__ import annotations

import threading

from .polyring import MultiPoly, SymbolTable


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def bell_powers(kmax: int, args, imax: int | None = None) -> dict:
    """All ``B(k, i)`` with ``1 <= i <= k <= kmax`` (and ``i <= imax``).

    ``args[j-1]`` plays the role of ``v_j``; missing or ``None`` entries are
    zero.  Entries that vanish structurally are omitted from the result.
    """
    if imax is None:
        imax = kmax
    series = {}
    for j in range(1, kmax + 1):
        if j - 1 < len(args) and args[j - 1] is not None:
            series[j] = args[j - 1]
    out = {}
    # power[d] = coefficient of x^d in S^i, for the current i
    power = dict(series)
    for d, c in power.items():
        out[(d, 1)] = c
    for i in range(2, imax + 1):
        nxt: dict = {}
        for d1, c1 in power.items():
            for d2, c2 in series.items():
                d = d1 + d2
                if d > kmax:
                    continue
                nxt[d] = _add(nxt.get(d), c1 * c2)
        power = nxt
        for d, c in power.items():
            out[(d, i)] = c
    return out


def bell(k: int, i: int, args):
    """Ordinary Bell polynomial ``B(k, i)`` evaluated at ``args``.

    Returns ``0`` (the integer) when the value vanishes structurally; callers
    that need a typed zero should add it to one.
    """
    if not (isinstance(k, int) and isinstance(i, int)) or i < 1 or k < i:
        raise ValueError("bell needs integers k >= i >= 1")
    if len(args) < k - i + 1:
        raise ValueError(f"bell({k},{i}) needs at least {k - i + 1} arguments")
    val = bell_powers(k, list(args[: k - i + 1]), imax=i).get((k, i))
    return 0 if val is None else val


class BellTable:
    """Memoized symbolic Bell polynomials in symbols ``v1, v2, ...``."""

    def __init__(self, size: int = 12):
        self._lock = threading.Lock()
        self._size = 0
        self._cache: dict[tuple[int, int], MultiPoly] = {}
        self._grow(size)

    def _grow(self, size):
        self.table = SymbolTable([f"v{j}" for j in range(1, size + 1)])
        self._size = size
        vs = [MultiPoly.var(self.table, f"v{j}") for j in range(1, size + 1)]
        zero = MultiPoly.zero(self.table)
        raw = bell_powers(size, vs)
        self._cache = {}
        for k in range(1, size + 1):
            for i in range(1, k + 1):
                self._cache[(k, i)] = raw.get((k, i), zero)

    def get(self, k: int, i: int) -> MultiPoly:
        if i < 1 or k < i:
            raise ValueError("need k >= i >= 1")
        with self._lock:
            if k > self._size:
                self._grow(max(k, 2 * self._size))
            return self._cache[(k, i)]

    def __call__(self, k, i):
        return self.get(k, i)


DEFAULT_TABLE = BellTable()
