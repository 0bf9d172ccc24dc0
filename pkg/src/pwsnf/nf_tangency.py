"""Normal form of one subsystem with an invisible tangency at the origin.

After the scaling ``y -> q1 y`` with ``q1 = -b/a0`` (``b`` the coefficient of
``x^{2l-1}`` in ``Y``) the field reads ``(a0, -a0 x^{2l-1}) + h.o.t.`` and is
graded with weights ``(1, 2l)``.  At order ``m`` a near-identity map

    g1 = sum_{i=0..q} alpha_i x^{m+2-2l i} y^i
    g2 = sum_{i=1..r+1} beta_i x^{m+2l+1-2l i} y^i

leaves only ``(-mu x^{m+1}, mu x^{m+2l})`` in quasi-degree ``m``.  The
coupled upper reduction of a PP point pins ``alpha_0`` to the lower side's
value and keeps two separate coefficients ``nu`` and ``eta`` instead.
"""

from __future__ import annotations

from .bell import bell_powers
from .errors import PreconditionError, PwsnfError
from .exactnum import rat
from .nf_focus import TransformRecord, flip_field, near_identity_conjugate
from .polyring import MultiPoly, QuasiGrading, quasi_component


def _tangency_data(X: MultiPoly, Y: MultiPoly):
    a0c = X.coeff_xy(0, 0)
    if not a0c.is_constant() or a0c.is_zero():
        raise PreconditionError("tangency needs a nonzero numeric X(0,0)")
    a0 = a0c.constant_value()
    if not Y.coeff_xy(0, 0).is_zero():
        raise PreconditionError("Y(0,0) must vanish at a tangency")
    line = {i: c for (i, j), c in Y.xy_coefficients().items() if j == 0 and not c.is_zero()}
    if not line:
        raise PreconditionError("Y vanishes identically on the switching line")
    lead = min(line)
    c = line[lead]
    if not c.is_constant():
        raise PreconditionError(f"parameter-dependent type: tangency coefficient {c.to_text()}")
    b = c.constant_value()
    if lead % 2 == 0:
        raise PreconditionError(f"tangency of even multiplicity {lead}")
    ell = (lead + 1) // 2
    if a0 * b >= 0:
        raise PreconditionError("tangency is visible from the upper half plane")
    return a0, b, ell


def prescale(X: MultiPoly, Y: MultiPoly):
    """Apply ``y -> q1 y``; returns ``(a0, ell, q1, X', Y')``."""
    a0, b, ell = _tangency_data(X, Y)
    q1 = -b / a0
    yv = MultiPoly.var(X.table, "y")
    Xs = X.subs({"y": yv * q1})
    Ys = Y.subs({"y": yv * q1}) / q1
    return a0, ell, q1, Xs, Ys


class TangencyNF:
    """Normal-form data of a tangency side.

    ``mu`` (plain path) or ``nu``/``eta``/``sigma`` (PP upper path) are dicts
    keyed by index; ``r0[k]`` is the coefficient of ``x^k`` on ``y = 0`` of
    the degree-k map.
    """

    def __init__(self, ell, a0, N, transform, r0, T=None, mu=None, nu=None, eta=None, sigma=None,
                 side="upper"):
        self.ell = ell
        self.a0 = a0
        self.N = N
        self.transform = transform
        self.r0 = r0
        self.T = T or {}
        self.mu = mu
        self.nu = nu
        self.eta = eta
        self.sigma = sigma
        self.side = side

    def to_dict(self):
        out = {"side": self.side, "ell": self.ell, "a0": str(self.a0),
               "r0": {str(k): v.to_text() for k, v in sorted(self.r0.items())}}
        for name in ("mu", "nu", "eta", "sigma", "T"):
            d = getattr(self, name)
            if d:
                out[name] = {str(k): v.to_text() for k, v in sorted(d.items())}
        return out


def _solve_order(m, ell, a0, ahat, bhat, zero):
    """Coefficients ``alpha_1..alpha_q`` and ``beta_1..beta_{r+1}`` at order m."""
    L = 2 * ell
    r = (m + 1) // L
    q = (m + 2) // L
    al: dict = {}
    be: dict = {}

    def A(i):
        return al.get(i, zero)

    def B(i):
        return be.get(i, zero)

    if r == 0:
        if q >= 1:
            al[1] = zero
        be[1] = bhat(m, 1) / (a0 * (m + 1))
    else:
        if (m + 2) % L == 0:
            al[q] = zero
            be[r + 1] = bhat(m - L * r, r + 1) / (a0 * (m + 1 - L * r))
        elif (m + 1) % L == 0:
            be[r + 1] = zero
        else:
            be[r + 1] = bhat(m - L * r, r + 1) / (a0 * (m + 1 - L * r))
        for i in range(r, 0, -1):
            sg = 1 if q - i > 0 else 0
            al[i] = (ahat(m + 1 - L * i, i) + A(i + 1) * (sg * (i + 1) * a0)) / (a0 * (m + 2 - L * i))
            be[i] = (bhat(m + L - L * i, i) + B(i + 1) * ((i + 1) * a0)
                     - A(i) * ((L - 1) * a0)) / (a0 * (m + 1 + L - L * i))
    return al, be, q, r


def _maps(tab, m, ell, alpha0, al, be):
    L = 2 * ell
    g1 = {(m + 2, 0): alpha0}
    for i, c in al.items():
        g1[(m + 2 - L * i, i)] = c
    g2 = {(m + L + 1 - L * i, i): c for i, c in be.items()}
    return MultiPoly.from_xy(tab, g1), MultiPoly.from_xy(tab, g2)


def _run(X, Y, N, a0, ell, pinned=None):
    """Shared order loop.  With ``pinned`` (dict k -> r0[k]) the PP upper
    variant is solved and ``(nu, eta)`` returned, else ``(mu, mu)``."""
    tab = X.table
    zero = MultiPoly.zero(tab)
    L = 2 * ell
    cap1, cap2 = N, N - 1 + L
    P = X.truncate(1, L, cap1)
    Q = Y.truncate(1, L, cap2)
    grading = QuasiGrading(ell)
    first, second, r0, orders = {}, {}, {}, []
    for m in range(0, N):
        Acoef = P.xy_coefficients()
        Bcoef = Q.xy_coefficients()

        def ahat(i, j):
            return Acoef.get((i, j), zero) if i >= 0 and i + L * j == m + 1 else zero

        def bhat(i, j):
            return Bcoef.get((i, j), zero) if i >= 0 and i + L * j == m + L else zero

        al, be, q, r = _solve_order(m, ell, a0, ahat, bhat, zero)
        a1 = al.get(1, zero)
        b1 = be.get(1, zero)
        if pinned is None:
            alpha0 = (ahat(m + 1, 0) + bhat(m + L, 0) + (a1 + b1) * a0) / (a0 * (m + 1 + L))
            c1 = bhat(m + L, 0) - alpha0 * ((L - 1) * a0) + b1 * a0
            c2 = c1
            want1, want2 = -c1, c2
        else:
            alpha0 = pinned.get(m + 2, zero)
            if not isinstance(alpha0, MultiPoly):
                alpha0 = MultiPoly.const(tab, alpha0)
            c1 = -ahat(m + 1, 0) + alpha0 * ((m + 2) * a0) - a1 * a0
            c2 = bhat(m + L, 0) - alpha0 * ((L - 1) * a0) + b1 * a0
            want1, want2 = -c1, c2
        g1, g2 = _maps(tab, m, ell, alpha0, al, be)
        P, Q = near_identity_conjugate(P, Q, g1, g2, 1, L, cap1, cap2)
        got1 = quasi_component(P, grading, m + 1)
        got2 = quasi_component(Q, grading, m + L)
        exp1 = MultiPoly.from_xy(tab, {(m + 1, 0): want1})
        exp2 = MultiPoly.from_xy(tab, {(m + L, 0): want2})
        if got1 != exp1 or got2 != exp2:
            raise PwsnfError(f"tangency reduction left non-normal terms at quasi-degree {m}")
        first[m + 2] = c1
        second[m + 2] = c2
        r0[m + 2] = alpha0
        orders.append((m + 2, g1, g2))
    return first, second, r0, orders, P, Q


def time_rescale_tangency(a0, mu, N, table):
    """``T_1..T_N`` of ``dt -> (1 - sum T_k x^k) dt / (-a0)``.

    Derived from requiring the rescaled first component to be exactly ``-1``:
    ``-a0 T_k - mu_{k+1} + sum_{i<k} mu_{i+1} T_{k-i} = 0``.
    """
    a0 = rat(a0)
    zero = MultiPoly.zero(table)
    T: dict = {}
    for k in range(1, N + 1):
        s = zero
        for i in range(1, k):
            s = s + T[k - i] * mu[i + 1]
        T[k] = (s - mu[k + 1]) / a0
    return T


def time_rescale_tangency_printed(a0, mu, N, table):
    """The recursion with the sign of the convolution sum as it is often
    printed, ``T_k = -(mu_{k+1} + sum T_{k-i} mu_{i+1}) / a0``.  It does not
    eliminate the rescaled coefficients beyond ``k = 1``; kept for comparison."""
    a0 = rat(a0)
    zero = MultiPoly.zero(table)
    T: dict = {}
    for k in range(1, N + 1):
        s = zero
        for i in range(1, k):
            s = s + T[k - i] * mu[i + 1]
        T[k] = -(mu[k + 1] + s) / a0
    return T


def recompose_tangency(a0, ell, mu, T, N, table):
    """Rescaled normal form; returns the residual ``mu~_k`` coefficients."""
    a0 = rat(a0)
    x = MultiPoly.var(table, "x")
    X = MultiPoly.const(table, a0)
    Y = x ** (2 * ell - 1) * (-a0)
    for k in range(1, N + 1):
        X = X - x ** k * mu[k + 1]
        Y = Y + x ** (k + 2 * ell - 1) * mu[k + 1]
    s = MultiPoly.const(table, 1)
    for k in range(1, N + 1):
        s = s - x ** k * T[k]
    s = s / (-a0)
    Xs = X.mul_truncated(s, 1, 1, N)
    Ys = Y.mul_truncated(s, 1, 1, N + 2 * ell - 1)
    resid = {}
    for k in range(1, N + 1):
        resid[k] = (-Xs.coeff_xy(k, 0), Ys.coeff_xy(k + 2 * ell - 1, 0))
    return Xs, Ys, resid


def reduce_tangency(X: MultiPoly, Y: MultiPoly, N: int, side="upper") -> TangencyNF:
    """Plain tangency normal form (``mu`` path) of an upper-convention field."""
    if N < 1:
        raise ValueError("N must be at least 1")
    a0, ell, q1, Xs, Ys = prescale(X, Y)
    mu, _, r0, orders, _, _ = _run(Xs, Ys, N, a0, ell)
    T = time_rescale_tangency(a0, mu, N, X.table)
    rec = TransformRecord(side, q1, 0, X.table, (1, 2 * ell), N + 1, orders)
    return TangencyNF(ell, a0, N, rec, r0, T=T, mu=mu, side=side)


def reduce_lower_tangency(X: MultiPoly, Y: MultiPoly, N: int) -> TangencyNF:
    """Lower-side tangency: flipped to the upper half plane, then reduced."""
    Xf, Yf = flip_field(X, Y)
    return reduce_tangency(Xf, Yf, N, side="lower")


def sigma_from_nu_eta(a0, nu, eta, N, table):
    """Series division ``sigma_{k+1}`` with ``eta_1 = -a0``."""
    a0 = rat(a0)
    zero = MultiPoly.zero(table)
    args = [nu.get(j + 1, zero) for j in range(1, N + 1)]
    bells = bell_powers(N, args)
    et = dict(eta)
    et[1] = MultiPoly.const(table, -a0)
    sigma = {}
    for k in range(1, N + 1):
        acc = -et[k + 1] / a0
        for j in range(1, k + 1):
            for i in range(1, j + 1):
                bv = bells.get((j, i))
                if bv is None:
                    continue
                acc = acc - bv * et[k - j + 1] / (a0 ** (i + 1))
        sigma[k + 1] = acc
    return sigma


def reduce_pp_upper(X: MultiPoly, Y: MultiPoly, N: int, r0_lower) -> TangencyNF:
    """Upper side of a PP point with its boundary map pinned to the lower one."""
    if N < 1:
        raise ValueError("N must be at least 1")
    a0, ell, q1, Xs, Ys = prescale(X, Y)
    pinned = {k: (v.to_table(X.table) if isinstance(v, MultiPoly) and v.table != X.table else v)
              for k, v in r0_lower.items()}
    nu, eta, r0, orders, _, _ = _run(Xs, Ys, N, a0, ell, pinned)
    sigma = sigma_from_nu_eta(a0, nu, eta, N, X.table)
    rec = TransformRecord("upper", q1, 0, X.table, (1, 2 * ell), N + 1, orders)
    return TangencyNF(ell, a0, N, rec, r0, nu=nu, eta=eta, sigma=sigma)
