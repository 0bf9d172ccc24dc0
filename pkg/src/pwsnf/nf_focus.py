"""Normal form of one subsystem with a focus at the origin.

Pipeline: a linear change of variables brings the linear part to
``((alpha, -beta), (beta, alpha))``; near-identity maps of degrees 2..N+1
remove everything except the resonant terms ``y^m (nu x - eta y, eta x + nu y)``;
a time rescaling ``dt -> (1 - sum T_k y^k) dt / beta`` then kills the ``eta``
terms and leaves the coefficients ``gamma_k``.

Coordinates follow ``old = new + g(new)``; the conjugated field is
``(I + Dg)^{-1} v(u + g(u))``.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import PreconditionError, PwsnfError
from .exactnum import rat
from .polyring import MultiPoly, subs_xy_truncated


class TransformRecord:
    """Linear scaling plus the per-order near-identity maps of one side.

    ``orders`` holds ``(degree, g1, g2)`` in the order the maps were applied.
    """

    def __init__(self, side, q1, q2, table, weights, order_cap, orders=()):
        self.side = side
        self.q1 = rat(q1)
        self.q2 = rat(q2)
        self.table = table
        self.weights = weights
        self.order_cap = order_cap
        self.orders = list(orders)

    def coefficient(self, component, i, j):
        """Coefficient of ``x^i y^j`` in the first (``"p"``) or second
        (``"q"``) component of the near-identity part, summed over orders."""
        acc = MultiPoly.zero(self.table)
        for _, g1, g2 in self.orders:
            g = g1 if component == "p" else g2
            acc = acc + g.coeff_xy(i, j)
        return acc

    def boundary_restriction(self):
        """``(Phi(u, 0), Psi(u, 0))`` of the composed near-identity maps.

        Both linear scalings fix the x-axis pointwise, so only the nonlinear
        part matters.  Truncated at degree ``order_cap``.
        """
        tab = self.table
        x = MultiPoly.var(tab, "x")
        y = MultiPoly.var(tab, "y")
        phi = x
        psi = MultiPoly.zero(tab)
        for _, g1, g2 in self.orders:
            c1 = g1.subs({"y": 0})
            psi = psi + g2.subs({"y": 0})
            # old = phi(new); new = u + c1(u) on y = 0
            phi = subs_xy_truncated(phi, x + c1, y, 1, 1, self.order_cap)
        return phi, psi

    def to_dict(self):
        return {
            "side": self.side,
            "q1": str(self.q1),
            "q2": str(self.q2),
            "orders": [
                {"degree": d, "g1": g1.to_text(), "g2": g2.to_text()} for d, g1, g2 in self.orders
            ],
        }


def near_identity_conjugate(P, Q, g1, g2, wx, wy, cap1, cap2):
    """Pull back the field ``(P, Q)`` through ``u -> u + g(u)``.

    Returns ``(I + Dg)^{-1} (P, Q)(u + g)`` truncated to weighted degrees
    ``cap1``, ``cap2`` of the two components.  The inverse comes from the
    fixed point of ``w = v - Dg w``, which stabilizes after finitely many
    rounds because ``Dg`` raises the weighted degree.
    """
    x = MultiPoly.var(P.table, "x")
    y = MultiPoly.var(P.table, "y")
    v1 = subs_xy_truncated(P, x + g1, y + g2, wx, wy, cap1)
    v2 = subs_xy_truncated(Q, x + g1, y + g2, wx, wy, cap2)
    d11 = g1.partial_derivative("x")
    d12 = g1.partial_derivative("y")
    d21 = g2.partial_derivative("x")
    d22 = g2.partial_derivative("y")
    w1, w2 = v1, v2
    for _ in range(cap1 + cap2 + 2):
        n1 = v1 - d11.mul_truncated(w1, wx, wy, cap1) - d12.mul_truncated(w2, wx, wy, cap1)
        n2 = v2 - d21.mul_truncated(w1, wx, wy, cap2) - d22.mul_truncated(w2, wx, wy, cap2)
        if n1 == w1 and n2 == w2:
            return w1, w2
        w1, w2 = n1, n2
    raise PwsnfError("near-identity inversion did not stabilize")


def _linear_entry(f: MultiPoly, i, j, what):
    c = f.coeff_xy(i, j)
    if not c.is_constant():
        raise PreconditionError(
            f"symbolic linear part ({what} = {c.to_text()}); give its value with --set")
    return c.constant_value()


def to_rotation_form(X: MultiPoly, Y: MultiPoly):
    """Linear normalization ``x = X + q2 Y``, ``y = q1 Y``.

    Returns ``(alpha, beta, q1, q2, X', Y')``.
    """
    a = _linear_entry(X, 1, 0, "a")
    b = _linear_entry(X, 0, 1, "b")
    c = _linear_entry(Y, 1, 0, "c")
    d = _linear_entry(Y, 0, 1, "d")
    if not (X.coeff_xy(0, 0).is_zero() and Y.coeff_xy(0, 0).is_zero()):
        raise PreconditionError("the origin is not an equilibrium of this side")
    alpha = (a + d) / 2
    beta2 = a * d - b * c - alpha * alpha
    if beta2 <= 0:
        raise PreconditionError("linear part does not have complex eigenvalues")
    from .sysmodel import _rational_sqrt
    beta = _rational_sqrt(beta2)
    if beta is None:
        raise PreconditionError(
            f"irrational rotation rate (beta^2 = {beta2}): pre-scale the system")
    if c == 0:
        raise PreconditionError("lower-left linear entry vanishes; a preliminary rotation is needed")
    q1 = c / beta
    q2 = (a - alpha) / beta
    tab = X.table
    xn = MultiPoly.var(tab, "x")
    yn = MultiPoly.var(tab, "y")
    sub = {"x": xn + yn * q2, "y": yn * q1}
    Xo = X.subs(sub)
    Yo = Y.subs(sub)
    Xr = Xo - Yo * (q2 / q1)
    Yr = Yo / q1
    lin = (Xr.coeff_xy(1, 0), Xr.coeff_xy(0, 1), Yr.coeff_xy(1, 0), Yr.coeff_xy(0, 1))
    if lin != (alpha, -beta, beta, alpha):
        raise PwsnfError("linear normalization failed to reach rotation form")
    return alpha, beta, q1, q2, Xr, Yr


class FocusNF:
    """Normal-form data of a focus side.

    ``gamma``, ``nu``, ``eta``, ``T`` and ``free_constants`` are dicts keyed
    by their index (``gamma[1] = alpha/beta``).
    """

    def __init__(self, alpha, beta, gamma, nu, eta, T, transform, free_constants, N, side="upper"):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.nu = nu
        self.eta = eta
        self.T = T
        self.transform = transform
        self.free_constants = free_constants
        self.N = N
        self.side = side

    def gamma_list(self):
        return [self.gamma[k] for k in range(1, self.N + 2)]

    def to_dict(self):
        return {
            "side": self.side,
            "alpha": str(self.alpha),
            "beta": str(self.beta),
            "gamma": {str(k): v.to_text() for k, v in sorted(self.gamma.items())},
            "nu": {str(k): v.to_text() for k, v in sorted(self.nu.items())},
            "eta": {str(k): v.to_text() for k, v in sorted(self.eta.items())},
            "T": {str(k): v.to_text() for k, v in sorted(self.T.items())},
        }


def _const(tab, c):
    return c if isinstance(c, MultiPoly) else MultiPoly.const(tab, c)


def reduce_focus(X: MultiPoly, Y: MultiPoly, N: int, free_constants=None):
    """Order-by-order reduction of a field in rotation form.

    ``free_constants`` maps ``k`` to ``C_k`` (the coefficient of ``x^k`` in
    the first component of the degree-k map); missing entries are zero.
    Returns ``(nu, eta, X_nf, Y_nf, orders)``.

    Only the rationals ``beta`` and ``m^2 alpha^2 + (m+2)^2 beta^2`` are
    ever divided by; both are nonzero because ``beta > 0``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    tab = X.table
    alpha = X.coeff_xy(1, 0).constant_value()
    beta = Y.coeff_xy(1, 0).constant_value()
    if (X.coeff_xy(0, 1) != -beta or Y.coeff_xy(0, 1) != alpha or beta <= 0):
        raise PreconditionError("field is not in rotation form")
    zero = MultiPoly.zero(tab)
    cap = N + 1
    P = X.truncate(1, 1, cap)
    Q = Y.truncate(1, 1, cap)
    consts = free_constants or {}
    nu, eta, orders = {}, {}, []
    for m in range(1, N + 1):
        A = P.xy_coefficients()
        B = Q.xy_coefficients()

        def a(i, j):
            return A.get((i, j), zero) if i + j == m + 1 else zero

        def b(i, j):
            return B.get((i, j), zero) if i + j == m + 1 else zero

        C = _const(tab, consts.get(m + 1, 0))
        p: dict = {(m + 1, 0): C}
        q: dict = {}

        def pv(i, j):
            return p.get((i, j), zero)

        def qv(i, j):
            return q.get((i, j), zero)

        p[(m, 1)] = a(m + 1, 0) / beta - C * (m * alpha / beta)
        q[(m, 1)] = b(m + 1, 0) / beta + C
        for k in range(1, m):
            i = m - k
            sg = 1 if k > 1 else 0
            p[(i, k + 1)] = (a(i + 1, k) + pv(i + 2, k - 1) * ((i + 2) * beta)
                             - pv(i + 1, k) * (m * alpha) - qv(i + 1, k) * beta) / ((k + 1) * beta)
            q[(i, k + 1)] = (b(i + 1, k) + qv(i + 2, k - 1) * (sg * (i + 2) * beta)
                             - qv(i + 1, k) * (m * alpha) + pv(i + 1, k) * beta) / ((k + 1) * beta)
        up1 = a(1, m) - b(0, m + 1) + (pv(2, m - 1) - qv(1, m)) * (2 * beta) - pv(1, m) * (m * alpha)
        up2 = a(0, m + 1) + b(1, m) + (pv(1, m) + qv(2, m - 1)) * (2 * beta) - qv(1, m) * (m * alpha)
        D = m * m * alpha * alpha + (m + 2) ** 2 * beta * beta
        p0 = (up1 * ((m + 2) * beta) + up2 * (m * alpha)) / D
        q0 = (up2 * ((m + 2) * beta) - up1 * (m * alpha)) / D
        p[(0, m + 1)] = p0
        q[(0, m + 1)] = q0
        nu_m = q0 * (-m * alpha) + p0 * beta + qv(1, m) * beta + b(0, m + 1)
        eta_m = p0 * (m * alpha) + q0 * beta - pv(1, m) * beta - a(0, m + 1)
        g1 = MultiPoly.from_xy(tab, {ij: c for ij, c in p.items()})
        g2 = MultiPoly.from_xy(tab, {ij: c for ij, c in q.items()})
        P, Q = near_identity_conjugate(P, Q, g1, g2, 1, 1, cap, cap)
        # the degree-(m+1) part must now be resonant only
        want1 = MultiPoly.from_xy(tab, {(1, m): nu_m, (0, m + 1): -eta_m})
        want2 = MultiPoly.from_xy(tab, {(1, m): eta_m, (0, m + 1): nu_m})
        got1 = _homogeneous(P, m + 1)
        got2 = _homogeneous(Q, m + 1)
        if got1 != want1 or got2 != want2:
            raise PwsnfError(f"focus reduction left non-resonant terms at degree {m + 1}")
        nu[m + 1] = nu_m
        eta[m + 1] = eta_m
        orders.append((m + 1, g1, g2))
    return nu, eta, P, Q, orders


def _homogeneous(f: MultiPoly, d: int) -> MultiPoly:
    return MultiPoly.from_xy(f.table, {ij: c for ij, c in f.xy_coefficients().items() if sum(ij) == d})


def time_rescale_focus(alpha, beta, nu, eta, N, table):
    """``gamma_1..gamma_{N+1}`` and ``T_1..T_N`` from ``nu``, ``eta``."""
    alpha, beta = rat(alpha), rat(beta)
    zero = MultiPoly.zero(table)
    T: dict = {}
    gamma = {1: MultiPoly.const(table, alpha / beta)}
    for k in range(1, N + 1):
        s_eta = zero
        s_nu = zero
        for i in range(1, k):
            s_eta = s_eta + T[k - i] * eta[i + 1]
            s_nu = s_nu + T[k - i] * nu[i + 1]
        T[k] = (eta[k + 1] - s_eta) / beta
        gamma[k + 1] = (nu[k + 1] - s_nu - T[k] * alpha) / beta
    return gamma, T


def flip_field(X: MultiPoly, Y: MultiPoly):
    """``(x, y, t) -> (x, -y, -t)`` applied to one field."""
    yv = MultiPoly.var(X.table, "y")
    return -X.subs({"y": -yv}), Y.subs({"y": -yv})


def focus_normal_form(X, Y, N, free_constants=None, side="upper"):
    """Full upper-convention pipeline for one focus field."""
    alpha, beta, q1, q2, Xr, Yr = to_rotation_form(X, Y)
    nu, eta, _, _, orders = reduce_focus(Xr, Yr, N, free_constants)
    gamma, T = time_rescale_focus(alpha, beta, nu, eta, N, X.table)
    rec = TransformRecord(side, q1, q2, X.table, (1, 1), N + 1, orders)
    consts = {k: _const(X.table, (free_constants or {}).get(k, 0)) for k in range(2, N + 2)}
    return FocusNF(alpha, beta, gamma, nu, eta, T, rec, consts, N, side)


def reduce_upper_focus(X, Y, N, free_constants=None):
    return focus_normal_form(X, Y, N, free_constants, "upper")


def reduce_lower_focus(X, Y, N, free_constants=None):
    """Lower focus in the two-sided convention.

    The lower field is flipped to the upper half plane, reduced there, and
    the coefficients are mapped back with ``gamma^-_k = (-1)^k gamma~_k``.
    """
    Xf, Yf = flip_field(X, Y)
    nf = focus_normal_form(Xf, Yf, N, free_constants, "lower")
    nf.gamma = {k: v if k % 2 == 0 else -v for k, v in nf.gamma.items()}
    return nf


def recompose_rescaled(alpha, beta, nu, eta, T, N, table):
    """Coefficients of the time-rescaled normal form, for verification.

    Multiplies the truncated normal form by ``(1 - sum T_k y^k)/beta`` and
    returns ``(gamma~, eta~)`` dicts read off its ``x y^k`` coefficients.
    """
    x = MultiPoly.var(table, "x")
    y = MultiPoly.var(table, "y")
    X = x * alpha - y * beta
    Y = x * beta + y * alpha
    for k in range(1, N + 1):
        yk = y ** k
        X = X + yk * (x * nu[k + 1] - y * eta[k + 1])
        Y = Y + yk * (x * eta[k + 1] + y * nu[k + 1])
    s = MultiPoly.const(table, 1)
    for k in range(1, N + 1):
        s = s - y ** k * T[k]
    s = s / rat(beta)
    Xs = X.mul_truncated(s, 1, 1, N + 1)
    Ys = Y.mul_truncated(s, 1, 1, N + 1)
    gam = {k + 1: Ys.coeff_xy(0, k + 1) for k in range(0, N + 1)}
    et = {k + 1: Ys.coeff_xy(1, k) for k in range(1, N + 1)}
    return gam, et, Xs
