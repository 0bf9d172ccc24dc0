"""Numeric half return maps and displacement fits.

Orbits are integrated with a high-order Taylor series method: for a
polynomial field the Taylor coefficients of the solution follow from a
simple power-series recurrence, and the truncated series doubles as dense
output for locating the return to ``y = 0``.  Every computation runs in its
own ``mpmath`` context, so grid points can be processed in parallel threads.
"""

from __future__ import annotations

import csv
import math
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor

import mpmath

from .errors import OracleError, PreconditionError, ResourceBudgetError
from .sysmodel import classify

DEFAULT_PREC = 128
DEFAULT_ORDER = 24
DEFAULT_RADIUS = 0.5
DEFAULT_STEPS = 20000


class _Field:
    """A numeric polynomial field as monomial lists."""

    def __init__(self, X, Y, ctx):
        self.ctx = ctx
        self.X = self._terms(X)
        self.Y = self._terms(Y)
        self.maxi = max([i for i, _, _ in self.X + self.Y] + [0])
        self.maxj = max([j for _, j, _ in self.X + self.Y] + [0])

    def _terms(self, f):
        out = []
        for (i, j), c in f.xy_coefficients().items():
            if not c.is_constant():
                raise PreconditionError("oracle needs a fully numeric system; use --set")
            v = c.constant_value()
            out.append((i, j, self.ctx.mpf(v.numerator) / v.denominator))
        return out

    def taylor(self, x0, y0, K, sign):
        """Taylor coefficients of the solution through ``(x0, y0)`` for the
        field multiplied by ``sign``."""
        mpf = self.ctx.mpf
        xs, ys = [x0], [y0]
        px = [[mpf(1)], [x0]]
        py = [[mpf(1)], [y0]]
        for i in range(2, self.maxi + 1):
            px.append([px[-1][0] * x0])
        for j in range(2, self.maxj + 1):
            py.append([py[-1][0] * y0])
        for k in range(K):
            # coefficient k of every monomial
            dx = mpf(0)
            dy = mpf(0)
            for i, j, c in self.X:
                dx += c * _conv(px[i], py[j], k)
            for i, j, c in self.Y:
                dy += c * _conv(px[i], py[j], k)
            xs.append(sign * dx / (k + 1))
            ys.append(sign * dy / (k + 1))
            # extend powers to coefficient k + 1
            n = k + 1
            px[0].append(mpf(0))
            py[0].append(mpf(0))
            if len(px) > 1:
                px[1].append(xs[n])
            if len(py) > 1:
                py[1].append(ys[n])
            for i in range(2, self.maxi + 1):
                px[i].append(_conv(px[i - 1], xs, n))
            for j in range(2, self.maxj + 1):
                py[j].append(_conv(py[j - 1], ys, n))
        return xs, ys


def _conv(a, b, k):
    s = 0
    for l in range(k + 1):
        s += a[l] * b[k - l]
    return s


def _horner(cs, t):
    acc = cs[-1]
    for c in reversed(cs[:-1]):
        acc = acc * t + c
    return acc


class OrbitResult:
    def __init__(self, exit_x, steps, error_estimate, event_residual):
        self.exit_x = exit_x
        self.steps = steps
        self.error_estimate = error_estimate
        self.event_residual = event_residual

    def to_dict(self):
        return {"exit_x": mpmath.nstr(self.exit_x, 30), "steps": self.steps,
                "error_estimate": mpmath.nstr(self.error_estimate, 5),
                "event_residual": mpmath.nstr(self.event_residual, 5)}


def _integrate_to_axis(field, x0, want_positive_y, sign, ctx, order, radius, max_steps):
    """Follow the orbit from ``(x0, 0)`` until it hits ``y = 0`` again."""
    mpf = ctx.mpf
    tol = mpf(2) ** (-(ctx.prec + 8))
    x, y = mpf(x0), mpf(0)
    total_err = mpf(0)
    # the starting point is on the axis; the orbit must leave to the right side
    for step in range(1, max_steps + 1):
        xs, ys = field.taylor(x, y, order, sign)
        scale = max(abs(x), abs(y), mpf(x0))
        tail = max(abs(xs[-1]), abs(ys[-1]), abs(xs[-2]) ** 1, abs(ys[-2]))
        if tail == 0:
            h = mpf(radius)
        else:
            h = (tol * scale / tail) ** (mpf(1) / (order - 1))
        speed = max(abs(xs[1]), abs(ys[1]))
        if speed > 0:
            # never move more than a fraction of the current distance to the origin
            h = min(h, scale / (4 * speed))
        h = min(h, mpf(radius))
        # dense output: look for the first sign change of y within the step
        samples = 16
        prev_t = mpf(0)
        prev_y = y
        hit = None
        for s in range(1, samples + 1):
            t = h * s / samples
            yt = _horner(ys, t)
            if step == 1 and s == 1 and prev_y == 0:
                # leaving the axis: the first sample must be on the correct side
                if (yt > 0) != want_positive_y:
                    raise OracleError("orbit leaves the switching line on the wrong side")
            if prev_y != 0 and ((yt > 0) != (prev_y > 0) or yt == 0):
                hit = (prev_t, t)
                break
            prev_t, prev_y = t, yt
        if hit is not None:
            a, b = hit
            ya = _horner(ys, a)
            dys = [ys[k] * k for k in range(1, len(ys))]
            tt = (a + b) / 2
            for _ in range(ctx.prec):
                fm = _horner(ys, tt)
                if fm == 0:
                    break
                if (fm > 0) == (ya > 0):
                    a, ya = tt, fm
                else:
                    b = tt
                d = _horner(dys, tt)
                nt = tt - fm / d if d != 0 else (a + b) / 2
                if not (a < nt < b):
                    nt = (a + b) / 2
                if abs(nt - tt) <= tol * max(abs(tt), mpf(1e-300)):
                    tt = nt
                    break
                tt = nt
            xe = _horner(xs, tt)
            ye = _horner(ys, tt)
            total_err += abs(xs[-1]) * tt ** order
            return OrbitResult(xe, step, total_err, abs(ye))
        total_err += max(abs(xs[-1]), abs(ys[-1])) * h ** order
        x = _horner(xs, h)
        y = _horner(ys, h)
        if (y > 0) != want_positive_y and y != 0:
            raise OracleError("missed the switching line crossing")
        if abs(x) > radius or abs(y) > radius:
            raise OracleError("trajectory escaped the neighborhood; the point may not be "
                              "monodromic or x0 is too large")
    raise ResourceBudgetError(f"step budget of {max_steps} exhausted")


def half_return(system, x0, side="upper", prec=DEFAULT_PREC, order=DEFAULT_ORDER,
                radius=DEFAULT_RADIUS, max_steps=DEFAULT_STEPS, normalized=False) -> OrbitResult:
    """``Pi^+(x0)`` (``side="upper"``) or ``(Pi^-)^{-1}(x0)`` (``"lower-inverse"``).

    The system is first orientation-normalized unless ``normalized`` is set.
    """
    if not normalized:
        bc = classify(system)
        if not bc.monodromic:
            raise PreconditionError(f"origin is not monodromic: {bc.reason}")
        system = bc.system
    ctx = mpmath.MPContext()
    ctx.prec = prec
    x0 = ctx.mpf(x0) if not isinstance(x0, Fraction) else ctx.mpf(x0.numerator) / x0.denominator
    if not (0 < x0 < radius):
        raise OracleError(f"x0 = {x0} escapes the neighborhood (0, {radius}) of the origin")
    if side == "upper":
        field = _Field(*system.upper, ctx)
        return _integrate_to_axis(field, x0, True, 1, ctx, order, radius, max_steps)
    if side in ("lower-inverse", "lower"):
        field = _Field(*system.lower, ctx)
        return _integrate_to_axis(field, x0, False, -1, ctx, order, radius, max_steps)
    raise ValueError(f"unknown side {side!r}")


def displacement(system, x0, prec=DEFAULT_PREC, **kw):
    """``Delta(x0) = (Pi^-)^{-1}(x0) - Pi^+(x0)`` on a normalized system."""
    up = half_return(system, x0, "upper", prec, normalized=True, **kw)
    lo = half_return(system, x0, "lower-inverse", prec, normalized=True, **kw)
    return lo.exit_x - up.exit_x, up, lo


class DisplacementFit:
    def __init__(self, samples, order, coefficient, uncertainty, residual, center_consistent,
                 noise_floor):
        self.samples = samples
        self.order = order
        self.coefficient = coefficient
        self.uncertainty = uncertainty
        self.residual = residual
        self.center_consistent = center_consistent
        self.noise_floor = noise_floor

    def to_dict(self):
        out = {"center_consistent": self.center_consistent,
               "samples": [[mpmath.nstr(x, 20), mpmath.nstr(d, 20)] for x, d in self.samples]}
        if not self.center_consistent:
            out.update({"order": self.order, "coefficient": mpmath.nstr(self.coefficient, 12),
                        "uncertainty": mpmath.nstr(self.uncertainty, 3),
                        "residual": mpmath.nstr(self.residual, 3)})
        return out

    def write_csv(self, path):
        write_samples_csv(self.samples, path)


def write_samples_csv(samples, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "delta"])
        for x, d in samples:
            w.writerow([mpmath.nstr(x, 30), mpmath.nstr(d, 30)])


def fit_displacement(system, xmax=1e-2, rho=0.7, count=10, prec=DEFAULT_PREC, workers=4,
                     **kw) -> DisplacementFit:
    """Sample ``Delta`` on ``x_i = xmax * rho^i`` and fit ``V_m x^m``."""
    if not (0 < rho < 1):
        raise ValueError("rho must lie in (0, 1)")
    if count < 8:
        raise ValueError("at least 8 grid points are needed")
    bc = classify(system)
    if not bc.monodromic:
        raise PreconditionError(f"origin is not monodromic: {bc.reason}")
    S = bc.system
    xs = [mpmath.mpf(xmax) * mpmath.mpf(rho) ** i for i in range(count)]

    def one(x):
        d, _, _ = displacement(S, x, prec, **kw)
        return mpmath.mpf(d)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        deltas = list(pool.map(one, xs))
    samples = list(zip(xs, deltas))
    floor_rel = mpmath.mpf(2) ** (-(prec // 2))
    if all(abs(d) <= floor_rel * x for x, d in samples):
        return DisplacementFit(samples, None, None, None, None, True, floor_rel)
    pts = [(math.log(float(x)), math.log(abs(float(d)))) for x, d in samples if d != 0]
    n = len(pts)
    mx = sum(p[0] for p in pts) / n
    my = sum(p[1] for p in pts) / n
    sxx = sum((p[0] - mx) ** 2 for p in pts)
    slope = sum((p[0] - mx) * (p[1] - my) for p in pts) / sxx
    m = round(slope)
    if abs(slope - m) > 0.1 or m < 1:
        raise OracleError(f"order ambiguous (log-log slope {slope:.3f}): refine grid or raise precision")
    resid = max(abs(p[1] - (my + slope * (p[0] - mx))) for p in pts)
    # Richardson: q(x) = V + a x + b x^2 + ... on a geometric grid
    q = [d / x ** m for x, d in samples]
    levels = [q]
    r = mpmath.mpf(rho)
    for j in range(1, 4):
        prev = levels[-1]
        fac = r ** j
        levels.append([(prev[i + 1] - fac * prev[i]) / (1 - fac) for i in range(len(prev) - 1)])
    best = levels[-1][-1]
    unc = abs(levels[-1][-1] - levels[-2][-1])
    return DisplacementFit(samples, m, best, unc, resid, False, floor_rel)
