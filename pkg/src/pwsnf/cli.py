"""Command line front end: ``pwsnf <command> system.toml [options]``.

Exit codes: 0 success, 1 verified mismatch, 2 input or precondition error,
3 resource budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
import mpmath

from .errors import InputError, OracleError, PreconditionError, PwsnfError, ResourceBudgetError
from .exactnum import ext_value, rat
from .lyapunov import analyze, possible_orders, subsystem_order
from .oracle import DEFAULT_PREC, DEFAULT_STEPS, fit_displacement
from .polyring import DEFAULT_BUDGET
from .sysmodel import classify, load_system

COMMANDS = ("classify", "normal-form", "lyapunov", "order", "center-check",
            "possible-orders", "oracle", "crosscheck")

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class RunConfig:
    def __init__(self, path, command, N=6, values=None, fmt="text", grid=(1e-2, 0.7, 10),
                 precision=DEFAULT_PREC, budget=None, csv_path=None):
        if N < 1:
            raise InputError("-N must be at least 1")
        self.path = path
        self.command = command
        self.N = N
        self.values = dict(values or {})
        self.fmt = fmt
        self.grid = grid
        self.precision = precision
        self.budget = budget
        self.csv_path = csv_path


def _parse_set(items):
    values = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"--set expects name=value, got {item!r}")
        name, _, text = item.partition("=")
        try:
            values[name.strip()] = rat(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"--set {name}: {text!r} is not a rational number") from exc
    return values


def _parse_grid(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError("--grid expects xmax,rho,count")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad --grid value {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="pwsnf", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("system", help="TOML file with [params], [upper] and [lower]")
    p.add_argument("-N", type=int, default=6, help="truncation order (default 6)")
    p.add_argument("--set", nargs="+", default=[], metavar="NAME=VALUE",
                   help="fix parameters to rational values")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--grid", default="1e-2,0.7,10", help="oracle grid xmax,rho,count")
    p.add_argument("--precision", type=int, default=DEFAULT_PREC, help="oracle precision in bits")
    p.add_argument("--budget", type=int, default=None,
                   help="step budget for ideal reductions and orbit integration")
    p.add_argument("--csv", default=None, help="oracle: write the samples to this CSV file")
    return p


# ---------------------------------------------------------------------------
# Commands; each returns (payload dict, text lines, exit code)


def _load(cfg):
    return load_system(cfg.path, cfg.values)


def _budget(cfg):
    return cfg.budget if cfg.budget is not None else DEFAULT_BUDGET


def cmd_classify(cfg):
    bc = classify(_load(cfg))
    d = bc.to_dict()
    lines = [f"kind: {bc.kind}"]
    if bc.reason:
        lines.append(f"reason: {bc.reason}")
    for side in ("upper", "lower"):
        if side in d:
            info = d[side]
            rest = ", ".join(f"{k}={v}" for k, v in info.items() if k != "kind")
            lines.append(f"{side}: {info['kind']} ({rest})")
    lines.append("orientation_record: " + (", ".join(d["orientation_record"]) or "none"))
    return d, lines, EXIT_OK


def _analysis(cfg):
    return analyze(_load(cfg), cfg.N, budget=_budget(cfg))


def cmd_normal_form(cfg):
    an = _analysis(cfg)
    d = {"kind": an.kind, "N": cfg.N, "upper": an.upper.to_dict(), "lower": an.lower.to_dict(),
         "transform_upper": an.upper.transform.to_dict(),
         "transform_lower": an.lower.transform.to_dict(),
         "gluing": an.gluing.to_dict(),
         "orientation_record": list(an.classification.orientation_record)}
    lines = [f"kind: {an.kind}, N = {cfg.N}"]
    for side in ("upper", "lower"):
        for name, coeffs in d[side].items():
            if isinstance(coeffs, dict):
                for k, v in coeffs.items():
                    lines.append(f"{side} {name}_{k} = {v}")
            elif name != "side":
                lines.append(f"{side} {name} = {coeffs}")
    lines.append(f"gluing consistent: {bool(an.gluing)}")
    lines.append("orientation_record: " + (", ".join(d["orientation_record"]) or "none"))
    return d, lines, EXIT_OK


def _sequence_payload(an):
    seq = an.sequence
    first = seq.first_nonzero()
    entries = []
    lines = []
    for k in sorted(seq.entries):
        e = seq.entries[k]
        item = {"k": k, "factor": e.factor.text(), "L": e.L.to_text(),
                "reduced": e.reduced.to_text(), "first_nonzero": k == first}
        exact = e.factor.exact()
        text = f"L_{k} = {e.reduced.to_text()}   [{e.factor.text()}]"
        if exact is not None and set(exact.terms) <= {(0, 0)}:
            # rational factor: show V_k itself
            item["V"] = (e.reduced * exact.coefficient(0, 0)).to_text()
            text = f"V_{k} = {item['V']}   (L_{k} = {e.reduced.to_text()}, {e.factor.text()})"
        entries.append(item)
        flag = "   <- first nonzero" if k == first else ""
        lines.append(text + flag)
    return entries, lines


def cmd_lyapunov(cfg):
    an = _analysis(cfg)
    entries, lines = _sequence_payload(an)
    order = an.order()
    d = {"kind": an.kind, "N": cfg.N, "entries": entries, "order": order.to_dict(),
         "orientation_record": list(an.classification.orientation_record)}
    lines.append(f"order: {order.text()}")
    lines.append("orientation_record: " + (", ".join(d["orientation_record"]) or "none"))
    return d, lines, EXIT_OK


def cmd_order(cfg):
    an = _analysis(cfg)
    order = an.order()
    d = {"kind": an.kind, "N": cfg.N, "order": order.to_dict(),
         "orientation_record": list(an.classification.orientation_record)}
    return d, [order.text()], EXIT_OK


def cmd_center_check(cfg):
    an = _analysis(cfg)
    order = an.order()
    trunc = an.truncation_check()
    d = {"kind": an.kind, "N": cfg.N, "order": order.to_dict(), "truncation": trunc.to_dict(),
         "orientation_record": list(an.classification.orientation_record)}
    lines = [order.text(),
             "truncated normal form is a center" if trunc else
             f"truncated normal form is not a center (first violation at index {trunc.witness})"]
    return d, lines, EXIT_OK


def cmd_possible_orders(cfg):
    an = _analysis(cfg)
    if an.kind == "PP":
        raise PreconditionError("possible-orders applies to FF and FP points only")
    S = an.classification.system
    sp = subsystem_order(*S.upper, cfg.N, budget=_budget(cfg))
    sm = subsystem_order(*S.lower, cfg.N, budget=_budget(cfg)) if an.kind == "FF" else None
    allowed = possible_orders(sp, sm, an.kind)
    order = an.order()
    member = order in allowed if order.kind != "parametric" else None
    d = {"kind": an.kind, "N": cfg.N, "upper_order": sp.to_dict(),
         "lower_order": None if sm is None else sm.to_dict(),
         "possible": allowed.to_dict(), "order": order.to_dict(), "member": member,
         "orientation_record": list(an.classification.orientation_record)}
    lines = [f"upper subsystem: {sp.text()}"]
    if sm is not None:
        lines.append(f"lower subsystem: {sm.text()}")
    lines.append(f"possible orders: {allowed.text()}")
    lines.append(f"order: {order.text()}" + ("" if member is None else f" (member: {member})"))
    code = EXIT_MISMATCH if member is False else EXIT_OK
    return d, lines, code


def _symbolic_leading(an):
    """``(m, exact text, numeric value)`` of the first nonzero ``V_m``, or ``None``."""
    seq = an.sequence
    for k in sorted(seq.entries):
        e = seq.entries[k]
        if e.L.is_zero():
            continue
        if not e.L.is_constant():
            raise PreconditionError("oracle needs a fully numeric system; use --set")
        L = e.L.constant_value()
        exact = e.factor.exact()
        if exact is None:
            return k, *_first_constant(an)
        V = exact * L
        text = str(V.coefficient(0, 0)) if set(V.terms) <= {(0, 0)} else V.to_text()
        return k, text, ext_value(V, 30)
    return None


def _first_constant(an):
    """``V_1`` from the linear parts: ``exp(pi a+/b+) - exp(-pi a-/b-)``."""
    bc = an.classification

    def rate(info):
        return mpmath.pi * mpmath.mpf(info.alpha.numerator) / info.alpha.denominator \
            * info.beta.denominator / info.beta.numerator

    up = rate(bc.upper)
    if an.kind == "FF":
        lo = rate(bc.lower)
        return f"exp({bc.upper.alpha / bc.upper.beta}*pi) - exp({-bc.lower.alpha / bc.lower.beta}*pi)", \
            mpmath.exp(up) - mpmath.exp(-lo)
    return f"exp({bc.upper.alpha / bc.upper.beta}*pi) - 1", mpmath.exp(up) - 1


def _short(v):
    return mpmath.nstr(v, 4, strip_zeros=False) if v is not None else "n/a"


def cmd_oracle(cfg):
    system = _load(cfg)
    if not system.is_numeric():
        raise PreconditionError("oracle needs a fully numeric system; use --set")
    an = analyze(system, cfg.N, budget=_budget(cfg))
    xmax, rho, count = cfg.grid
    steps = cfg.budget if cfg.budget is not None else DEFAULT_STEPS
    fit = fit_displacement(system, xmax, rho, count, prec=cfg.precision, max_steps=steps)
    if cfg.csv_path:
        fit.write_csv(cfg.csv_path)
    sym = _symbolic_leading(an)
    d = {"kind": an.kind, "N": cfg.N, "fit": fit.to_dict(),
         "orientation_record": list(an.classification.orientation_record)}
    if fit.center_consistent:
        ok = sym is None
        d["symbolic"] = None if sym is None else {"m": sym[0], "V": sym[1]}
        verdict = "OK" if ok else "MISMATCH"
        line = "center-consistent" + ("" if sym is None else f", symbolic m={sym[0]} V={sym[1]}")
    else:
        if sym is None:
            ok = False
            sym_text = f"center up to order {cfg.N}"
        else:
            m, sym_text, val = sym
            if m != fit.order:
                ok = False
            else:
                tol = max(abs(val) * mpmath.mpf("0.02"), 10 * fit.uncertainty)
                ok = abs(fit.coefficient - val) <= tol
        verdict = "OK" if ok else "MISMATCH"
        d["symbolic"] = None if sym is None else {"m": sym[0], "V": sym[1]}
        line = f"m={fit.order}, V={_short(fit.coefficient)}, symbolic={sym_text}"
    d["verdict"] = verdict
    line += f", verdict={verdict}"
    return d, [line], EXIT_OK if verdict == "OK" else EXIT_MISMATCH


def cmd_crosscheck(cfg):
    from .lyapunov import crosscheck_theorem12

    an = _analysis(cfg)
    rep = crosscheck_theorem12(an, budget=_budget(cfg))
    d = rep.to_dict()
    d["orientation_record"] = list(an.classification.orientation_record)
    lines = []
    for e in rep.entries:
        state = "vacuous" if e.vacuous else ("agree" if e.agree else "DISAGREE")
        lines.append(f"k={e.k}: {state}" + (f" ({e.detail})" if e.detail else ""))
    for note in rep.notes:
        lines.append(f"note: {note}")
    lines.append("crosscheck " + ("passed" if rep.ok else "FAILED"))
    return d, lines, EXIT_OK if rep.ok else EXIT_MISMATCH


_DISPATCH = {
    "classify": cmd_classify,
    "normal-form": cmd_normal_form,
    "lyapunov": cmd_lyapunov,
    "order": cmd_order,
    "center-check": cmd_center_check,
    "possible-orders": cmd_possible_orders,
    "oracle": cmd_oracle,
    "crosscheck": cmd_crosscheck,
}


def run(cfg, out=None):
    """Run one command; returns the exit code."""
    out = out or sys.stdout
    payload, lines, code = _DISPATCH[cfg.command](cfg)
    if cfg.fmt == "json":
        out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        out.write("\n".join(lines) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.system, args.command, args.N, _parse_set(args.set), args.format,
                        _parse_grid(args.grid), args.precision, args.budget, args.csv)
        return run(cfg)
    except ResourceBudgetError as exc:
        print(f"pwsnf: resource budget exhausted: {exc} (raise --budget or lower -N)", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, PreconditionError, OracleError) as exc:
        print(f"pwsnf: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PwsnfError as exc:
        print(f"pwsnf: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
