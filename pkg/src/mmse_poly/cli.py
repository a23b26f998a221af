"""Command-line front end: ``mmse-poly <subcommand> [options]``.

Exit status: 0 on success, 1 when a check or invariant fails (or a
computation is refused as numerically untrustworthy), 2 on usage errors.

In CSV mode the table goes to ``--out`` (or stdout); any accompanying
report is written as JSON next to it (``<out>.json``) or, without
``--out``, to stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import dist as D
from .approx import best_poly, rate_fit
from .channel import channel_view
from .derivs import closed_form_derivative, derivative_norm_bound, eval_gpoly, fd_derivative
from .errors import IllConditioned, InvalidArgument, NumericFailure, UsageError
from .freud import check_freud, mrs_bound, mrs_number, support_radius
from .partitions import C_r, e_lambda, enumerate_Pi, recurrence_coeffs
from .quadrature import QuadConfig
from .serialize import csv_text, dumps
from .verify import FAULTS, run_battery

log = logging.getLogger("mmse_poly")

FD_TOL = 1e-5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise UsageError(f"--grid expects lo:hi:steps, got {text!r}") from exc
    if not lo < hi or steps < 2:
        raise UsageError(f"--grid needs lo < hi and steps >= 2, got {text!r}")
    return np.linspace(lo, hi, steps)


def parse_int_list(text: str, flag: str, minimum: int = 0) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from exc
    if not values:
        raise UsageError(f"{flag} is empty")
    if any(v < minimum for v in values):
        raise UsageError(f"{flag} values must be >= {minimum}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"{flag} must be strictly increasing, got {text!r}")
    return values


def _common(parser, need_dist=True):
    if need_dist:
        parser.add_argument("--dist", required=True, help=f"preset ({', '.join(D.PRESETS)}) or JSON spec file")
        parser.add_argument("--moment-cap", type=int, default=None, help="largest moment order of X allowed")
    parser.add_argument("--precision", choices=("double", "extended"), default=None,
                        help="working precision (default: $MMSE_PRECISION or double)")
    parser.add_argument("--outer", choices=("composite", "hermite"), default="composite")
    parser.add_argument("--outer-order", type=int, default=None)
    parser.add_argument("--inner-order", type=int, default=200)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--quiet", action="store_true", help="suppress progress logging on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmse-poly", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate channel quantities on a grid")
    _common(p)
    p.add_argument("--what", choices=("f", "gk", "tweedie", "qprime", "py"), default="f")
    p.add_argument("--k", type=int, default=2, help="moment order for --what gk")
    p.add_argument("--grid", default="-5:5:101")

    p = sub.add_parser("deriv", help="evaluate f^(r-1) from its g-polynomial form")
    _common(p)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--grid", default="-2:2:5")
    p.add_argument("--check-fd", action="store_true", help="compare with finite differences of f")
    p.add_argument("--bound", action="store_true", help="report the L2 norm bound")
    p.add_argument("--use-beta", action="store_true", help="also report the refined-exponent variant")

    p = sub.add_parser("coeffs", help="exact coefficients e_lambda of f^(r-1)")
    _common(p, need_dist=False)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--check-recurrence", action="store_true")

    p = sub.add_parser("approx", help="best polynomial approximation of f")
    _common(p)
    p.add_argument("--n", default="4", help="degree or comma-separated strictly increasing degrees")
    p.add_argument("--method", choices=("ortho", "hankel"), default="ortho")
    p.add_argument("--rate", action="store_true", help="fit the log-log decay rate")

    p = sub.add_parser("freud", help="Freud-weight checks and MRS numbers")
    _common(p)
    p.add_argument("--check", action="store_true")
    p.add_argument("--mrs", default=None, help="comma-separated n values")
    p.add_argument("--grid", default="-10:10:201")

    p = sub.add_parser("verify", help="run the invariant battery")
    _common(p, need_dist=False)
    p.add_argument("--inject-fault", choices=FAULTS, action="append", default=[])
    return parser


def _config(args) -> QuadConfig:
    try:
        kwargs = dict(outer=args.outer, outer_order=args.outer_order, inner_order=args.inner_order)
        if args.precision:
            kwargs["precision"] = args.precision
        return QuadConfig(**kwargs)
    except InvalidArgument as exc:
        raise UsageError(str(exc)) from exc


def _dist(args) -> D.InputDist:
    dist = D.load(args.dist)
    if args.moment_cap is not None:
        if args.moment_cap < 2:
            raise UsageError("--moment-cap must be >= 2")
        dist = dataclasses.replace(dist, moment_cap=args.moment_cap)
    return dist


def _emit(args, default_format, payload, table=None, report=None):
    """Write ``payload`` (JSON mode) or ``table`` plus ``report`` (CSV mode)."""
    fmt = args.format or default_format
    if fmt == "csv" and table is None:
        raise UsageError(f"{args.command} has no CSV form; use --format json")
    if fmt == "json":
        text = dumps(payload)
        extra = None
    else:
        text = csv_text(*table)
        extra = dumps(report) if report is not None else None
    if args.out:
        args.out.write_text(text)
        log.info("wrote %s", args.out)
        if extra is not None:
            side = args.out.with_suffix(args.out.suffix + ".json")
            side.write_text(extra)
            log.info("wrote %s", side)
    else:
        sys.stdout.write(text)
        if extra is not None:
            sys.stderr.write(extra)


def _floats(values):
    return [float(v) for v in np.atleast_1d(values)]


def cmd_eval(args) -> int:
    dist, cfg, y = _dist(args), _config(args), parse_grid(args.grid)
    view = channel_view(dist, cfg)
    if args.what == "gk":
        if args.k < 0:
            raise UsageError("--k must be >= 0")
        values = view.cond_central_moment(y, args.k)
    else:
        values = {"f": view.cond_mean, "tweedie": view.tweedie, "qprime": view.q_prime,
                  "py": view.output_density}[args.what](y)
    values = _floats(values)
    rows = list(zip(_floats(y), values))
    payload = {"dist": str(dist), "what": args.what, "k": args.k if args.what == "gk" else None,
               "rows": [{"y": a, "value": b} for a, b in rows]}
    _emit(args, "csv", payload, (["y", "value"], rows))
    return 0


def cmd_deriv(args) -> int:
    if args.r < 2:
        raise UsageError("--r must be >= 2")
    dist, cfg, y = _dist(args), _config(args), parse_grid(args.grid)
    view = channel_view(dist, cfg)
    poly = closed_form_derivative(args.r)
    values = _floats(eval_gpoly(poly, view, y))
    header, rows = ["y", "value"], [[a, b] for a, b in zip(_floats(y), values)]
    status = 0
    if args.check_fd:
        header += ["fd", "abs_diff"]
        for row in rows:
            fd = float(fd_derivative(view, row[0], args.r - 1))
            row += [fd, abs(fd - row[1])]
        worst = max(row[3] for row in rows)
        if worst > FD_TOL:
            log.error("finite-difference disagreement %.3e exceeds %.0e", worst, FD_TOL)
            status = 1
    report = {"dist": str(dist), "r": args.r, "polynomial": str(poly)}
    if args.bound:
        bound = derivative_norm_bound(dist, args.r, use_beta=args.use_beta, cfg=cfg)
        report["bound"] = bound.as_dict()
        if not bound.holds:
            status = 1
    payload = dict(report, rows=[dict(zip(header, row)) for row in rows])
    _emit(args, "csv", payload, (header, rows), report)
    return status


def cmd_coeffs(args) -> int:
    if args.r < 2:
        raise UsageError("--r must be >= 2")
    terms = [{"lambda": list(lam), "e": str(e_lambda(lam))} for lam in enumerate_Pi(args.r)]
    payload = {"r": args.r, "terms": terms, "C_r": str(C_r(args.r))}
    status = 0
    if args.check_recurrence:
        rec = recurrence_coeffs(args.r)
        ok = all(rec[lam] == e_lambda(lam) for lam in enumerate_Pi(args.r)) \
            and C_r(args.r) == C_r(args.r, "sum-of-c")
        payload["recurrence_matches"] = ok
        status = 0 if ok else 1
    table = (["lambda", "e"], [[" ".join(map(str, t["lambda"])), t["e"]] for t in terms])
    _emit(args, "json", payload, table)
    return status


def cmd_approx(args) -> int:
    dist, cfg = _dist(args), _config(args)
    degrees = parse_int_list(args.n, "--n")
    method = "orthogonal" if args.method == "ortho" else "hankel"
    results, status = [], 0
    for n in degrees:
        try:
            res = best_poly(dist, n, method, cfg)
            results.append({"n": n, "coeffs": list(res.coeffs), "error": res.l2_error,
                            "condition_estimate": res.condition_estimate})
            log.info("n=%d error=%.6e", n, res.l2_error)
        except IllConditioned as exc:
            log.error("%s", exc)
            results.append({"n": n, "coeffs": None, "error": None, "failure": str(exc)})
            status = 1
    payload = {"dist": str(dist), "method": method, "precision": cfg.precision}
    if len(results) == 1:
        payload.update(results[0])
    else:
        payload["results"] = results
    if args.rate:
        fit = rate_fit(dist, degrees, cfg)
        payload.update(slope=fit.slope, noise_floor=fit.floor, excluded=list(fit.excluded), note=fit.note)
    table = (["n", "error"], [[r["n"], r["error"] if r["error"] is not None else "nan"] for r in results])
    _emit(args, "json", payload, table, {k: v for k, v in payload.items() if k not in ("results",)})
    return status


def cmd_freud(args) -> int:
    dist, cfg = _dist(args), _config(args)
    payload = {"dist": str(dist)}
    if args.check or args.mrs is None:
        payload["check"] = check_freud(dist, parse_grid(args.grid), cfg).as_dict()
    if args.mrs is not None:
        ns = parse_int_list(args.mrs, "--mrs", minimum=1)
        M = support_radius(dist) if dist.compact else None
        rows = []
        for n in ns:
            res = mrs_number(dist, n, cfg=cfg)
            rows.append(dict(res.as_dict(), bound=mrs_bound(M, n) if M is not None else None))
        payload["mrs"] = rows
    _emit(args, "json", payload)
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    results = run_battery(cfg, args.inject_fault, progress=lambda msg: log.info("checking %s", msg))
    failed = sum(not r.ok for r in results)
    if (args.format or "text") == "json":
        _emit(args, "json", {"passed": failed == 0, "faults": args.inject_fault,
                             "checks": [r.as_dict() for r in results]})
    else:
        width = max(len(r.module) + len(r.name) for r in results) + 3
        lines = [f"{'PASS' if r.ok else 'FAIL'}  {(r.module + ': ' + r.name).ljust(width)} {r.detail}"
                 for r in results]
        lines.append(f"{len(results) - failed}/{len(results)} checks passed")
        text = "\n".join(lines) + "\n"
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    return 0 if failed == 0 else 1


COMMANDS = {"eval": cmd_eval, "deriv": cmd_deriv, "coeffs": cmd_coeffs, "approx": cmd_approx,
            "freud": cmd_freud, "verify": cmd_verify}


def _join_grid_values(argv):
    """Let ``--grid -2:2:5`` through; argparse would read the value as a flag."""
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--grid={nxt}")
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    parser = build_parser()
    argv = _join_grid_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                            format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
        logging.captureWarnings(True)
        if args.command == "verify" and args.format == "csv":
            raise UsageError("verify has no CSV form; use --format json")
        return COMMANDS[args.command](args)
    except (UsageError, InvalidArgument) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericFailure as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
