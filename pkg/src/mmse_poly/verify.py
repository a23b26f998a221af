"""Invariant battery run by ``mmse-poly verify``.

Each check returns ``(ok, detail)``.  ``faults`` names deliberate
corruptions used to confirm that the battery can fail; the only one
supported is ``e_lambda``, which perturbs a single coefficient of the
closed-form derivative before it is compared with the other routes.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dist as D
from .approx import best_poly_hankel, best_poly_orthogonal, mse_gap, noise_floor
from .channel import channel_view
from .derivs import (GPoly, derivative_norm_bound, eval_gpoly, fd_derivative, q_r,
                     symbolic_derivative)
from .errors import InvalidArgument
from .freud import check_freud, mrs_bound, mrs_number, qprime_envelope_check, support_radius
from .partitions import C_r, e_lambda, enumerate_Pi, recurrence_coeffs, tau_minus, tau_plus
from .quadrature import QuadConfig, gauss_hermite, gauss_legendre

FAULTS = ("e_lambda",)
CLASS_D_FAMILY = ("two-point", "uniform", "triangular", "coswindow")


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    ok: bool
    detail: str
    seconds: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _family(names=CLASS_D_FAMILY):
    return [D.PRESETS[n]() for n in names]


def _closed_form(r: int, faults) -> GPoly:
    terms = {lam: e_lambda(lam) for lam in enumerate_Pi(r)}
    if "e_lambda" in faults and r == 4:
        lam = enumerate_Pi(r)[0]
        terms[lam] += 1
    return GPoly(terms)


# -- quadrature -------------------------------------------------------------

def _gh_moments(cfg, faults):
    rule = gauss_hermite(20)
    exact = [math.prod(range(k - 1, 0, -2)) for k in range(0, 39, 2)]
    errs = [abs(rule.integrate(lambda y: y**k) / m - 1) for k, m in zip(range(0, 39, 2), exact)]
    return max(errs) < 1e-12, f"max relative error of E[N^k], k <= 38: {max(errs):.2e}"


def _gl_exact(cfg, faults):
    rule = gauss_legendre(8, -1.0, 2.0)
    exact = [(2 ** (k + 1) - (-1) ** (k + 1)) / (k + 1) for k in range(16)]
    errs = [abs(rule.integrate(lambda x: x**k) / m - 1) for k, m in enumerate(exact)]
    return max(errs) < 1e-12, f"max relative error {max(errs):.2e} for degree <= 15"


# -- dist -------------------------------------------------------------------

def _uniform_moments(cfg, faults):
    u = D.uniform(1)
    x, w = u.inner_nodes(cfg.prec, cfg.inner_order)
    errs = [abs(float(np.sum(w * u.pdf(x, cfg.prec) * x**k)) - (1 / (k + 1) if k % 2 == 0 else 0)) for k in range(13)]
    return max(errs) < 1e-13, f"quadrature vs exact moments, max error {max(errs):.2e}"


def _class_d(cfg, faults):
    members = [bool(D.in_class_D(d)) for d in _family()]
    shifted = bool(D.in_class_D(D.PRESETS["shifted-uniform"]()))
    return all(members) and not shifted, f"family members {members}, shifted-uniform member={shifted}"


# -- channel ----------------------------------------------------------------

def _tweedie(cfg, faults):
    y = np.linspace(-5, 5, 101)
    worst = max(float(np.max(np.abs(channel_view(d, cfg).tweedie(y) - channel_view(d, cfg).cond_mean(y))))
                for d in _family())
    return worst <= 1e-8, f"max |tweedie - E[X|Y]| = {worst:.2e}"


def _envelope(cfg, faults):
    y = np.linspace(-10, 10, 101)
    bad = [d.name for d in _family() if not qprime_envelope_check(d, y, cfg)]
    return not bad, f"violations: {bad or 'none'}"


def _density_mass(cfg, faults):
    errs = [abs(sum(channel_view(d, cfg).output_rule().weights) - 1) for d in _family()]
    return max(errs) < 1e-10, f"max |int p_Y - 1| = {max(errs):.2e}"


# -- partitions --------------------------------------------------------------

def _c_r(cfg, faults):
    a = [C_r(r) for r in range(2, 13)]
    b = [C_r(r, "sum-of-c") for r in range(2, 13)]
    return a == b and a[:6] == [1, 1, 4, 11, 56, 267], f"C_2..C_12 = {a}"


def _worked_example(cfg, faults):
    lam = (0, 5, 0, 1)
    plus = {tuple(nu): a for nu, a in tau_plus(lam)}
    minus = {tuple(nu): b for nu, b in tau_minus(lam)}
    ok = plus == {(0, 4, 1, 1): 5, (0, 5, 0, 0, 1): 1} and minus == {(2, 4, 0, 1): 15, (1, 5, 1): 5}
    return ok, f"tau+ {plus}, tau- {minus}"


def _recurrence(cfg, faults):
    bad = [r for r in range(2, 13) if GPoly(recurrence_coeffs(r)) != _closed_form(r, faults)]
    return not bad, f"recurrence vs e_lambda mismatches at r = {bad or 'none'}"


# -- derivs -----------------------------------------------------------------

def _symbolic(cfg, faults):
    bad = [r for r in range(2, 13) if symbolic_derivative(r) != _closed_form(r, faults)]
    hom = all(symbolic_derivative(r).weighted_degrees() == {r} for r in range(2, 13))
    return not bad and hom, f"mismatches at r = {bad or 'none'}, homogeneous={hom}"


def _finite_differences(cfg, faults):
    worst = 0.0
    for d in (D.two_point(1), D.uniform(1)):
        view = channel_view(d, cfg)
        for r in range(2, 6):
            poly = _closed_form(r, faults)
            for y in (-2.0, -1.0, 0.0, 1.0, 2.0):
                worst = max(worst, abs(float(eval_gpoly(poly, view, y)) - float(fd_derivative(view, y, r - 1))))
    return worst <= 1e-5, f"max |closed form - finite difference| = {worst:.2e}"


def _bound(cfg, faults):
    qs = [q_r(r) for r in range(2, 8)]
    fails = [(d.name, r) for d in _family() for r in range(2, 7) if not derivative_norm_bound(d, r, cfg=cfg).holds]
    return not fails and qs == [1, 1, 1, 2, 2, 2], f"q_r = {qs}, violations {fails or 'none'}"


def _gaussian_derivs(cfg, faults):
    worst = max(derivative_norm_bound(D.gaussian(0, 1), r, cfg=cfg).lhs for r in range(3, 7))
    return worst <= 1e-8, f"max ||f^(r-1)(Y)|| for r >= 3 = {worst:.2e}"


# -- approx -----------------------------------------------------------------

def _exact_cases(cfg, faults):
    g = best_poly_orthogonal(D.gaussian(0, 1), 1, cfg)
    c = best_poly_orthogonal(D.constant(1), 0, cfg)
    ok = g.l2_error <= 1e-10 and abs(g.coeffs[1] - 0.5) < 1e-8 and abs(g.coeffs[0]) < 1e-8 and c.l2_error == 0
    return ok, f"gaussian n=1 error {g.l2_error:.2e}, coeffs {g.coeffs}; constant n=0 error {c.l2_error:.2e}"


def _monotone(cfg, faults):
    bad = []
    for d in _family():
        errs = [best_poly_orthogonal(d, n, cfg).l2_error for n in range(13)]
        if any(b > a + 1e-12 for a, b in zip(errs, errs[1:])):
            bad.append(d.name)
    return not bad, f"non-monotone: {bad or 'none'}"


def _agreement(cfg, faults):
    worst = 0.0
    for d in _family():
        for n in range(7):
            h, o = best_poly_hankel(d, n, cfg), best_poly_orthogonal(d, n, cfg)
            worst = max(worst, max(abs(a - b) for a, b in zip(h.coeffs, o.coeffs)))
    return worst <= 1e-6, f"max coefficient gap, n <= 6: {worst:.2e}"


def _non_polynomial(cfg, faults):
    ratios = []
    for d in _family():
        floor = noise_floor(d, 12, cfg)
        ratios.append(min(best_poly_orthogonal(d, n, cfg).l2_error for n in range(13)) / floor)
    return min(ratios) > 1e3, f"min error / noise floor = {min(ratios):.2e}"


def _gap(cfg, faults):
    reports = [mse_gap(d, n, cfg) for d in _family() for n in (1, 3, 6)]
    agree = max(abs(r.gap - r.gap_moments) for r in reports)
    return all(r.holds for r in reports) and agree < 1e-8, f"gap <= bound everywhere; max route gap {agree:.2e}"


# -- freud ------------------------------------------------------------------

def _freud(cfg, faults):
    failed = [d.name for d in _family() + [D.constant(0)] if not check_freud(d, cfg=cfg).passed]
    shifted = check_freud(D.PRESETS["shifted-uniform"](), cfg=cfg).even.status
    return not failed and shifted == "fail", f"failures {failed or 'none'}; shifted-uniform evenness {shifted}"


def _mrs(cfg, faults):
    rel = max(abs(mrs_number(lambda y: 2 * y, n).a_n / math.sqrt(n) - 1) for n in range(1, 101))
    problems = []
    for d in _family():
        a = [mrs_number(d, n, cfg=cfg).a_n for n in range(1, 101, 3)]
        M = support_radius(d)
        if any(x >= y for x, y in zip(a, a[1:])) or any(x > mrs_bound(M, n) for x, n in zip(a, range(1, 101, 3))):
            problems.append(d.name)
    return rel <= 1e-8 and not problems, f"Gaussian-weight relative error {rel:.1e}; problems {problems or 'none'}"


CHECKS: list[tuple[str, str, Callable]] = [
    ("quadrature", "Gauss-Hermite reproduces normal moments", _gh_moments),
    ("quadrature", "Gauss-Legendre exact to degree 2n-1", _gl_exact),
    ("dist", "uniform moments exact vs quadrature", _uniform_moments),
    ("dist", "class D membership", _class_d),
    ("channel", "Tweedie formula equals E[X|Y]", _tweedie),
    ("channel", "Q' envelope y-M <= Q' <= y+M", _envelope),
    ("channel", "output rule carries unit mass", _density_mass),
    ("partitions", "C_r by Stirling formula and by sum of c_lambda", _c_r),
    ("partitions", "transition maps on (0,5,0,1)", _worked_example),
    ("partitions", "recurrence equals e_lambda, r <= 12", _recurrence),
    ("derivs", "symbolic equals closed form, r <= 12", _symbolic),
    ("derivs", "closed form matches finite differences", _finite_differences),
    ("derivs", "derivative norm bound, r <= 6", _bound),
    ("derivs", "gaussian higher derivatives vanish", _gaussian_derivs),
    ("approx", "gaussian and constant inputs are exact", _exact_cases),
    ("approx", "error nonincreasing in n", _monotone),
    ("approx", "Hankel and orthogonal coefficients agree", _agreement),
    ("approx", "residual stays above the noise floor", _non_polynomial),
    ("approx", "MSE gap within its bound", _gap),
    ("freud", "Freud conditions for the family", _freud),
    ("freud", "MRS numbers: oracle, monotone, bounded", _mrs),
]


def run_battery(cfg: QuadConfig | None = None, faults=(), progress: Callable[[str], None] | None = None):
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise InvalidArgument(f"unknown fault(s) {sorted(unknown)}; known: {list(FAULTS)}")
    cfg = cfg or QuadConfig(precision="double")
    results = []
    for module, name, fn in CHECKS:
        if progress:
            progress(f"{module}: {name}")
        start = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ok, detail = fn(cfg, set(faults))
        except Exception as exc:  # a crash is a failed check, reported with its message
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(module, name, bool(ok), detail, time.perf_counter() - start))
    return results
