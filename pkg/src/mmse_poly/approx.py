"""Best polynomial approximation E_n[X|Y] of the conditional mean in L2(P_Y).

Two routes to the same projection:

* ``best_poly_hankel`` solves the normal equations built from the moments
  of Y.  Hankel matrices of Gaussian-smoothed moments are exponentially
  ill-conditioned, so this route refuses to answer once the 1-norm
  condition number exceeds the working precision budget.
* ``best_poly_orthogonal`` runs a discrete Stieltjes procedure on the
  output quadrature rule, building polynomials orthonormal under P_Y, and
  projects f onto them.  Monomial coefficients are tracked alongside.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .channel import channel_view
from .dist import InputDist, exact_moment, in_class_D, moment
from .errors import IllConditioned, InvalidArgument, NumericFailure
from .precision import Precision, get_precision
from .quadrature import QuadConfig

# cond_1(H) * eps above this aborts the Hankel solve
HANKEL_BUDGET = 1e-6
# Gram drift that triggers a second Gram-Schmidt pass, and the drift that is fatal
REORTH_TOL = 1e-10
ORTHO_FAIL_TOL = 1e-6


def _noise_moment(k: int) -> int:
    """E[N^k] for N ~ N(0, 1)."""
    return 0 if k % 2 else math.prod(range(k - 1, 0, -2))


def _default_cfg(cfg):
    return cfg or QuadConfig()


@dataclass(frozen=True)
class YMomentTable:
    """E[Y^k] for k <= 2n and E[X Y^j] for j <= n, in working precision."""

    y: tuple
    xy: tuple
    exact: bool

    @property
    def n(self) -> int:
        return len(self.xy) - 1

    def hankel(self, prec: Precision) -> np.ndarray:
        n = self.n
        out = prec.zeros((n + 1, n + 1))
        for i in range(n + 1):
            for j in range(n + 1):
                out[i, j] = self.y[i + j]
        return out


def y_moments(dist: InputDist, max_k: int, prec: Precision | str | None = None,
              inner_order: int = 200) -> YMomentTable:
    """Moments of Y = X + N up to order ``max_k`` (even) by binomial convolution.

    The cross moments E[X Y^j] are returned for j <= max_k // 2.  When X has
    exact rational moments the whole table is exact before rounding.
    """
    prec = get_precision(prec)
    if max_k < 0:
        raise InvalidArgument("max_k must be nonnegative")
    n = max_k // 2
    needed = max(max_k, n + 1)
    if needed > dist.moment_cap:
        raise InvalidArgument(f"order {needed} exceeds the moment cap {dist.moment_cap}")
    exact = [exact_moment(dist, k) for k in range(needed + 1)]
    is_exact = all(v is not None for v in exact)
    if is_exact:
        xs = exact
        zero = Fraction(0)
    else:
        xs = [moment(dist, k, prec, inner_order) for k in range(needed + 1)]
        zero = prec.scalar(0)

    def conv(k, shift):
        total = zero
        for j in range(k + 1):
            nm = _noise_moment(k - j)
            if nm:
                total = total + math.comb(k, j) * nm * xs[j + shift]
        return total

    ys = tuple(prec.scalar(conv(k, 0)) for k in range(max_k + 1))
    xy = tuple(prec.scalar(conv(j, 1)) for j in range(n + 1))
    return YMomentTable(ys, xy, is_exact)


@dataclass(frozen=True)
class PolyApproxResult:
    """E_n(y) = sum_j coeffs[j] y^j with its L2(P_Y) distance to f."""

    n: int
    coeffs: tuple
    l2_error: float
    method: str
    condition_estimate: float

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c in reversed(self.coeffs):
            out = out * y + c
        return out

    def as_dict(self) -> dict:
        return {"n": self.n, "method": self.method, "coeffs": list(self.coeffs),
                "l2_error": self.l2_error, "condition_estimate": self.condition_estimate}


def _horner(coeffs, y):
    out = y * 0
    for c in reversed(list(coeffs)):
        out = out * y + c
    return out


def _solve(prec: Precision, matrix: np.ndarray, rhs):
    """Solve the dense system and return (solution, cond_1 estimate)."""
    if not prec.extended:
        m = matrix.astype(float)
        cond = float(np.linalg.cond(m, 1))
        return np.linalg.solve(m, np.asarray(rhs, dtype=float)), cond
    ctx = prec.ctx
    m = ctx.matrix([[prec.to_mpmath(v) for v in row] for row in matrix.tolist()])
    inv = ctx.inverse(m)
    cond = float(ctx.mnorm(m, 1) * ctx.mnorm(inv, 1))
    sol = ctx.lu_solve(m, ctx.matrix([prec.to_mpmath(v) for v in rhs]))
    return np.array([prec.scalar(sol[i]) for i in range(len(rhs))], dtype=object), cond


def best_poly_hankel(dist: InputDist, n: int, cfg: QuadConfig | None = None) -> PolyApproxResult:
    """Normal-equation solve c = M_{Y,n}^{-1} (E[X Y^j])_j.

    Raises ``IllConditioned`` when cond_1(M_{Y,n}) * eps > HANKEL_BUDGET.
    """
    cfg = _default_cfg(cfg)
    if n < 0:
        raise InvalidArgument("degree must be nonnegative")
    prec = cfg.prec
    table = y_moments(dist, 2 * n, prec, cfg.inner_order)
    coeffs, cond = _solve(prec, table.hankel(prec), table.xy)
    if not math.isfinite(cond) or cond * prec.eps > HANKEL_BUDGET:
        raise IllConditioned(n, cond, HANKEL_BUDGET / prec.eps)
    proj = _projector(dist, cfg)
    resid = _horner(coeffs, proj.nodes) - proj.f
    err = float(prec.sqrt(proj._inner(resid, resid)))
    out = tuple(float(c) for c in coeffs)
    if not all(math.isfinite(c) for c in out):
        raise NumericFailure(f"non-finite Hankel coefficients at n={n}")
    return PolyApproxResult(n, out, err, "hankel", cond)


class _Projector:
    """Orthonormal polynomials under the discrete output measure, grown on demand."""

    def __init__(self, dist: InputDist, cfg: QuadConfig):
        self.view = channel_view(dist, cfg)
        self.prec = cfg.prec
        rule = self.view.output_rule()
        self.nodes, self.weights = rule.nodes, rule.weights
        self.f = self.view.cond_mean(self.nodes)
        self.f_norm2 = np.sum(self.weights * self.f * self.f)
        one = self.prec.scalar(1)
        norm0 = self.prec.sqrt(np.sum(self.weights))
        self.values = [self.nodes * 0 + one / norm0]
        self.monomial = [[one / norm0]]
        self.proj = [np.sum(self.weights * self.f * self.values[0])]
        self.drift = 0.0

    def _inner(self, a, b):
        return np.sum(self.weights * a * b)

    def extend(self, n: int):
        prec = self.prec
        zero = prec.scalar(0)
        while len(self.values) <= n:
            k = len(self.values) - 1
            pk = self.values[k]
            ck = self.monomial[k]
            if len(self.nodes) <= k + 1:
                raise NumericFailure(f"output rule has only {len(self.nodes)} nodes, too few for degree {k + 1}")
            # Stieltjes step y p_k - alpha_k p_k - sqrt(beta_k) p_{k-1}; a full
            # Gram-Schmidt pass follows only if orthogonality has drifted
            vals = self.nodes * pk
            coef = [zero] + list(ck)
            check = math.inf
            for against in (range(k, max(k - 2, -1), -1), range(k, -1, -1)):
                for j in against:
                    h = self._inner(vals, self.values[j])
                    vals = vals - h * self.values[j]
                    for i, c in enumerate(self.monomial[j]):
                        coef[i] = coef[i] - h * c
                norm = prec.sqrt(self._inner(vals, vals))
                if not norm > 0:
                    raise NumericFailure(f"orthogonal polynomial of degree {k + 1} vanished on the rule")
                vals = vals / norm
                coef = [c / norm for c in coef]
                check = max(abs(float(self._inner(vals, self.values[j]))) for j in range(k + 1))
                self.drift = max(self.drift, check)
                if check <= REORTH_TOL:
                    break
            if check > ORTHO_FAIL_TOL:
                raise NumericFailure(
                    f"loss of orthogonality at degree {k + 1}: max |<p_{k + 1}, p_j>| = {check:.3e}")
            self.values.append(vals)
            self.monomial.append(coef)
            self.proj.append(self._inner(self.f, vals))

    def result(self, n: int) -> PolyApproxResult:
        self.extend(n)
        prec = self.prec
        approx = self.nodes * 0
        coeffs = [prec.scalar(0)] * (n + 1)
        for j in range(n + 1):
            approx = approx + self.proj[j] * self.values[j]
            for i, c in enumerate(self.monomial[j]):
                coeffs[i] = coeffs[i] + self.proj[j] * c
        resid = self.f - approx
        err = float(prec.sqrt(self._inner(resid, resid)))
        return PolyApproxResult(n, tuple(float(c) for c in coeffs), err, "orthogonal", float(self.drift))


@lru_cache(maxsize=32)
def _projector(dist: InputDist, cfg: QuadConfig) -> _Projector:
    return _Projector(dist, cfg)


def best_poly_orthogonal(dist: InputDist, n: int, cfg: QuadConfig | None = None) -> PolyApproxResult:
    """E_n = sum_j <f, p_j> p_j over polynomials p_j orthonormal under P_Y.

    ``condition_estimate`` is the largest Gram-matrix drift |<p_i, p_j> - delta_ij|
    seen while building the basis.
    """
    if n < 0:
        raise InvalidArgument("degree must be nonnegative")
    if dist.kind == "constant":
        # f is the constant itself; skip the quadrature round-off
        return PolyApproxResult(n, (float(dist.value),) + (0.0,) * n, 0.0, "orthogonal", 0.0)
    return _projector(dist, _default_cfg(cfg)).result(n)


def best_poly(dist: InputDist, n: int, method: str = "orthogonal", cfg: QuadConfig | None = None):
    if method in ("orthogonal", "ortho"):
        return best_poly_orthogonal(dist, n, cfg)
    if method == "hankel":
        return best_poly_hankel(dist, n, cfg)
    raise InvalidArgument(f"unknown method {method!r}")


@dataclass(frozen=True)
class GapReport:
    """Excess MSE of E_n over the MMSE estimator.

    ``gap`` uses the Pythagorean identity ||E_n - f||^2; ``gap_moments`` is
    ||X - E_n||^2 - ||X - f||^2 assembled from moments of (X, Y) and the
    quadrature norm of f.
    """

    n: int
    gap: float
    gap_moments: float
    mmse: float
    bound: float
    holds: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def mse_gap(dist: InputDist, n: int, cfg: QuadConfig | None = None) -> GapReport:
    cfg = _default_cfg(cfg)
    res = best_poly_orthogonal(dist, n, cfg)
    proj = _projector(dist, cfg)
    ex2 = float(moment(dist, 2, cfg.prec, cfg.inner_order))
    mmse = max(0.0, ex2 - float(proj.f_norm2))
    table = y_moments(dist, 2 * n, "double", cfg.inner_order)
    c = np.asarray(res.coeffs)
    ys = np.asarray([float(v) for v in table.y])
    xy = np.asarray([float(v) for v in table.xy])
    quad = sum(c[i] * c[j] * ys[i + j] for i in range(n + 1) for j in range(n + 1))
    risk_n = ex2 - 2 * float(c @ xy) + quad
    gap = res.l2_error**2
    bound = 2 * math.sqrt(mmse + gap) * res.l2_error
    return GapReport(n, gap, float(risk_n - mmse), mmse, bound, gap <= bound + 1e-15)


def noise_floor(dist: InputDist, n_max: int, cfg: QuadConfig | None = None) -> float:
    """Resolution limit of the projection pipeline at degree ``n_max``.

    The sum of three measured pieces: the residual left when the pipeline
    re-projects its own degree-``n_max`` output (which lies in the target
    space, so any residual is round-off), the change in f when the inner
    quadrature is doubled, and eps * ||f|| * (n_max + 1).
    """
    cfg = _default_cfg(cfg)
    proj = _projector(dist, cfg)
    proj.extend(n_max)
    prec = proj.prec
    target = proj.nodes * 0
    for j in range(n_max + 1):
        target = target + proj.proj[j] * proj.values[j]
    back = proj.nodes * 0
    for j in range(n_max + 1):
        back = back + proj._inner(target, proj.values[j]) * proj.values[j]
    d = target - back
    self_resid = float(prec.sqrt(proj._inner(d, d)))
    finer = channel_view(dist, replace(cfg, inner_order=2 * cfg.inner_order))
    d = proj.f - finer.cond_mean(proj.nodes)
    inner_resid = float(prec.sqrt(proj._inner(d, d)))
    f_norm = float(prec.sqrt(proj.f_norm2))
    return self_resid + inner_resid + prec.eps * f_norm * (n_max + 1)


@dataclass(frozen=True)
class RateFit:
    degrees: tuple
    errors: tuple
    slope: float | None
    floor: float
    excluded: tuple
    note: str = ""

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def rate_fit(dist: InputDist, n_list, cfg: QuadConfig | None = None) -> RateFit:
    """Least-squares slope of log l2_error against log n.

    Degrees whose error sits below ten times the noise floor are excluded
    from the fit with a warning.  Gaussian and constant inputs have an
    affine f, so every error at n >= 1 is noise and the fit is skipped.
    """
    cfg = _default_cfg(cfg)
    degrees = tuple(int(n) for n in n_list)
    if not degrees or any(n < 0 for n in degrees):
        raise InvalidArgument("degree list must be nonempty and nonnegative")
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise InvalidArgument("degree list must be strictly increasing")
    if not in_class_D(dist) and dist.kind not in ("gaussian", "constant"):
        warnings.warn(f"{dist} is not in class D; the decay rate is not guaranteed", stacklevel=2)
    errors = tuple(best_poly_orthogonal(dist, n, cfg).l2_error for n in degrees)
    floor = noise_floor(dist, degrees[-1], cfg)
    exact_from = {"gaussian": 1, "constant": 0}.get(dist.kind)
    if exact_from is not None:
        excluded = tuple(n for n in degrees if n >= exact_from)
        note = f"exact at n={exact_from}"
    else:
        excluded = tuple(n for n, e in zip(degrees, errors) if e < 10 * floor)
        note = ""
    if excluded:
        warnings.warn(f"degrees {list(excluded)} excluded from the rate fit (at the noise floor)", stacklevel=2)
    kept = [(n, e) for n, e in zip(degrees, errors) if n not in excluded and n > 0 and e > 0]
    slope = None
    if len(kept) >= 2:
        x = np.log([n for n, _ in kept])
        y = np.log([e for _, e in kept])
        slope = float(np.polyfit(x, y, 1)[0])
    elif not note:
        note = "fewer than two usable degrees"
    return RateFit(degrees, errors, slope, floor, excluded, note)
