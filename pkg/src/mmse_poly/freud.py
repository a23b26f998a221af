"""Freud-weight diagnostics for p_Y = exp(-Q) and Mhaskar-Rakhmanov-Saff numbers.

For Y = X + N the log-derivative is Q'(y) = y - E[X|Y=y], which is what
every check here evaluates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelView, channel_view
from .dist import InputDist, in_class_D
from .errors import InvalidArgument, OutOfRange
from .quadrature import QuadConfig, gauss_legendre

PASS, FAIL, UNDETERMINED = "pass", "fail", "undetermined"
DEFAULT_GRID = np.linspace(-10.0, 10.0, 201)
LIMIT_POINTS = (1e-2, 1e-4, 1e-6)


@dataclass(frozen=True)
class Condition:
    status: str
    witness: float | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"status": self.status, "witness": self.witness, "detail": self.detail}


@dataclass(frozen=True)
class FreudReport:
    """Outcome of the five Freud-weight conditions on a grid.

    ``class_d_input`` records whether the input lies in class D, the
    hypothesis under which p_Y is guaranteed to be a Freud weight.
    """

    even: Condition
    positive: Condition
    increasing: Condition
    limit_at_zero: Condition
    ratio: Condition
    class_d_input: bool
    lam: float | None = None
    ratio_bounds: tuple | None = None

    @property
    def conditions(self) -> dict:
        return {"even": self.even, "positive": self.positive, "increasing": self.increasing,
                "limit_at_zero": self.limit_at_zero, "ratio": self.ratio}

    @property
    def passed(self) -> bool:
        return all(c.status == PASS for c in self.conditions.values())

    def as_dict(self) -> dict:
        return {"passed": self.passed, "class_d_input": self.class_d_input, "lambda": self.lam,
                "ratio_bounds": list(self.ratio_bounds) if self.ratio_bounds else None,
                "conditions": {k: c.as_dict() for k, c in self.conditions.items()}}


def _view(source, cfg) -> ChannelView:
    if isinstance(source, ChannelView):
        return source
    if isinstance(source, InputDist):
        return channel_view(source, cfg or QuadConfig(precision="double"))
    raise InvalidArgument(f"expected an InputDist or ChannelView, got {type(source).__name__}")


def _float(values):
    return np.asarray(values, dtype=float)


def support_radius(dist: InputDist) -> float:
    """M = max |x| over the support; requires compact support."""
    b = dist.bounds
    if b is None:
        raise InvalidArgument(f"{dist} is not compactly supported")
    return max(abs(b[0]), abs(b[1]))


def ratio_bounds(M: float) -> tuple[float, float]:
    """Certified range of Q'(lam y)/Q'(y), lam = M+2, for y > M+4."""
    return (M * M + 5 * M + 8) / (2 * (M + 2)), (M * M + 7 * M + 8) / 4


def _check_even(view, grid, tol):
    y = np.unique(np.abs(grid))
    y = y[y > 0]
    if not len(y):
        return Condition(UNDETERMINED, None, "grid has no nonzero points")
    logp_pos = _float(view.log_output_density(y))
    logp_neg = _float(view.log_output_density(-y))
    gap = np.abs(logp_pos - logp_neg) / np.maximum(1.0, np.abs(logp_pos))
    worst = int(np.argmax(gap))
    if gap[worst] > tol:
        return Condition(FAIL, float(y[worst]), f"|Q(y) - Q(-y)| = {gap[worst]:.3e} (relative)")
    return Condition(PASS, None, f"max relative |Q(y) - Q(-y)| = {gap[worst]:.3e}")


def _check_positive(qp, y):
    bad = np.flatnonzero(~(qp > 0))
    if len(bad):
        return Condition(FAIL, float(y[bad[0]]), f"Q'(y) = {qp[bad[0]]:.3e} <= 0")
    return Condition(PASS, None, f"min Q' on grid = {qp.min():.3e}")


def _check_increasing(qp, y, tol):
    v = y * qp
    d = np.diff(v)
    bad = np.flatnonzero(d <= -tol * (np.abs(v[1:]) + np.abs(v[:-1])))
    if len(bad):
        return Condition(FAIL, float(y[bad[0] + 1]), f"y Q'(y) drops by {-d[bad[0]]:.3e}")
    return Condition(PASS, None, "")


def _check_limit(view):
    ys = np.array(LIMIT_POINTS)
    v = np.abs(ys * _float(view.q_prime(ys)))
    for k in range(len(ys) - 1):
        # |y Q'(y)| must shrink at least linearly in y, up to a factor of two
        allowed = 2 * v[k] * (ys[k + 1] / ys[k]) + 1e-300
        if v[k + 1] > allowed:
            return Condition(FAIL, float(ys[k + 1]), f"|y Q'(y)| = {v[k + 1]:.3e} > {allowed:.3e}")
    return Condition(PASS, None, "|y Q'(y)| at " + ", ".join(f"{y:g}: {x:.3e}" for y, x in zip(ys, v)))


def _check_ratio(view, dist, grid, tol):
    if not dist.compact:
        return Condition(UNDETERMINED, None, "no certified construction for unbounded support"), None, None
    M = support_radius(dist)
    lam = M + 2
    lo, hi = ratio_bounds(M)
    y = np.asarray([g for g in grid if g > M + 4], dtype=float)
    if not len(y):
        y = np.linspace(M + 4, M + 24, 41)[1:]
    ratio = _float(view.q_prime(lam * y)) / _float(view.q_prime(y))
    bad = np.flatnonzero((ratio < lo * (1 - tol)) | (ratio > hi * (1 + tol)))
    if len(bad):
        i = bad[0]
        return Condition(FAIL, float(y[i]), f"ratio {ratio[i]:.6g} outside [{lo:.6g}, {hi:.6g}]"), lam, (lo, hi)
    return (Condition(PASS, None, f"ratio in [{ratio.min():.6g}, {ratio.max():.6g}] for {len(y)} points y > {M + 4:g}"),
            lam, (lo, hi))


def check_freud(dist: InputDist, grid=None, cfg: QuadConfig | None = None, tol: float = 1e-9) -> FreudReport:
    """Check the Freud-weight conditions for p_Y on ``grid`` (default [-10, 10], 201 points)."""
    view = _view(dist, cfg)
    grid = _float(DEFAULT_GRID if grid is None else grid)
    pos = np.unique(grid[grid > 0])
    if len(pos) < 2:
        raise InvalidArgument("grid needs at least two positive points")
    qp = _float(view.q_prime(pos))
    ratio, lam, bounds = _check_ratio(view, dist, grid, tol)
    return FreudReport(
        even=_check_even(view, grid, tol),
        positive=_check_positive(qp, pos),
        increasing=_check_increasing(qp, pos, 1e-12),
        limit_at_zero=_check_limit(view),
        ratio=ratio,
        class_d_input=bool(in_class_D(dist)),
        lam=lam,
        ratio_bounds=bounds,
    )


@dataclass(frozen=True)
class EnvelopeReport:
    holds: bool
    M: float
    witnesses: tuple = field(default_factory=tuple)

    def __bool__(self):
        return self.holds


def qprime_envelope_check(dist: InputDist, grid=None, cfg: QuadConfig | None = None,
                          tol: float = 1e-9) -> EnvelopeReport:
    """y - M <= Q'(y) <= y + M at every grid point, within ``tol``."""
    view = _view(dist, cfg)
    M = support_radius(view.dist)
    y = _float(DEFAULT_GRID if grid is None else grid)
    qp = _float(view.q_prime(y))
    bad = (qp < y - M - tol) | (qp > y + M + tol)
    return EnvelopeReport(not bad.any(), M, tuple(float(v) for v in y[bad]))


@dataclass(frozen=True)
class MrsResult:
    n: int
    a_n: float
    residual: float

    def as_dict(self) -> dict:
        return {"n": self.n, "a_n": self.a_n, "residual": self.residual}


_MRS_RULE = gauss_legendre(64, 0.0, math.pi / 2)
_SIN = np.sin(_MRS_RULE.nodes)


def mrs_integral(qprime: Callable, z: float) -> float:
    """(2/pi) int_0^1 z t Q'(z t) / sqrt(1 - t^2) dt, with t = sin(theta)."""
    zt = z * _SIN
    return float(2 / math.pi * np.sum(_MRS_RULE.weights * zt * _float(qprime(zt))))


def mrs_number(source, n: int, z_max: float = 1e6, cfg: QuadConfig | None = None) -> MrsResult:
    """n-th MRS number: the positive root a_n of mrs_integral(Q', a_n) = n.

    ``source`` is an explicit Q' callable, an ``InputDist`` or a ``ChannelView``.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    qprime = source if callable(source) and not isinstance(source, (InputDist, ChannelView)) \
        else _view(source, cfg).q_prime

    def excess(z):
        return mrs_integral(qprime, z) - n

    hi = 1.0
    while excess(hi) <= 0:
        hi *= 2
        if hi > z_max:
            raise OutOfRange(f"no root of the MRS equation for n={n} below z_max={z_max:g}")
    lo = hi / 2 if hi > 1 else 0.0
    root = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return MrsResult(int(n), float(root), float(-excess(root)))


def mrs_bound(M: float, n: int) -> float:
    """Upper bound (2M + sqrt 2) sqrt(n) on a_n for inputs in class D."""
    return (2 * M + math.sqrt(2)) * math.sqrt(n)
