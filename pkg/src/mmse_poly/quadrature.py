"""Gaussian quadrature rules and P_Y-weighted L2 norms.

Nodes come from the Golub-Welsch eigen-decomposition of the Jacobi matrix
of the underlying orthogonal family.  In extended precision the double
eigenvalues are polished by Newton's method on the three-term recurrence,
and weights are always taken from the Christoffel function
``1 / sum_k p_k(x)^2`` of the orthonormal polynomials, which keeps tiny
tail weights accurate to full relative precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidArgument, NumericFailure
from .precision import DOUBLE, Precision, get_precision

_RESCALE = 1e100


@dataclass(frozen=True)
class QuadRule:
    """A fixed rule ``sum_i w_i h(x_i)``.

    For ``gauss-hermite`` the weights are normalised against the standard
    normal density, so they sum to one.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        if self.kind not in ("gauss-hermite", "gauss-legendre", "composite"):
            raise InvalidArgument(f"unknown rule kind {self.kind!r}")
        if len(self.nodes) != len(self.weights):
            raise InvalidArgument("nodes and weights differ in length")
        if len(self.nodes) > 1 and not np.all(np.diff(self.nodes) > 0):
            raise InvalidArgument("nodes must be strictly increasing")
        if not np.all(self.weights > 0):
            raise InvalidArgument("weights must be positive")

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]):
        return np.sum(self.weights * func(self.nodes))


def _orthonormal_values(x, alpha, b, mu0, n, prec: Precision, derivative=False):
    """Evaluate p_0..p_{n-1} (summed squares) and p_n, p_n' at x.

    ``b(k)`` is the off-diagonal Jacobi entry sqrt(beta_k).  Returns
    ``(sum_sq, log_scale, p_n, dp_n)`` where the true sum of squares equals
    ``sum_sq * exp(log_scale)``; in double the running values are rescaled
    to dodge overflow at large orders.
    """
    one = prec.scalar(1)
    p_prev = x * 0
    p = x * 0 + one / prec.sqrt(prec.scalar(mu0))
    dp_prev = x * 0
    dp = x * 0
    sum_sq = p * p
    log_scale = np.zeros(np.shape(x))
    for k in range(n):
        bk1 = prec.scalar(b(k + 1))
        p_next = ((x - alpha) * p - (prec.scalar(b(k)) * p_prev if k else 0)) / bk1
        if derivative:
            dp_next = (p + (x - alpha) * dp - (prec.scalar(b(k)) * dp_prev if k else 0)) / bk1
            dp_prev, dp = dp, dp_next
        p_prev, p = p, p_next
        if k + 1 < n:
            sum_sq = sum_sq + p * p
        if not prec.extended:
            big = np.abs(p) > _RESCALE
            if np.any(big):
                # sum_sq, p, p_prev share one scale factor per node
                s = np.where(big, 1.0 / _RESCALE, 1.0)
                p, p_prev, sum_sq = p * s, p_prev * s, sum_sq * s * s
                dp, dp_prev = dp * s, dp_prev * s
                log_scale = log_scale + np.where(big, 2 * np.log(_RESCALE), 0.0)
    return sum_sq, log_scale, p, dp


def _gauss_rule(order, b, mu0, prec: Precision):
    """Gauss nodes/weights for a symmetric family (zero diagonal)."""
    if order < 1:
        raise InvalidArgument("quadrature order must be >= 1")
    offdiag = np.array([float(b(k)) for k in range(1, order)])
    if order == 1:
        x = np.zeros(1)
    else:
        x = eigh_tridiagonal(np.zeros(order), offdiag, eigvals_only=True)
        x = np.sort(x)
        x = 0.5 * (x - x[::-1])  # symmetric family: enforce exact antisymmetry
    if prec.extended:
        x = prec.asarray(x)
        for _ in range(4):
            _, _, p, dp = _orthonormal_values(x, 0, b, mu0, order, prec, derivative=True)
            x = x - p / dp
    sum_sq, log_scale, _, _ = _orthonormal_values(x, 0, b, mu0, order, prec)
    if prec.extended:
        w = 1 / sum_sq
    else:
        w = np.exp(-np.log(sum_sq) - log_scale)
        keep = w > 0  # tail weights below the double range contribute nothing
        x, w = x[keep], w[keep]
    return x, w


def gauss_hermite(order: int, prec: Precision | str | None = DOUBLE) -> QuadRule:
    """Gauss-Hermite rule for expectations under the standard normal law."""
    prec = get_precision(prec)
    b = (lambda k: prec.sqrt(prec.scalar(k))) if prec.extended else np.sqrt
    x, w = _gauss_rule(order, b, 1, prec)
    return QuadRule("gauss-hermite", x, w, order)


def _legendre_b(prec: Precision):
    def b(k):
        if prec.extended:
            k = prec.scalar(k)
            return k / prec.sqrt(4 * k * k - 1)
        return k / np.sqrt(4.0 * k * k - 1.0)

    return b


def gauss_legendre(order: int, a=-1.0, b=1.0, prec: Precision | str | None = DOUBLE) -> QuadRule:
    """Gauss-Legendre rule on ``[a, b]``, exact for degree ``2*order - 1``."""
    prec = get_precision(prec)
    if not a < b:
        raise InvalidArgument(f"need a < b, got [{a}, {b}]")
    x, w = _gauss_rule(order, _legendre_b(prec), 2, prec)
    a, b = prec.scalar(a), prec.scalar(b)
    half = (b - a) / 2
    return QuadRule("gauss-legendre", half * x + (a + b) / 2, half * w, order)


def composite_legendre(edges, order: int, prec: Precision | str | None = DOUBLE) -> QuadRule:
    """Gauss-Legendre of ``order`` points on each panel ``[edges[i], edges[i+1]]``."""
    prec = get_precision(prec)
    edges = list(edges)
    if len(edges) < 2:
        raise InvalidArgument("composite rule needs at least one panel")
    x, w = _gauss_rule(order, _legendre_b(prec), 2, prec)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if not lo < hi:
            raise InvalidArgument("panel edges must be strictly increasing")
        lo, hi = prec.scalar(lo), prec.scalar(hi)
        half = (hi - lo) / 2
        nodes.append(half * x + (lo + hi) / 2)
        weights.append(half * w)
    return QuadRule("composite", np.concatenate(nodes), np.concatenate(weights), order)


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature settings shared by every P_Y integral.

    ``outer`` selects the rule for integrals over y: ``composite``
    (Gauss-Legendre panels over a truncated window, ``outer_order`` points
    per panel) or ``hermite`` (a Gauss-Hermite rule of ``outer_order`` nodes
    recentred and rescaled to the mean and spread of Y).  ``tail`` is the
    half-width of the window beyond the support of X, in units of the
    noise standard deviation.
    """

    outer: str = "composite"
    outer_order: int | None = None
    inner_order: int = 200
    tail: float = 24.0
    precision: str = field(default_factory=lambda: get_precision().name)

    def __post_init__(self):
        if self.outer not in ("composite", "hermite"):
            raise InvalidArgument(f"unknown outer rule {self.outer!r}")
        if self.inner_order < 2:
            raise InvalidArgument("inner_order must be >= 2")
        get_precision(self.precision)

    @property
    def prec(self) -> Precision:
        return get_precision(self.precision)

    @property
    def outer_points(self) -> int:
        if self.outer_order is not None:
            return self.outer_order
        return 20 if self.outer == "composite" else 200

    def refined(self) -> "QuadConfig":
        return QuadConfig(self.outer, 2 * self.outer_points, 2 * self.inner_order, self.tail, self.precision)


def l2_norm_pY(h: Callable[[np.ndarray], np.ndarray], dist, cfg: QuadConfig | None = None):
    """``sqrt(E[h(Y)^2])`` for Y = X + N with X distributed as ``dist``.

    ``dist`` may also be a ready-made ``ChannelView``.
    """
    from .channel import ChannelView, channel_view

    view = dist if isinstance(dist, ChannelView) else channel_view(dist, cfg)
    rule = view.output_rule()
    values = h(rule.nodes)
    finite = view.prec.isfinite(values)
    if not np.all(finite):
        bad = int(np.flatnonzero(~finite)[0])
        raise NumericFailure(f"integrand is not finite at node y={float(rule.nodes[bad]):.17g}")
    if view.prec.extended:
        return view.prec.sqrt(np.sum(rule.weights * values * values))
    # scale first so that squaring neither underflows nor overflows
    values = np.asarray(values, dtype=float)
    peak = float(np.max(np.abs(values))) if len(values) else 0.0
    if peak == 0.0:
        return 0.0
    scaled = values / peak
    return peak * float(np.sqrt(np.sum(rule.weights * scaled * scaled)))
