"""Quantities conditional on Y = X + N, N ~ N(0, 1) independent of X.

Every conditional expectation is the ratio

    E[Z | Y=y] = E[Z exp(-(X-y)^2/2)] / E[exp(-(X-y)^2/2)],

evaluated over the atoms of X (or the inner quadrature nodes of its
density).  In double precision the Gaussian weights are multiplied by
exp(s(y)) with s(y) = min_x (x-y)^2/2 before summing; the ratio does not
change and nothing underflows for large |y|.  Gaussian and constant inputs
use closed forms.
"""
from __future__ import annotations

import math
from functools import cached_property, lru_cache

import numpy as np

from .dist import InputDist, moment
from .errors import InvalidArgument
from .quadrature import QuadConfig, QuadRule, composite_legendre, gauss_hermite


def _as_array(y):
    scalar = np.ndim(y) == 0
    return np.atleast_1d(np.asarray(y) if not isinstance(y, np.ndarray) else y), scalar


class ChannelView:
    """Read-only view of the channel for a fixed input law and quadrature config."""

    def __init__(self, dist: InputDist, cfg: QuadConfig | None = None):
        self.dist = dist
        self.cfg = cfg or QuadConfig()
        self.prec = self.cfg.prec
        if dist.kind in ("pmf", "density"):
            self._atoms, self._masses = dist.discretize(self.prec, self.cfg.inner_order)
        if dist.kind == "gaussian":
            p = self.prec
            self._mu, self._var = p.scalar(dist.mean), p.scalar(dist.var)
            self._shrink = self._var / (self._var + 1)

    def __repr__(self):
        return f"ChannelView({self.dist}, precision={self.prec.name})"

    def _out(self, values, scalar):
        return values[0] if scalar else values

    def _y(self, y):
        arr, scalar = _as_array(y)
        return self.prec.asarray(arr) if (self.prec.extended or arr.dtype != np.float64) else arr, scalar

    def _weights(self, y):
        """Unnormalised posterior weights (ny, natoms) and the shift s(y)."""
        d = (self._atoms[None, :] - y[:, None]) ** 2 / 2
        if self.prec.extended:
            return self._masses * self.prec.exp(-d), None
        s = d.min(axis=1, keepdims=True)
        return self._masses * np.exp(-(d - s)), s[:, 0]

    # -- output law ---------------------------------------------------------

    def output_density(self, y):
        y, scalar = self._y(y)
        p = self.prec
        root2pi = p.sqrt(2 * p.pi)
        kind = self.dist.kind
        if kind == "gaussian":
            v = self._var + 1
            out = p.exp(-((y - self._mu) ** 2) / (2 * v)) / p.sqrt(2 * p.pi * v)
        elif kind == "constant":
            out = p.exp(-((y - p.scalar(self.dist.value)) ** 2) / 2) / root2pi
        else:
            w, s = self._weights(y)
            out = w.sum(axis=1) / root2pi
            if s is not None:
                out = out * np.exp(-s)
        return self._out(out, scalar)

    def output_density_derivative(self, y):
        """p_Y'(y) by differentiating under the expectation."""
        y, scalar = self._y(y)
        p = self.prec
        kind = self.dist.kind
        if kind == "gaussian":
            out = -(y - self._mu) / (self._var + 1) * self.output_density(y)
        elif kind == "constant":
            out = -(y - p.scalar(self.dist.value)) * self.output_density(y)
        else:
            w, s = self._weights(y)
            out = (w * (self._atoms[None, :] - y[:, None])).sum(axis=1) / p.sqrt(2 * p.pi)
            if s is not None:
                out = out * np.exp(-s)
        return self._out(out, scalar)

    def log_output_density(self, y):
        y, scalar = self._y(y)
        p = self.prec
        if self.dist.kind in ("pmf", "density") and not p.extended:
            w, s = self._weights(y)
            out = np.log(w.sum(axis=1)) - s - 0.5 * np.log(2 * np.pi)
        else:
            out = p.log(self.output_density(y))
        return self._out(out, scalar)

    @cached_property
    def mean_y(self):
        return moment(self.dist, 1, self.prec, self.cfg.inner_order)

    @cached_property
    def std_y(self):
        m1 = self.mean_y
        var = moment(self.dist, 2, self.prec, self.cfg.inner_order) - m1 * m1 + 1
        return self.prec.sqrt(var) if self.prec.extended else math.sqrt(var)

    # -- conditional moments --------------------------------------------------

    def cond_mean(self, y):
        y, scalar = self._y(y)
        kind = self.dist.kind
        if kind == "gaussian":
            out = self._mu + self._shrink * (y - self._mu)
        elif kind == "constant":
            out = y * 0 + self.prec.scalar(self.dist.value)
        else:
            w, _ = self._weights(y)
            out = (w * self._atoms[None, :]).sum(axis=1) / w.sum(axis=1)
        return self._out(out, scalar)

    def central_moments(self, y, kmax: int):
        """Array of shape (kmax+1, ny) holding g_0(y), ..., g_kmax(y)."""
        if kmax < 0:
            raise InvalidArgument("kmax must be nonnegative")
        y, _ = self._y(y)
        p = self.prec
        out = p.zeros((kmax + 1, len(y)))
        out[0] = p.scalar(1)
        kind = self.dist.kind
        if kind == "gaussian":
            for k in range(2, kmax + 1, 2):
                out[k] = self._shrink ** (k // 2) * math.prod(range(k - 1, 0, -2))
            return out
        if kind == "constant":
            return out
        w, _ = self._weights(y)
        total = w.sum(axis=1)
        f = (w * self._atoms[None, :]).sum(axis=1) / total
        diff = self._atoms[None, :] - f[:, None]
        power = diff
        for k in range(2, kmax + 1):
            power = power * diff
            out[k] = (w * power).sum(axis=1) / total
        return out

    def cond_central_moment(self, y, k: int):
        y_arr, scalar = self._y(y)
        return self._out(self.central_moments(y_arr, k)[k], scalar)

    def tweedie(self, y):
        y, scalar = self._y(y)
        return self._out(y + self.output_density_derivative(y) / self.output_density(y), scalar)

    def q_prime(self, y):
        y, scalar = self._y(y)
        return self._out(y - self.cond_mean(y), scalar)

    # -- outer rule for integrals over y ------------------------------------

    def window(self):
        """Integration window for y and the panel width used by the composite rule."""
        tail = self.cfg.tail
        b = self.dist.bounds
        if b is None:
            mu, sd = float(self.mean_y), float(self.std_y)
            return mu - tail * sd, mu + tail * sd, sd
        lo, hi = b
        spread = (hi - lo) / 2
        # poles of f sit about pi/(2*spread) off the real axis
        return lo - tail, hi + tail, 1.0 / max(1.0, spread)

    @cached_property
    def _outer(self) -> QuadRule:
        p = self.prec
        if self.cfg.outer == "hermite":
            gh = gauss_hermite(self.cfg.outer_points, p)
            mu, sd = self.mean_y, self.std_y
            y = mu + sd * gh.nodes
            # weight = w_gh * p_Y(y) / phi_{mu,sd}(y), formed in logs
            log_phi = -(gh.nodes**2) / 2 - p.log(sd * p.sqrt(2 * p.pi))
            w = gh.weights * p.exp(self.log_output_density(y) - log_phi)
            keep = w > 0
            return QuadRule("gauss-hermite", y[keep], w[keep], self.cfg.outer_points)
        lo, hi, width = self.window()
        panels = max(1, math.ceil((hi - lo) / width))
        edges = np.linspace(lo, hi, panels + 1)
        rule = composite_legendre(edges, self.cfg.outer_points, p)
        w = rule.weights * self.output_density(rule.nodes)
        keep = w > 0
        return QuadRule("composite", rule.nodes[keep], w[keep], rule.order)

    def output_rule(self) -> QuadRule:
        """Nodes and weights with ``sum_i w_i h(y_i) ~= E[h(Y)]``."""
        return self._outer


@lru_cache(maxsize=64)
def channel_view(dist: InputDist, cfg: QuadConfig | None = None) -> ChannelView:
    """Shared, cached view; discretisation and the outer rule are built once."""
    return ChannelView(dist, cfg or QuadConfig())


# functional aliases -----------------------------------------------------------


def output_density(view: ChannelView, y):
    return view.output_density(y)


def cond_mean(view: ChannelView, y):
    return view.cond_mean(y)


def cond_central_moment(view: ChannelView, y, k: int):
    return view.cond_central_moment(y, k)


def tweedie(view: ChannelView, y):
    return view.tweedie(y)


def q_prime(view: ChannelView, y):
    return view.q_prime(y)
