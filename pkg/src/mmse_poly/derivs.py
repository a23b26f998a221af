"""Derivatives of f(y) = E[X|Y=y] as polynomials in the conditional central
moments g_k(y), and the norm bounds they imply.

Two independent constructions of f^(r-1) are provided: repeated symbolic
differentiation of f' = g_2 under g_k' = g_{k+1} - k g_2 g_{k-1}
(discarding every term with a factor g_1), and the closed form
sum_{lam in Pi_r} e_lam g^lam.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelView, channel_view
from .dist import InputDist, norm_q
from .errors import InvalidArgument, NumericFailure
from .partitions import C_r, Partition, e_lambda, enumerate_Pi
from .quadrature import QuadConfig, l2_norm_pY


def _canon(mult) -> tuple:
    mult = list(mult)
    while mult and mult[-1] == 0:
        mult.pop()
    return tuple(mult)


class GPoly:
    """Integer combination of monomials g^lam = prod_i g_i^{lam_i}.

    Keys are multiplicity tuples indexed from g_2, as in ``Partition``; the
    empty tuple is the constant monomial 1.  Zero coefficients are never
    stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms: dict[tuple, int] = {}
        for key, c in (terms or {}).items():
            if c:
                key = _canon(key)
                self.terms[key] = self.terms.get(key, 0) + c
                if not self.terms[key]:
                    del self.terms[key]

    @classmethod
    def g(cls, i: int) -> "GPoly":
        """The single symbol g_i (g_0 = 1, g_1 = 0)."""
        if i == 0:
            return cls({(): 1})
        if i == 1:
            return cls()
        mult = [0] * (i - 1)
        mult[-1] = 1
        return cls({tuple(mult): 1})

    def __add__(self, other: "GPoly") -> "GPoly":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return GPoly(out)

    def __neg__(self) -> "GPoly":
        return GPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "GPoly") -> "GPoly":
        return self + (-other)

    def __mul__(self, other) -> "GPoly":
        if isinstance(other, int):
            return GPoly({k: c * other for k, c in self.terms.items()})
        out: dict[tuple, int] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                n = max(len(k1), len(k2))
                key = _canon(a + b for a, b in zip(k1 + (0,) * (n - len(k1)), k2 + (0,) * (n - len(k2))))
                out[key] = out.get(key, 0) + c1 * c2
        return GPoly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, GPoly):
            return self.terms == other.terms
        if isinstance(other, dict):
            return self == GPoly(other)
        return NotImplemented

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"GPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        pieces = []
        for key, c in sorted(self.terms.items(), key=lambda kc: _order_key(kc[0])):
            mono = " ".join(f"g{i + 2}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(key) if e)
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = mono if mag == 1 and mono else (f"{mag} {mono}".strip())
            pieces.append(f"{sign} {body}")
        text = " ".join(pieces)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def weighted_degrees(self) -> set[int]:
        return {sum((i + 2) * e for i, e in enumerate(k)) for k in self.terms}

    def max_index(self) -> int:
        return max((len(k) + 1 for k in self.terms), default=0)

    def items(self):
        """(Partition, coefficient) pairs in canonical order."""
        for key in sorted(self.terms, key=_order_key):
            yield (Partition(key) if key else key), self.terms[key]

    def derivative(self) -> "GPoly":
        """d/dy via the product rule and g_k' = g_{k+1} - k g_2 g_{k-1}."""
        out = GPoly()
        for key, c in self.terms.items():
            for idx, e in enumerate(key):
                if not e:
                    continue
                i = idx + 2
                rest = list(key)
                rest[idx] -= 1
                d_gi = GPoly.g(i + 1) - GPoly.g(2) * GPoly.g(i - 1) * i
                out = out + GPoly({tuple(rest): c * e}) * d_gi
        return out


def _order_key(key: tuple):
    # descending lexicographic on the padded tuple, matching enumerate_Pi
    return tuple(-v for v in key + (0,) * (32 - len(key)))


def symbolic_derivative(r: int) -> GPoly:
    """f^(r-1) by r-2 symbolic differentiations of f' = g_2."""
    if not isinstance(r, int) or r < 2:
        raise InvalidArgument(f"r must be an integer >= 2, got {r!r}")
    poly = GPoly.g(2)
    for _ in range(r - 2):
        poly = poly.derivative()
    return poly


def closed_form_derivative(r: int) -> GPoly:
    """f^(r-1) = sum over Pi_r of e_lam g^lam."""
    return GPoly({lam: e_lambda(lam) for lam in enumerate_Pi(r)})


def eval_gpoly(poly: GPoly, view: ChannelView, y):
    """Evaluate ``poly`` with g_k replaced by the channel's g_k(y)."""
    scalar = np.ndim(y) == 0
    y_arr = np.atleast_1d(y)
    prec = view.prec
    g = view.central_moments(y_arr, max(poly.max_index(), 2))
    total = prec.zeros(len(y_arr))
    for key, c in poly.terms.items():
        try:
            term = prec.scalar(c) if prec.extended else float(c)
        except OverflowError as exc:
            raise NumericFailure(f"coefficient {c} overflows the working precision") from exc
        for idx, e in enumerate(key):
            if e:
                term = term * g[idx + 2] ** e
        total = total + term
    if not np.all(prec.isfinite(total)):
        raise NumericFailure("overflow while evaluating the g-polynomial")
    return total[0] if scalar else total


def central_difference(func, y, order: int, h):
    """Central difference of ``order`` with step ``h``; truncation O(h^2)."""
    total = 0
    for j in range(order + 1):
        total = total + (-1) ** j * math.comb(order, j) * func(y + (order / 2 - j) * h)
    return total / h**order


def fd_derivative(view: ChannelView, y: float, order: int):
    """order-th derivative of f at y by iterated central differences.

    The step (|y|+1) * eps^(1/(order+2)) balances O(h^2) truncation against
    eps/h^order round-off.  Orders of 3 and above always difference values
    of f computed in extended precision.
    """
    if order < 1:
        raise InvalidArgument("derivative order must be >= 1")
    if order >= 3 and not view.prec.extended:
        view = channel_view(view.dist, replace(view.cfg, precision="extended"))
    prec = view.prec
    y = prec.scalar(y)
    h = (abs(y) + 1) * prec.scalar(prec.eps) ** (prec.scalar(1) / (order + 2))
    return central_difference(view.cond_mean, y, order, h)


def q_r(r: int) -> int:
    """floor((sqrt(8r+9) - 3) / 2), computed exactly with integer square roots."""
    root = math.isqrt(8 * r + 9)
    return (root - 3) // 2


def gamma_r(r: int) -> float:
    q = q_r(r)
    return math.exp(math.lgamma(2 * r * q + 1) / (4 * q))


def beta_r(r: int) -> float:
    t = (math.sqrt(6 * r + 7) - 1) / 3
    return t * t * (t + 0.5)


@dataclass(frozen=True)
class DerivBoundReport:
    r: int
    q_r: int
    gamma_r: float
    lhs: float
    rhs: float
    holds: bool
    beta_r: float | None = None
    rhs_beta: float | None = None

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def derivative_norm_bound(dist: InputDist, r: int, use_beta: bool = False,
                          cfg: QuadConfig | None = None) -> DerivBoundReport:
    """Compare ||f^(r-1)(Y)||_2 with 2^r C_r min(gamma_r, ||X||_{2 r q_r}^r).

    With ``use_beta`` the norm order 2 r q_r is replaced by 2 beta_r, beta_r
    being the refined exponent t^2 (t + 1/2), t = (sqrt(6r+7) - 1)/3.  That
    variant lacks a proof and is reported alongside, never used for
    ``holds``.
    """
    if not isinstance(r, int) or r < 2:
        raise InvalidArgument(f"r must be an integer >= 2, got {r!r}")
    cfg = cfg or QuadConfig(precision="double")
    q = q_r(r)
    order = 2 * r * q
    if order > dist.moment_cap:
        raise InvalidArgument(f"needs ||X||_{order}, beyond the moment cap {dist.moment_cap}")
    try:
        x_norm_r = norm_q(dist, order) ** r
    except OverflowError as exc:
        raise InvalidArgument(f"||X||_{order}^{r} overflows") from exc
    scale = 2**r * C_r(r)
    rhs = scale * min(gamma_r(r), x_norm_r)
    view = channel_view(dist, cfg)
    poly = closed_form_derivative(r)
    lhs = float(l2_norm_pY(lambda y: eval_gpoly(poly, view, y), view))
    b = rhs_b = None
    if use_beta:
        b = beta_r(r)
        k = 2 * b
        gamma_b = math.exp(r * math.lgamma(k + 1) / (2 * k))
        rhs_b = scale * min(gamma_b, norm_q(dist, k) ** r)
    return DerivBoundReport(r, q, gamma_r(r), lhs, rhs, lhs <= rhs, b, rhs_b)
