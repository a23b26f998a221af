"""Input laws for X, their moments, and the class-D membership test.

Moments are exact rationals whenever the law allows it (finite atoms,
uniform, triangular, Gaussian and constant laws with float parameters,
which are themselves exact binary rationals); otherwise they come from the
inner Gauss-Legendre rule over the support.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from pathlib import Path
from typing import Callable

import mpmath
import numpy as np

from .errors import InvalidArgument, UsageError
from .precision import DOUBLE, Precision, get_precision
from .quadrature import composite_legendre, gauss_legendre

# E[Y^{2n}] for n <= 48 plus the derivative-bound norm orders 2*r*q_r (r <= 12 gives 72)
DEFAULT_MOMENT_CAP = 2 * 48 * 3

KINDS = ("pmf", "density", "gaussian", "constant")


@dataclass(frozen=True)
class InputDist:
    """Law of X.  Build instances with the module-level constructors.

    ``pdf(x, prec)`` must accept an array (float64 or object/mpf, per
    ``prec``) of points inside ``support`` and return density values there.
    """

    kind: str
    name: str = ""
    atoms: tuple = ()
    pdf: Callable | None = field(default=None, compare=False)
    support: tuple | None = None
    breakpoints: tuple = ()
    mean: Fraction = Fraction(0)
    var: Fraction = Fraction(1)
    value: Fraction = Fraction(0)
    exact_moment_fn: Callable[[int], Fraction] | None = field(default=None, compare=False)
    moment_cap: int = DEFAULT_MOMENT_CAP

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown distribution kind {self.kind!r}")
        if self.kind == "gaussian" and not self.var > 0:
            raise InvalidArgument("gaussian variance must be positive")
        if self.kind == "pmf":
            total = sum(m for _, m in self.atoms)
            if abs(total - 1) > Fraction(1, 10**12):
                raise InvalidArgument(f"pmf masses sum to {float(total)!r}, not 1")
        if self.kind == "density":
            lo, hi = self.support
            if not lo < hi:
                raise InvalidArgument("density support must have lo < hi")
            mass = float(np.sum(self.inner_masses(DOUBLE, 200)))
            if abs(mass - 1) > 1e-9:
                raise InvalidArgument(f"density integrates to {mass!r} over its support, not 1")

    def __hash__(self):
        return hash((self.kind, self.name, self.atoms, self.support, self.mean, self.var, self.value, id(self.pdf)))

    def __eq__(self, other):
        if not isinstance(other, InputDist):
            return NotImplemented
        return hash(self) == hash(other) and self.pdf is other.pdf

    def __str__(self):
        return self.name or self.kind

    @property
    def compact(self) -> bool:
        return self.kind != "gaussian"

    @property
    def bounds(self) -> tuple[float, float] | None:
        """Smallest interval holding the support, or None if unbounded."""
        if self.kind == "pmf":
            return float(self.atoms[0][0]), float(self.atoms[-1][0])
        if self.kind == "density":
            return float(self.support[0]), float(self.support[1])
        if self.kind == "constant":
            return float(self.value), float(self.value)
        return None

    @property
    def halfwidth(self) -> float:
        """The bound M with supp(X) inside [-M, M]."""
        b = self.bounds
        if b is None:
            return math.inf
        return max(abs(b[0]), abs(b[1]))

    def pdf_at(self, x, prec: Precision = DOUBLE):
        """Density values, zero outside the support."""
        if self.kind != "density":
            raise InvalidArgument(f"{self} has no density")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = prec.tofloat(self.pdf(prec.asarray(x[inside]), prec))
        return out

    def inner_nodes(self, prec: Precision, order: int):
        """Composite Gauss-Legendre nodes over the support, split at breakpoints."""
        lo, hi = self.support
        edges = sorted({lo, hi, *(b for b in self.breakpoints if lo < b < hi)})
        per_panel = max(order // (len(edges) - 1), 8)
        rule = composite_legendre(edges, per_panel, prec)
        return rule.nodes, rule.weights

    def inner_masses(self, prec: Precision, order: int):
        x, w = self.inner_nodes(prec, order)
        return w * self.pdf(x, prec)

    def discretize(self, prec: Precision, order: int = 200):
        """Atoms and masses representing X (exact for pmf/constant)."""
        if self.kind == "pmf":
            return prec.asarray([a for a, _ in self.atoms]), prec.asarray([m for _, m in self.atoms])
        if self.kind == "constant":
            return prec.asarray([self.value]), prec.asarray([1])
        if self.kind == "density":
            x, w = self.inner_nodes(prec, order)
            return x, w * self.pdf(x, prec)
        raise InvalidArgument("gaussian inputs are handled in closed form")


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, Real) and math.isfinite(x):
        return Fraction(x)
    raise InvalidArgument(f"expected a finite real number, got {x!r}")


def pmf(atoms, name: str = "") -> InputDist:
    """Finite law from ``[(x, mass), ...]``; masses are renormalised exactly."""
    merged: dict[Fraction, Fraction] = {}
    for x, m in atoms:
        x, m = _frac(x), _frac(m)
        if m < 0:
            raise InvalidArgument(f"negative mass {float(m)} at atom {float(x)}")
        if m > 0:
            merged[x] = merged.get(x, Fraction(0)) + m
    if not merged:
        raise InvalidArgument("pmf needs at least one atom with positive mass")
    total = sum(merged.values())
    if abs(total - 1) > Fraction(1, 10**12):
        raise InvalidArgument(f"pmf masses sum to {float(total)!r}, not 1")
    return InputDist("pmf", name or "pmf", atoms=tuple((x, merged[x] / total) for x in sorted(merged)))


def two_point(a=1) -> InputDist:
    a = _frac(a)
    return pmf([(-a, Fraction(1, 2)), (a, Fraction(1, 2))], name=f"two-point(+-{float(a):g})")


def constant(c=0) -> InputDist:
    return InputDist("constant", f"constant({float(c):g})", value=_frac(c))


def gaussian(mean=0, var=1) -> InputDist:
    return InputDist("gaussian", f"gaussian({float(mean):g},{float(var):g})", mean=_frac(mean), var=_frac(var))


def _binomial_shift(center: Fraction, centred: Callable[[int], Fraction]):
    """Raw moments of center + U from those of U."""

    def moment(k):
        return sum(math.comb(k, j) * center ** (k - j) * centred(j) for j in range(k + 1))

    return moment


def uniform(halfwidth=1, center=0) -> InputDist:
    M, c = _frac(halfwidth), _frac(center)
    if M <= 0:
        raise InvalidArgument("halfwidth must be positive")
    density = 1 / (2 * M)

    def pdf(x, prec):
        return x * 0 + prec.scalar(density)

    def centred(j):
        return M**j / (j + 1) if j % 2 == 0 else Fraction(0)

    name = f"uniform[{float(c - M):g},{float(c + M):g}]"
    return InputDist("density", name, pdf=pdf, support=(c - M, c + M), breakpoints=(c,),
                     exact_moment_fn=_binomial_shift(c, centred))


def triangular(halfwidth=1) -> InputDist:
    M = _frac(halfwidth)
    if M <= 0:
        raise InvalidArgument("halfwidth must be positive")

    def pdf(x, prec):
        m = prec.scalar(M)
        return (m - abs(x)) / (m * m)

    def moment(k):
        return 2 * M**k / ((k + 1) * (k + 2)) if k % 2 == 0 else Fraction(0)

    return InputDist("density", f"triangular({float(M):g})", pdf=pdf, support=(-M, M), breakpoints=(Fraction(0),),
                     exact_moment_fn=moment)


def coswindow(halfwidth=1) -> InputDist:
    """Raised-cosine density (1 + cos(pi x / M)) / (2M) on [-M, M]."""
    M = _frac(halfwidth)
    if M <= 0:
        raise InvalidArgument("halfwidth must be positive")

    def pdf(x, prec):
        m = prec.scalar(M)
        return (1 + prec.cos(prec.pi * x / m)) / (2 * m)

    return InputDist("density", f"coswindow({float(M):g})", pdf=pdf, support=(-M, M), breakpoints=(Fraction(0),))


def density(pdf: Callable, support, breakpoints=(), name: str = "density") -> InputDist:
    """Compactly supported density; ``pdf(x, prec)`` must be elementwise."""
    lo, hi = (_frac(s) for s in support)
    return InputDist("density", name, pdf=pdf, support=(lo, hi), breakpoints=tuple(_frac(b) for b in breakpoints))


# ---------------------------------------------------------------------------
# moments


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


@lru_cache(maxsize=4096)
def exact_moment(dist: InputDist, k: int) -> Fraction | None:
    """E[X^k] as an exact rational, or None if only quadrature can give it."""
    if dist.kind == "pmf":
        return sum(m * x**k for x, m in dist.atoms)
    if dist.kind == "constant":
        return dist.value**k
    if dist.kind == "gaussian":
        mu, v = dist.mean, dist.var
        return sum(math.comb(k, 2 * j) * mu ** (k - 2 * j) * v**j * _double_factorial(2 * j - 1)
                   for j in range(k // 2 + 1))
    if dist.exact_moment_fn is not None:
        return dist.exact_moment_fn(k)
    return None


def moment(dist: InputDist, k: int, prec: Precision | str | None = DOUBLE, inner_order: int = 200):
    """E[X^k]; float in double precision, mpf in extended."""
    prec = get_precision(prec)
    if k < 0 or k != int(k):
        raise InvalidArgument(f"moment order must be a nonnegative integer, got {k!r}")
    if k > dist.moment_cap:
        raise InvalidArgument(f"moment order {k} exceeds the configured cap {dist.moment_cap}")
    exact = exact_moment(dist, k)
    if exact is not None:
        return prec.scalar(exact)
    x, w = dist.inner_nodes(prec, inner_order)
    total = np.sum(w * dist.pdf(x, prec) * x**k)
    return total if prec.extended else float(total)


def norm_q(dist: InputDist, q: float, inner_order: int = 200) -> float:
    """``(E|X|^q)^(1/q)`` for real ``q >= 1``."""
    if not q >= 1:
        raise InvalidArgument(f"norm order must be >= 1, got {q!r}")
    if float(q).is_integer() and int(q) % 2 == 0 and int(q) <= dist.moment_cap:
        exact = exact_moment(dist, int(q))
        if exact is not None:
            return float(mpmath.root(mpmath.mpf(exact.numerator) / exact.denominator, int(q)))
    if dist.kind == "pmf":
        total = sum(float(m) * abs(float(x)) ** q for x, m in dist.atoms)
    elif dist.kind == "constant":
        return abs(float(dist.value))
    elif dist.kind == "gaussian":
        mu, sigma = float(dist.mean), math.sqrt(float(dist.var))
        total = float(sigma**q * 2 ** (q / 2) * mpmath.gamma((q + 1) / 2) / mpmath.sqrt(mpmath.pi)
                      * mpmath.hyp1f1(-q / 2, 0.5, -(mu**2) / (2 * sigma**2)))
    else:
        x, w = dist.inner_nodes(DOUBLE, inner_order)
        total = float(np.sum(w * dist.pdf(x, DOUBLE) * np.abs(x) ** q))
    return total ** (1.0 / q)


@dataclass(frozen=True)
class MomentTable:
    raw: tuple
    norms: dict
    K: int


def moment_table(dist: InputDist, K: int, qs=(1, 2, 4, 8)) -> MomentTable:
    raw = tuple(moment(dist, k) for k in range(K + 1))
    return MomentTable(raw, {q: norm_q(dist, q) for q in qs}, K)


# ---------------------------------------------------------------------------
# class D


@dataclass(frozen=True)
class ClassDReport:
    member: bool
    violated: str | None = None
    witness: float | None = None
    detail: str = ""

    def __bool__(self):
        return self.member


def in_class_D(dist: InputDist, tol: float = 1e-12, grid_points: int = 1025) -> ClassDReport:
    """Compact support, even, and non-increasing on [0, inf) within ``tol``."""
    if not dist.compact:
        return ClassDReport(False, "compact-support", math.inf, "support is unbounded")
    if dist.kind == "constant":
        if dist.value != 0:
            return ClassDReport(False, "even", float(dist.value), "single atom away from the origin")
        return ClassDReport(True)
    if dist.kind == "pmf":
        masses = {x: m for x, m in dist.atoms}
        for x, m in dist.atoms:
            mirror = masses.get(-x, Fraction(0))
            if abs(float(m - mirror)) > tol:
                return ClassDReport(False, "even", float(x), f"mass {float(m)} at x vs {float(mirror)} at -x")
        positive = [(x, m) for x, m in dist.atoms if x >= 0]
        for (x0, m0), (x1, m1) in zip(positive, positive[1:]):
            if float(m1 - m0) > tol:
                return ClassDReport(False, "non-increasing", float(x1), f"mass rises from {float(m0)} to {float(m1)}")
        return ClassDReport(True)
    M = dist.halfwidth
    grid = np.linspace(0.0, M, grid_points)
    p_pos, p_neg = dist.pdf_at(grid), dist.pdf_at(-grid)
    gap = np.abs(p_pos - p_neg)
    if np.any(gap > tol):
        i = int(np.argmax(gap > tol))
        return ClassDReport(False, "even", float(grid[i]), f"p(x)={p_pos[i]:.6g} but p(-x)={p_neg[i]:.6g}")
    rise = np.diff(p_pos)
    if np.any(rise > tol):
        i = int(np.argmax(rise > tol))
        return ClassDReport(False, "non-increasing", float(grid[i + 1]), f"density rises by {rise[i]:.3g}")
    return ClassDReport(True)


# ---------------------------------------------------------------------------
# presets and spec files

PRESETS: dict[str, Callable[[], InputDist]] = {
    "two-point": two_point,
    "uniform": uniform,
    "triangular": triangular,
    "coswindow": coswindow,
    "gaussian": gaussian,
    "constant": constant,
    "shifted-uniform": lambda: uniform(1, center=1),
}


def _field(spec: dict, key: str, where: str, kind=float):
    if key not in spec:
        raise UsageError(f"{where}: missing field {key!r}")
    try:
        value = kind(spec[key])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{where}: field {key!r} is not a valid number: {spec[key]!r}") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise UsageError(f"{where}: field {key!r} must be finite")
    return value


def from_spec(spec: dict, where: str = "<spec>") -> InputDist:
    """Build a distribution from its JSON spec object."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise UsageError(f"{where}: expected a JSON object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "pmf":
            atoms = spec.get("atoms")
            if not isinstance(atoms, list) or not atoms:
                raise UsageError(f"{where}: field 'atoms' must be a non-empty list of [x, mass] pairs")
            for i, pair in enumerate(atoms):
                if not (isinstance(pair, list) and len(pair) == 2):
                    raise UsageError(f"{where}: atoms[{i}] must be a pair [x, mass], got {pair!r}")
            return pmf([(_field({"x": x}, "x", f"{where}: atoms[{i}]"), _field({"m": m}, "m", f"{where}: atoms[{i}]"))
                        for i, (x, m) in enumerate(atoms)])
        if kind == "uniform":
            return uniform(_field(spec, "halfwidth", where), spec.get("center", 0))
        if kind == "gaussian":
            return gaussian(_field(spec, "mean", where), _field(spec, "var", where))
        if kind == "constant":
            return constant(_field(spec, "value", where))
        if kind == "density":
            preset = spec.get("preset")
            builders = {"triangular": triangular, "coswindow": coswindow}
            if preset not in builders:
                raise UsageError(f"{where}: field 'preset' must be one of {sorted(builders)}, got {preset!r}")
            return builders[preset](_field(spec, "halfwidth", where))
    except InvalidArgument as exc:
        raise UsageError(f"{where}: {exc}") from exc
    raise UsageError(f"{where}: unknown distribution type {kind!r}")


def load(source: str) -> InputDist:
    """Resolve a preset name or a JSON spec file path."""
    if source in PRESETS:
        return PRESETS[source]()
    path = Path(source)
    if not path.exists():
        raise UsageError(f"--dist {source!r} is neither a preset ({', '.join(PRESETS)}) nor an existing file")
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_spec(spec, str(path))
