"""Working-precision backends.

Numerical kernels in this package are written once against a small
array interface and run either in IEEE double (plain ``float64`` numpy
arrays) or in extended precision: numpy object arrays of gmpy2 ``mpfr``
values with a 113-bit significand (IEEE quadruple).  gmpy2 rounds every
operation to the precision of the thread's current context, so selecting
extended precision raises that context's precision to at least 113 bits.
Small dense linear algebra in extended precision goes through an mpmath
context of the same precision.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational

import gmpy2
import numpy as np
from mpmath.ctx_mp import MPContext
from mpmath.libmp import to_rational

from .errors import InvalidArgument

EXTENDED_BITS = 113


def _raise_context_precision(bits: int) -> None:
    ctx = gmpy2.get_context()
    if ctx.precision < bits:
        ctx.precision = bits


@dataclass(frozen=True)
class Precision:
    name: str
    bits: int

    @property
    def extended(self) -> bool:
        return self.name == "extended"

    @cached_property
    def ctx(self) -> MPContext:
        """mpmath context at this precision, for dense linear algebra."""
        ctx = MPContext()
        ctx.prec = self.bits
        return ctx

    @property
    def eps(self) -> float:
        return 2.0 ** (1 - self.bits)

    @property
    def pi(self):
        if not self.extended:
            return np.pi
        _raise_context_precision(self.bits)
        return gmpy2.const_pi()

    def scalar(self, x):
        """Convert an int, float, Fraction, mpf or mpfr to a working scalar."""
        if not self.extended:
            return float(x)
        if isinstance(x, Rational) and not isinstance(x, int):
            return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
        if isinstance(x, (int, float, type(gmpy2.mpfr(0)), np.floating, np.integer)):
            return gmpy2.mpfr(x)
        # mpmath numbers and anything else exposing an exact ratio
        if hasattr(x, "_mpf_"):
            num, den = to_rational(x._mpf_)
            return gmpy2.mpfr(gmpy2.mpq(num, den))
        return gmpy2.mpfr(x)

    def to_mpmath(self, x):
        """Exact conversion of a working scalar into ``self.ctx``."""
        num, den = (x, 1) if isinstance(x, int) else x.as_integer_ratio()
        return self.ctx.mpf(int(num)) / int(den)

    def asarray(self, values) -> np.ndarray:
        if not self.extended:
            arr = np.asarray(values, dtype=object if _has_fraction(values) else None)
            return arr.astype(np.float64)
        arr = np.asarray(values, dtype=object)
        return self._ufunc("scalar")(arr) if arr.ndim else np.asarray(self.scalar(arr.item()), dtype=object)

    def zeros(self, shape) -> np.ndarray:
        if not self.extended:
            return np.zeros(shape)
        out = np.empty(shape, dtype=object)
        out.fill(gmpy2.mpfr(0))
        return out

    def tofloat(self, values) -> np.ndarray | float:
        arr = np.asarray(values, dtype=np.float64) if np.ndim(values) else float(values)
        return arr

    def _ufunc(self, name):
        cache = self.__dict__.setdefault("_ufuncs", {})
        if name not in cache:
            fn = self.scalar if name == "scalar" else getattr(gmpy2, name)
            cache[name] = np.frompyfunc(fn, 1, 1)
        return cache[name]

    def _apply(self, name, values):
        if not self.extended:
            return getattr(np, name)(values)
        out = self._ufunc(name)(values)
        return out

    def exp(self, values):
        return self._apply("exp", values)

    def log(self, values):
        return self._apply("log", values)

    def sqrt(self, values):
        return self._apply("sqrt", values)

    def cos(self, values):
        return self._apply("cos", values)

    def sin(self, values):
        return self._apply("sin", values)

    def isfinite(self, values) -> np.ndarray:
        if not self.extended:
            return np.isfinite(values)
        return np.frompyfunc(gmpy2.is_finite, 1, 1)(values).astype(bool)


DOUBLE = Precision("double", 53)
EXTENDED = Precision("extended", EXTENDED_BITS)
_raise_context_precision(EXTENDED_BITS)


def get_precision(name: str | Precision | None = None) -> Precision:
    """Resolve a precision name; ``None`` falls back to ``$MMSE_PRECISION``."""
    if isinstance(name, Precision):
        return name
    if name is None:
        name = os.environ.get("MMSE_PRECISION", "double")
    if name == "double":
        return DOUBLE
    if name == "extended":
        _raise_context_precision(EXTENDED_BITS)
        return EXTENDED
    raise InvalidArgument(f"unknown precision {name!r}; expected 'double' or 'extended'")


def _has_fraction(values) -> bool:
    if isinstance(values, Fraction):
        return True
    if isinstance(values, (list, tuple)):
        return any(_has_fraction(v) for v in values)
    return False
