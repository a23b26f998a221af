"""Exact partition combinatorics behind the derivative formula for E[X|Y=y].

A partition of r into parts >= 2 is stored by multiplicities
``(lam_2, ..., lam_l)``: ``lam_i`` parts equal to ``i``, trailing zeros
stripped.  So ``(2,)`` is 2+2, ``(0, 1)`` is the single part 3 and ``(0, 0, 1)``
the single part 4.
Everything here is exact integer arithmetic.
"""
from __future__ import annotations

import math
from functools import lru_cache

from .errors import InvalidArgument


class Partition(tuple):
    """Multiplicity-encoded integer partition with parts >= 2."""

    def __new__(cls, multiplicities=()):
        values = list(multiplicities)
        while values and values[-1] == 0:
            values.pop()
        if not values:
            raise InvalidArgument("a partition needs at least one part")
        if any(not isinstance(v, int) or v < 0 for v in values):
            raise InvalidArgument(f"multiplicities must be nonnegative integers: {multiplicities!r}")
        return super().__new__(cls, values)

    @property
    def degree(self) -> int:
        """Weighted degree r = sum_i i * lam_i."""
        return sum((i + 2) * lam for i, lam in enumerate(self))

    @property
    def parts(self) -> int:
        return sum(self)

    def mult(self, i: int) -> int:
        """Multiplicity of part size ``i`` (zero beyond the stored length)."""
        j = i - 2
        return self[j] if 0 <= j < len(self) else 0

    def __repr__(self):
        return f"Partition{tuple(self)!r}"


def _from_sizes(sizes) -> Partition:
    mult = [0] * (max(sizes) - 1)
    for s in sizes:
        mult[s - 2] += 1
    return Partition(mult)


def _sizes(r: int, largest: int):
    """Non-increasing sequences of parts in [2, largest] summing to r."""
    if r == 0:
        yield ()
        return
    for part in range(min(r, largest), 1, -1):
        for rest in _sizes(r - part, part):
            yield (part,) + rest


def _dense_key(lam: Partition, width: int):
    return tuple(lam) + (0,) * (width - len(lam))


@lru_cache(maxsize=None)
def enumerate_Pi(r: int) -> tuple[Partition, ...]:
    """All partitions of r into parts >= 2, in descending lexicographic order
    of the zero-padded multiplicity tuple (so ``(2,)`` precedes ``(0, 0, 1)``)."""
    if not isinstance(r, int) or r < 2:
        raise InvalidArgument(f"r must be an integer >= 2, got {r!r}")
    found = {_from_sizes(sizes) for sizes in _sizes(r, r)}
    return tuple(sorted(found, key=lambda lam: _dense_key(lam, r), reverse=True))


def multinomial(n: int, ks) -> int:
    ks = list(ks)
    if sum(ks) != n:
        raise InvalidArgument("multinomial parts must sum to n")
    out = math.factorial(n)
    for k in ks:
        out //= math.factorial(k)
    return out


def c_lambda(lam: Partition) -> int:
    """Number of cyclically-invariant ordered set partitions of an r-set
    whose blocks have the sizes described by ``lam``."""
    lam = Partition(lam)
    r, m = lam.degree, lam.parts
    block_sizes = [i + 2 for i, mult in enumerate(lam) for _ in range(mult)]
    count, rem = divmod(multinomial(m, lam) * multinomial(r, block_sizes), m)
    assert rem == 0
    return count


def e_lambda(lam: Partition) -> int:
    lam = Partition(lam)
    return (-1) ** (lam.parts - 1) * c_lambda(lam)


@lru_cache(maxsize=None)
def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, S(n, k); zero out of range."""
    if n < 0 or k < 0 or k > n:
        return 0
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def C_r(r: int, method: str = "stirling-formula") -> int:
    """Total count sum_{lam in Pi_r} c_lam, by either route."""
    if not isinstance(r, int) or r < 2:
        raise InvalidArgument(f"r must be an integer >= 2, got {r!r}")
    if method == "sum-of-c":
        return sum(c_lambda(lam) for lam in enumerate_Pi(r))
    if method != "stirling-formula":
        raise InvalidArgument(f"unknown method {method!r}")
    return sum(
        math.factorial(k - 1)
        * sum((-1) ** j * math.comb(r, j) * stirling2(r - j, k - j) for j in range(k + 1))
        for k in range(1, r + 1)
    )


def tau_plus(lam: Partition) -> list[tuple[Partition, int]]:
    """Moves (lam_i, lam_{i+1}) -> (lam_i - 1, lam_{i+1} + 1), coefficient lam_i."""
    lam = Partition(lam)
    out = []
    for i in range(2, len(lam) + 2):
        li = lam.mult(i)
        if li == 0:
            continue
        nu = list(lam) + [0]
        nu[i - 2] -= 1
        nu[i - 1] += 1
        out.append((Partition(nu), li))
    return out


def tau_minus(lam: Partition) -> list[tuple[Partition, int]]:
    """Moves (lam_{i-1}, lam_i) -> (lam_{i-1} + 1, lam_i - 1) for i >= 3 and
    bumps the leading entry lam_2 by one; coefficient i * lam_i."""
    lam = Partition(lam)
    out = []
    for i in range(3, len(lam) + 2):
        li = lam.mult(i)
        if li == 0:
            continue
        nu = list(lam)
        nu[i - 3] += 1
        nu[i - 2] -= 1
        nu[0] += 1
        out.append((Partition(nu), i * li))
    return out


@lru_cache(maxsize=None)
def _theta(r: int):
    """Inverse transition maps for degree r -> r + 1: nu -> [(lam, coeff)]."""
    plus: dict[Partition, list] = {}
    minus: dict[Partition, list] = {}
    for lam in enumerate_Pi(r):
        for nu, a in tau_plus(lam):
            plus.setdefault(nu, []).append((lam, a))
        for nu, b in tau_minus(lam):
            minus.setdefault(nu, []).append((lam, b))
    return plus, minus


def theta_plus(nu: Partition) -> list[tuple[Partition, int]]:
    nu = Partition(nu)
    return list(_theta(nu.degree - 1)[0].get(nu, [])) if nu.degree > 2 else []


def theta_minus(nu: Partition) -> list[tuple[Partition, int]]:
    nu = Partition(nu)
    return list(_theta(nu.degree - 1)[1].get(nu, [])) if nu.degree > 2 else []


@lru_cache(maxsize=None)
def _recurrence(r: int) -> dict:
    if r == 2:
        return {Partition((1,)): 1}
    prev = _recurrence(r - 1)
    plus, minus = _theta(r - 1)
    h = {}
    for nu in enumerate_Pi(r):
        h[nu] = (sum(prev[lam] * a for lam, a in plus.get(nu, ()))
                 - sum(prev[lam] * b for lam, b in minus.get(nu, ())))
    return h


def recurrence_coeffs(r: int) -> dict[Partition, int]:
    """Coefficients h_lam of f^(r-1) generated by the transition recurrence
    from h_(1) = 1."""
    if not isinstance(r, int) or r < 2:
        raise InvalidArgument(f"r must be an integer >= 2, got {r!r}")
    return dict(_recurrence(r))
