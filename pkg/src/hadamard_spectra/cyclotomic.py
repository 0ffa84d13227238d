"""Exact vanishing test for sums of roots of unity.

A sum  sum_j exp(2 pi i t_j)  with rational t_j is an integer polynomial
P evaluated at a primitive D-th root of unity, D the common denominator of
the t_j.  It vanishes iff the D-th cyclotomic polynomial divides P.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable


def _divisors(n: int) -> list:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _poly_divmod_monic(num: list, den: list) -> tuple[list, list]:
    """Divide integer polynomials (lowest degree first) by a monic divisor."""
    num = list(num)
    dn = len(den) - 1
    if len(num) - 1 < dn:
        return [0], num
    quot = [0] * (len(num) - dn)
    for k in range(len(num) - 1, dn - 1, -1):
        c = num[k]
        if c:
            quot[k - dn] = c
            for i, dc in enumerate(den):
                num[k - dn + i] -= c * dc
    rem = num[:dn] or [0]
    return quot, rem


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> tuple:
    """Coefficients of the n-th cyclotomic polynomial, lowest degree first."""
    if n < 1:
        raise ValueError("cyclotomic index must be positive")
    p = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for d in _divisors(n)[:-1]:
        p, rem = _poly_divmod_monic(p, list(cyclotomic(d)))
        assert not any(rem)
    return tuple(p)


def root_sum_vanishes(exponents: Iterable) -> bool:
    """True iff sum_j exp(2 pi i t_j) == 0 exactly, for rational t_j."""
    ts = [Fraction(t) for t in exponents]
    if not ts:
        return True
    D = 1
    for t in ts:
        D = math.lcm(D, t.denominator)
    if D == 1:
        return False  # every term equals 1
    P = [0] * D
    for t in ts:
        P[(t.numerator * (D // t.denominator)) % D] += 1
    _, rem = _poly_divmod_monic(P, list(cyclotomic(D)))
    return not any(rem)
