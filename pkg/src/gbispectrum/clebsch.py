"""SO(3) Clebsch-Gordan coefficients <l1 m1; l2 m2 | l m> (Condon-Shortley phase).

The Racah sum is rewritten with binomial coefficients,

    S = sum_k (-1)^k C(l1+l2-l, k) C(l1-l2+l, l1-m1-k) C(l2-l1+l, l2+m2-k),

which is an exact integer, and

    CG^2 = S^2 (2l+1) prod(l_i +- m_i)! / ((l1+l2-l)! (l1-l2+l)! (l2-l1+l)! (l1+l2+l+1)!)

is an exact rational.  Only the final square root is done in floating point,
so values are correctly rounded to within an ulp for any degree.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial, sqrt

import numpy as np

__all__ = ["cg_coefficient", "cg_block", "admissible", "CGTable"]


def admissible(l1: int, l2: int, l: int) -> bool:
    """Triangle rule ``|l1 - l2| <= l <= l1 + l2`` with nonnegative degrees."""
    return min(l1, l2, l) >= 0 and abs(l1 - l2) <= l <= l1 + l2


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return factorial(n)


def cg_coefficient(l1: int, m1: int, l2: int, m2: int, l: int, m: int) -> float:
    """Clebsch-Gordan coefficient; exactly 0.0 when a selection rule fails."""
    if m1 + m2 != m or not admissible(l1, l2, l):
        return 0.0
    if abs(m1) > l1 or abs(m2) > l2 or abs(m) > l:
        return 0.0
    n1 = l1 + l2 - l
    A = l1 - l2 + l
    B = l2 - l1 + l
    lo = max(0, l2 - l - m1, l1 - l + m2)
    hi = min(n1, l1 - m1, l2 + m2)
    S = 0
    for k in range(lo, hi + 1):
        term = comb(n1, k) * comb(A, l1 - m1 - k) * comb(B, l2 + m2 - k)
        S += -term if k & 1 else term
    if S == 0:
        return 0.0
    num = (2 * l + 1) * _fact(l + m) * _fact(l - m) * _fact(l1 - m1) * _fact(l1 + m1)
    num *= _fact(l2 - m2) * _fact(l2 + m2) * S * S
    den = _fact(n1) * _fact(A) * _fact(B) * _fact(l1 + l2 + l + 1)
    # int / int true division is correctly rounded and num <= den, so no overflow
    val = sqrt(num / den)
    return val if S > 0 else -val


@lru_cache(maxsize=None)
def cg_block(l1: int, l2: int, l: int) -> np.ndarray:
    """Array ``C[m1 + l1, m2 + l2] = <l1 m1; l2 m2 | l, m1 + m2>`` (read-only)."""
    out = np.zeros((2 * l1 + 1, 2 * l2 + 1))
    if admissible(l1, l2, l):
        for m1 in range(-l1, l1 + 1):
            for m2 in range(max(-l2, -l - m1), min(l2, l - m1) + 1):
                out[m1 + l1, m2 + l2] = cg_coefficient(l1, m1, l2, m2, l, m1 + m2)
    out.setflags(write=False)
    return out


class CGTable:
    """Read-only mapping ``(l1, m1, l2, m2, l) -> <l1 m1; l2 m2 | l, m1+m2>``.

    Backed by per-triple blocks that are computed on first use and shared
    process-wide.
    """

    def __init__(self, L: int | None = None):
        self.L = L

    def __getitem__(self, key) -> float:
        l1, m1, l2, m2, l = key
        if abs(m1) > l1 or abs(m2) > l2 or abs(m1 + m2) > l:
            return 0.0
        return float(cg_block(l1, l2, l)[m1 + l1, m2 + l2])

    def block(self, l1: int, l2: int, l: int) -> np.ndarray:
        return cg_block(l1, l2, l)
