"""Matrix permanents: Ryser's formula with Gray-code updates, and brute force."""

from __future__ import annotations

import itertools
import math

import numpy as np

MAX_RYSER_ORDER = 20
MAX_NAIVE_ORDER = 8


def _as_square(a, limit: int, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] < 1:
        raise ValueError(f"expected a square matrix (or a stack of them), got shape {a.shape}")
    if a.shape[-1] > limit:
        raise ValueError(f"{name}: order {a.shape[-1]} exceeds the limit of {limit}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def permanent(a):
    """Permanent of a square matrix, or of each matrix in a stack ``(..., n, n)``.

    Ryser: ``Per(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij`` over
    column subsets ``S``, visited in Gray-code order so each step adds or
    removes one column from the running row sums. Terms are accumulated
    with Neumaier compensation.
    """
    a = _as_square(a, MAX_RYSER_ORDER, "permanent")
    n = a.shape[-1]
    batch = a.shape[:-2]
    rowsum = np.zeros(batch + (n,))
    total = np.zeros(batch)
    comp = np.zeros(batch)
    gray = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            rowsum += a[..., :, j]
        else:
            rowsum -= a[..., :, j]
        term = np.prod(rowsum, axis=-1)
        if bin(gray).count("1") & 1:
            term = -term
        t = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - t) + term, (term - t) + total)
        total = t
    result = (total + comp) * (-1.0) ** n
    return result if result.ndim else float(result)


def permanent_naive(a) -> float:
    """Permanent by summing over all ``n!`` permutations."""
    a = _as_square(a, MAX_NAIVE_ORDER, "permanent_naive")
    if a.ndim != 2:
        raise ValueError("permanent_naive takes a single matrix")
    n = a.shape[0]
    rows = range(n)
    return math.fsum(
        math.prod(a[i, p[i]] for i in rows) for p in itertools.permutations(range(n))
    )
