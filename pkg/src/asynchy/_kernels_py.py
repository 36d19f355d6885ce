"""Pure NumPy implementations of the pair-sweep kernels.

The compiled extension (``asynchy._kernels``) provides the same functions;
:mod:`asynchy._backend` picks whichever is available.  Scalar sums here go
through :func:`math.fsum`, which is exactly rounded, so the fallback is a
reference implementation as much as a backup.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def ipow(x: np.ndarray, k: int) -> np.ndarray:
    """Integer power by binary exponentiation (0**0 == 1).

    Using explicit multiplication chains keeps power-of-two rescalings of the
    base exact, which the positive-homogeneity identities rely on.
    """
    if k < 0:
        raise ValueError("exponent must be nonnegative")
    result = np.ones_like(x)
    base = x
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _expand(jlo: np.ndarray, jhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = np.maximum(jhi - jlo + 1, 0)
    total = int(counts.sum())
    i_arr = np.repeat(np.arange(1, len(jlo) + 1, dtype=np.int64), counts)
    ends = np.cumsum(counts)
    j_arr = (
        np.arange(total, dtype=np.int64)
        - np.repeat(ends - counts, counts)
        + np.repeat(jlo, counts)
    )
    return i_arr, j_arr


def signed_product_pair_sum(
    d1: np.ndarray, d2: np.ndarray, jlo: np.ndarray, jhi: np.ndarray, p1: int, p2: int
) -> float:
    """sum over window pairs of d1[i]**p1 * d2[j]**p2 (integer powers)."""
    i_arr, j_arr = _expand(jlo, jhi)
    terms = ipow(d1, p1)[i_arr - 1] * ipow(d2, p2)[j_arr - 1]
    return math.fsum(terms.tolist())


def abs_product_pair_sum(
    d1: np.ndarray, d2: np.ndarray, jlo: np.ndarray, jhi: np.ndarray, p1: float, p2: float
) -> float:
    """sum over window pairs of |d1[i]|**p1 * |d2[j]|**p2 (real powers)."""
    i_arr, j_arr = _expand(jlo, jhi)
    terms = (np.abs(d1) ** p1)[i_arr - 1] * (np.abs(d2) ** p2)[j_arr - 1]
    return math.fsum(terms.tolist())


def pair_stat_terms(
    times1: np.ndarray,
    times2: np.ndarray,
    jlo: np.ndarray,
    jhi: np.ndarray,
    ea: float,
    eb: float,
    ec: float,
    use_setdiff: bool,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair breakpoints max(t_i, s_j) and terms A**ea * B**eb * overlap**ec.

    A and B are the interval lengths, or the lengths of the one-sided set
    differences when ``use_setdiff`` is set.  Pairs stream in sweep order
    (nondecreasing breakpoints); duplicates are merged by the caller.
    """
    i_arr, j_arr = _expand(jlo, jhi)
    r1, l1 = times1[i_arr], times1[i_arr - 1]
    r2, l2 = times2[j_arr], times2[j_arr - 1]
    ov = np.minimum(r1, r2) - np.maximum(l1, l2)
    side1 = r1 - l1
    side2 = r2 - l2
    if use_setdiff:
        side1 = np.maximum(side1 - ov, 0.0)
        side2 = np.maximum(side2 - ov, 0.0)
    terms = side1**ea * side2**eb * ov**ec
    return np.maximum(r1, r2), terms


def cumulative_sum(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x)
