"""Test functionals and their evaluation on a sampled path.

The central statistic is the pair sum: a function f of two increments is
summed over every pair of overlapping observation intervals (i, j) with
max(t_i, s_j) <= horizon, generalizing the covariance estimator of
Hayashi & Yoshida (2005) to arbitrary f.  Marginal sums evaluate a
one-argument function over a single component's increments.  Normalized
variants multiply by rate**(p/2 - 1), where p is the functional's
homogeneity degree and the rate is the caller's observation-frequency
scale (typically n, or a deterministic law r(n)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _backend
from ._kernels_py import ipow
from .errors import ParameterError
from .model import PathRecord, increments_on
from .schemes import GridScheme, ObservationScheme, Scheme, expand_windows, interval_windows

__all__ = [
    "SignedProductPower",
    "AbsProductPower",
    "PerturbedProductPower",
    "Custom",
    "OneDimPower",
    "CustomOneDim",
    "PairFunctional",
    "MarginalFunctional",
    "parse_functional",
    "pair_degrees",
    "marginal_degree",
    "evaluate_pair_functional",
    "evaluate_marginal_functional",
    "pair_sum",
    "marginal_sum",
    "normalized_pair_sum",
    "normalized_marginal_sum",
]


@dataclass(frozen=True)
class SignedProductPower:
    """f(x, y) = x**p1 * y**p2 with nonnegative integer exponents.

    Positively homogeneous of degree p1 in x and p2 in y; 0**0 == 1, so a
    zero exponent makes the factor neutral.
    """

    p1: int
    p2: int

    def __post_init__(self) -> None:
        if not (isinstance(self.p1, (int, np.integer)) and isinstance(self.p2, (int, np.integer))):
            raise ParameterError("exponents must be integers")
        if self.p1 < 0 or self.p2 < 0:
            raise ParameterError("exponents must be >= 0")


@dataclass(frozen=True)
class AbsProductPower:
    """f(x, y) = |x|**p1 * |y|**p2 with nonnegative real exponents."""

    p1: float
    p2: float

    def __post_init__(self) -> None:
        if self.p1 < 0 or self.p2 < 0:
            raise ParameterError("exponents must be >= 0")


@dataclass(frozen=True)
class PerturbedProductPower:
    """f~(x, y) = (1 + ||(x, y)||) * base(x, y).

    The multiplier tends to 1 at the origin, so the normalized pair sum of
    the perturbed functional shares the base functional's limit.
    """

    base: Union[SignedProductPower, AbsProductPower]


@dataclass(frozen=True)
class Custom:
    """Arbitrary scalar function of two increments.

    ``degrees`` declares per-argument positive-homogeneity degrees when they
    are known; without them the functional is excluded from limit formulas.
    Set ``vectorized`` when ``fn`` accepts equal-length arrays.
    """

    fn: Callable
    degrees: tuple[float, float] | None = None
    vectorized: bool = False


@dataclass(frozen=True)
class OneDimPower:
    """g(x) = x**p (signed, integer p) or |x|**p (unsigned, real p >= 0)."""

    p: float
    signed: bool = True

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ParameterError("exponent must be >= 0")
        if self.signed and float(self.p) != int(self.p):
            raise ParameterError("signed powers need an integer exponent")


@dataclass(frozen=True)
class CustomOneDim:
    """Arbitrary scalar function of one increment."""

    fn: Callable
    degree: float | None = None
    vectorized: bool = False


PairFunctional = Union[SignedProductPower, AbsProductPower, PerturbedProductPower, Custom]
MarginalFunctional = Union[OneDimPower, CustomOneDim]

PAIR_TYPES = (SignedProductPower, AbsProductPower, PerturbedProductPower, Custom)
MARGINAL_TYPES = (OneDimPower, CustomOneDim)


def parse_functional(text: str) -> Union[PairFunctional, MarginalFunctional]:
    """Parse the compact CLI form of a functional.

    ``hy`` | ``spp:P1,P2`` | ``app:P1,P2`` | ``pert:<base>`` |
    ``pow:P`` | ``abspow:P``
    """
    try:
        if text == "hy":
            return SignedProductPower(1, 1)
        kind, _, rest = text.partition(":")
        if kind == "spp":
            a, b = rest.split(",")
            return SignedProductPower(int(a), int(b))
        if kind == "app":
            a, b = rest.split(",")
            return AbsProductPower(float(a), float(b))
        if kind == "pert":
            base = parse_functional(rest)
            if not isinstance(base, (SignedProductPower, AbsProductPower)):
                raise ParameterError("pert: base must be spp or app")
            return PerturbedProductPower(base)
        if kind == "pow":
            return OneDimPower(int(rest), signed=True)
        if kind == "abspow":
            return OneDimPower(float(rest), signed=False)
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"cannot parse functional {text!r}: {exc}") from exc
    raise ParameterError(f"unknown functional {text!r}")


def pair_degrees(f: PairFunctional) -> tuple[float, float] | None:
    """Declared per-argument homogeneity degrees, or None when unknown."""
    if isinstance(f, (SignedProductPower, AbsProductPower)):
        return (float(f.p1), float(f.p2))
    if isinstance(f, PerturbedProductPower):
        return pair_degrees(f.base)
    if isinstance(f, Custom):
        return f.degrees
    raise ParameterError(f"not a pair functional: {f!r}")


def marginal_degree(g: MarginalFunctional) -> float | None:
    if isinstance(g, OneDimPower):
        return float(g.p)
    if isinstance(g, CustomOneDim):
        return g.degree
    raise ParameterError(f"not a one-dimensional functional: {g!r}")


def evaluate_pair_functional(f: PairFunctional, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized evaluation of f at paired increments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(f, SignedProductPower):
        return ipow(x, f.p1) * ipow(y, f.p2)
    if isinstance(f, AbsProductPower):
        return np.abs(x) ** f.p1 * np.abs(y) ** f.p2
    if isinstance(f, PerturbedProductPower):
        return (1.0 + np.hypot(x, y)) * evaluate_pair_functional(f.base, x, y)
    if isinstance(f, Custom):
        if f.vectorized:
            return np.asarray(f.fn(x, y), dtype=float)
        return np.array([f.fn(a, b) for a, b in zip(x, y)], dtype=float)
    raise ParameterError(f"not a pair functional: {f!r}")


def evaluate_marginal_functional(g: MarginalFunctional, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if isinstance(g, OneDimPower):
        return ipow(x, int(g.p)) if g.signed else np.abs(x) ** g.p
    if isinstance(g, CustomOneDim):
        if g.vectorized:
            return np.asarray(g.fn(x), dtype=float)
        return np.array([g.fn(a) for a in x], dtype=float)
    raise ParameterError(f"not a one-dimensional functional: {g!r}")


def _as_arrays(scheme: Scheme) -> ObservationScheme:
    return scheme.materialize() if isinstance(scheme, GridScheme) else scheme


def pair_sum(f: PairFunctional, scheme: Scheme, path: PathRecord) -> float:
    """Sum of f over increment pairs with overlapping observation intervals
    and max(t_i, s_j) <= horizon.

    With f(x, y) = x*y this is the covariance estimator for asynchronous
    observations.  Terms accumulate with compensated summation.
    """
    scheme = _as_arrays(scheme)
    t1, t2 = scheme.times1, scheme.times2
    jlo, jhi, n1, jcut = interval_windows(t1, t2, scheme.horizon)
    jhi = np.minimum(jhi, jcut)
    if n1 == 0 or jcut == 0:
        return 0.0
    d1 = increments_on(path, t1[: n1 + 1], 1)
    d2 = increments_on(path, t2[: jcut + 1], 2)
    jlo = np.ascontiguousarray(jlo, dtype=np.int64)
    jhi = np.ascontiguousarray(jhi, dtype=np.int64)
    if isinstance(f, SignedProductPower):
        return _backend.signed_product_pair_sum(
            np.ascontiguousarray(d1), np.ascontiguousarray(d2), jlo, jhi, f.p1, f.p2
        )
    if isinstance(f, AbsProductPower):
        return _backend.abs_product_pair_sum(
            np.ascontiguousarray(d1), np.ascontiguousarray(d2), jlo, jhi, f.p1, f.p2
        )
    i_arr, j_arr = expand_windows(jlo, jhi)
    terms = evaluate_pair_functional(f, d1[i_arr - 1], d2[j_arr - 1])
    return math.fsum(terms.tolist())


def marginal_sum(
    g: MarginalFunctional, scheme: Scheme, path: PathRecord, component: int
) -> float:
    """Sum of g over one component's increments with t_i <= horizon."""
    scheme = _as_arrays(scheme)
    times = scheme.times(component)
    icut = int(np.searchsorted(times, scheme.horizon, side="right")) - 1
    if icut == 0:
        return 0.0
    d = increments_on(path, times[: icut + 1], component)
    return math.fsum(evaluate_marginal_functional(g, d).tolist())


def _normalization(p: float, rate: float) -> float:
    if p < 0:
        raise ParameterError("p must be >= 0")
    if rate <= 0:
        raise ParameterError("rate must be positive")
    expo = p / 2.0 - 1.0
    return 1.0 if expo == 0.0 else float(rate) ** expo


def normalized_pair_sum(
    p: float, f: PairFunctional, scheme: Scheme, path: PathRecord, rate: float
) -> float:
    """rate**(p/2 - 1) times :func:`pair_sum`."""
    return _normalization(p, rate) * pair_sum(f, scheme, path)


def normalized_marginal_sum(
    p: float,
    g: MarginalFunctional,
    scheme: Scheme,
    path: PathRecord,
    component: int,
    rate: float,
) -> float:
    """rate**(p/2 - 1) times :func:`marginal_sum`."""
    return _normalization(p, rate) * marginal_sum(g, scheme, path, component)
