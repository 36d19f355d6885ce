"""Limit targets for the pair and marginal sums.

Covers the two families of limits:

* non-normalized sums converge to functionals of the jump ledger
  (:func:`jump_sum`, :func:`marginal_jump_sum`);
* normalized sums converge to Stieltjes integrals of Gaussian moments of the
  instantaneous covariance against limits of the scheme statistics
  (:func:`synchronous_limit`, :func:`marginal_limit`,
  :func:`uncorrelated_limit`, :func:`product_power_limit` and the
  closed-form presets in :func:`product_power_limit_preset`).

The scheme-statistic limits themselves are unknown in general; callers pass
the empirical step functions computed at a large n as their proxies.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import gamma as _gamma
from scipy.special import hyp2f1

from .errors import ContractError, InputError, ParameterError
from .functionals import (
    AbsProductPower,
    Custom,
    CustomOneDim,
    MarginalFunctional,
    OneDimPower,
    PairFunctional,
    PerturbedProductPower,
    SignedProductPower,
    evaluate_marginal_functional,
    evaluate_pair_functional,
    marginal_degree,
    pair_degrees,
)
from .model import JumpEvent, SemimartingaleSpec
from .scheme_stats import (
    StepFunction,
    pair_overlap_power_sum,
    split_overlap_power_sum,
)
from .schemes import Scheme

__all__ = [
    "normal_moment",
    "abs_normal_moment",
    "even_triple_exponents",
    "normal_expectation",
    "marginal_normal_expectation",
    "jump_sum",
    "marginal_jump_sum",
    "stieltjes",
    "synchronous_limit",
    "marginal_limit",
    "uncorrelated_limit",
    "product_power_limit",
    "product_power_limit_preset",
    "split_stat_requirements",
    "split_stat_table",
    "preset_requirements",
    "preset_stat_table",
    "PRESET_TAGS",
]


def normal_moment(k: int) -> float:
    """k-th moment of a standard normal: (k-1)!! for even k, 0 for odd."""
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ParameterError("k must be a nonnegative integer")
    if k % 2:
        return 0.0
    out = 1.0
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def abs_normal_moment(p: float) -> float:
    """E|Z|**p for a standard normal and real p >= 0."""
    if p < 0:
        raise ParameterError("p must be >= 0")
    return 2.0 ** (p / 2.0) * _gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)


def even_triple_exponents(p1: int, p2: int) -> list[tuple[int, int, int]]:
    """All (k, l, m) of even nonnegative integers with k <= p1, l + m <= p2
    and p1 + p2 - (k + l + m) even.

    These index the nonvanishing terms in the moment expansion of
    E[X**p1 * Y**p2] for jointly Gaussian (X, Y) split across overlap and
    set-difference contributions; the set is empty whenever p1 + p2 is odd.
    """
    if p1 < 0 or p2 < 0 or not isinstance(p1, (int, np.integer)) or not isinstance(p2, (int, np.integer)):
        raise ParameterError("p1 and p2 must be nonnegative integers")
    out = []
    for k in range(0, p1 + 1, 2):
        for l in range(0, p2 + 1, 2):
            for m in range(0, p2 - l + 1, 2):
                if (p1 + p2 - (k + l + m)) % 2 == 0:
                    out.append((k, l, m))
    return out


def _sigma_rho(cov: np.ndarray) -> tuple[float, float, float]:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2):
        raise InputError("covariance must be 2x2")
    v1, v2, c, c2 = cov[0, 0], cov[1, 1], cov[0, 1], cov[1, 0]
    scale = max(v1, v2, 1.0)
    if abs(c - c2) > 1e-12 * scale:
        raise InputError("covariance must be symmetric")
    if v1 < 0 or v2 < 0 or c * c > v1 * v2 * (1.0 + 1e-12) + 1e-300:
        raise InputError("covariance must be positive semidefinite")
    s1, s2 = math.sqrt(max(v1, 0.0)), math.sqrt(max(v2, 0.0))
    rho = 0.0 if s1 * s2 == 0.0 else min(1.0, max(-1.0, c / (s1 * s2)))
    return s1, s2, rho


def _signed_product_moment(p1: int, p2: int, s1: float, s2: float, rho: float) -> float:
    total = 0.0
    for l in range(0, p2 + 1, 2):
        if (p1 + p2 - l) % 2:
            continue
        total += (
            math.comb(p2, l)
            * normal_moment(l)
            * normal_moment(p1 + p2 - l)
            * (1.0 - rho * rho) ** (l / 2.0)
            * rho ** (p2 - l)
        )
    return s1**p1 * s2**p2 * total


def _abs_product_moment(p1: float, p2: float, s1: float, s2: float, rho: float) -> float:
    # Nabeya's closed form for E|X|^a |Y|^b under a standard bivariate normal
    pref = 2.0 ** ((p1 + p2) / 2.0) / math.pi * _gamma((p1 + 1) / 2.0) * _gamma((p2 + 1) / 2.0)
    return s1**p1 * s2**p2 * pref * float(hyp2f1(-p1 / 2.0, -p2 / 2.0, 0.5, rho * rho))


@lru_cache(maxsize=16)
def _gh_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = hermegauss(order)
    return nodes, weights / math.sqrt(2.0 * math.pi)


def normal_expectation(f: PairFunctional, cov: np.ndarray, quad_order: int = 40) -> float:
    """E[f(Z)] for Z ~ N(0, cov) on R^2.

    Product powers use exact closed forms (a finite moment expansion for the
    signed family, a hypergeometric formula for the absolute family).
    Custom functionals fall back to tensor-product Gauss-Hermite quadrature
    with ``quad_order`` nodes per axis, which is exact for polynomials of
    degree < 2*quad_order per axis but converges slowly across kinks.
    """
    s1, s2, rho = _sigma_rho(cov)
    if isinstance(f, SignedProductPower):
        return _signed_product_moment(f.p1, f.p2, s1, s2, rho)
    if isinstance(f, AbsProductPower):
        return _abs_product_moment(f.p1, f.p2, s1, s2, rho)
    if isinstance(f, PerturbedProductPower):
        raise ContractError("perturbed functionals have no Gaussian-moment closed form")
    if isinstance(f, Custom):
        u, w = _gh_rule(quad_order)
        u1 = np.repeat(u, len(u))
        u2 = np.tile(u, len(u))
        z1 = s1 * u1
        z2 = rho * s2 * u1 + math.sqrt(max(1.0 - rho * rho, 0.0)) * s2 * u2
        vals = evaluate_pair_functional(f, z1, z2)
        ww = np.repeat(w, len(w)) * np.tile(w, len(w))
        return math.fsum((ww * vals).tolist())
    raise ParameterError(f"not a pair functional: {f!r}")


def marginal_normal_expectation(g: MarginalFunctional, quad_order: int = 40) -> float:
    """E[g(Z)] for a standard normal Z."""
    if isinstance(g, OneDimPower):
        return normal_moment(int(g.p)) if g.signed else abs_normal_moment(g.p)
    if isinstance(g, CustomOneDim):
        u, w = _gh_rule(quad_order)
        vals = evaluate_marginal_functional(g, u)
        return math.fsum((w * vals).tolist())
    raise ParameterError(f"not a one-dimensional functional: {g!r}")


# ---------------------------------------------------------------------------
# Jump-ledger limits


def jump_sum(
    jumps: Sequence[JumpEvent], f: PairFunctional, T: float, common_only: bool = False
) -> float:
    """Sum of f over jump sizes with jump time <= T.

    With ``common_only`` the sum is restricted to jumps moving both
    components; this is the limit of the pair sum for functionals vanishing
    on the coordinate axes.
    """
    events = [ev for ev in jumps if ev.time <= T and (ev.is_common or not common_only)]
    if not events:
        return 0.0
    x = np.array([ev.size[0] for ev in events])
    y = np.array([ev.size[1] for ev in events])
    return math.fsum(evaluate_pair_functional(f, x, y).tolist())


def marginal_jump_sum(
    jumps: Sequence[JumpEvent], g: MarginalFunctional, T: float, component: int
) -> float:
    """Sum of g over one component's jump sizes with jump time <= T."""
    if component not in (1, 2):
        raise InputError("component must be 1 or 2")
    sizes = np.array([ev.size[component - 1] for ev in jumps if ev.time <= T])
    if sizes.size == 0:
        return 0.0
    return math.fsum(evaluate_marginal_functional(g, sizes).tolist())


# ---------------------------------------------------------------------------
# Stieltjes integration against step functions


def stieltjes(
    integrand: Callable[[np.ndarray], np.ndarray],
    steps: StepFunction,
    T: float,
    breakpoints: Sequence[float] = (),
) -> float:
    """Left-endpoint Stieltjes integral of ``integrand`` against a
    nondecreasing step function over [0, T].

    The partition is the integrator's breakpoints refined by ``breakpoints``
    (the integrand's own discontinuity points), which makes the rule exact
    for piecewise-constant integrands.  Mass at a shared discontinuity is
    weighted by the integrand's left value.
    """
    if T < 0:
        raise InputError("T must be >= 0")
    bp = steps.breakpoints
    extra = np.asarray(breakpoints, dtype=float)
    pts = np.unique(
        np.concatenate(
            [
                [0.0, T],
                bp[(bp > 0.0) & (bp <= T)],
                extra[(extra > 0.0) & (extra < T)],
            ]
        )
    )
    if len(pts) < 2:
        return 0.0
    fvals = steps(pts)
    lefts = np.asarray(integrand(pts[:-1]), dtype=float)
    return math.fsum((lefts * np.diff(fvals)).tolist())


# ---------------------------------------------------------------------------
# Normalized-sum limit formulas


def _check_pair_degrees(f: PairFunctional) -> tuple[float, float]:
    deg = pair_degrees(f)
    if deg is None:
        raise ContractError("functional needs declared homogeneity degrees")
    return deg


def synchronous_limit(
    p: float, f: PairFunctional, model: SemimartingaleSpec, interval_stat: StepFunction
) -> float:
    """Limit of the normalized pair sum on synchronous schemes:
    the Gaussian moment of f under the instantaneous covariance, integrated
    against the limit of the one-component interval statistic of order p."""
    d1, d2 = _check_pair_degrees(f)
    if abs(d1 + d2 - p) > 1e-9:
        raise ContractError(f"f has total degree {d1 + d2}, expected {p}")

    s1 = model.vol1
    s2 = model.vol2
    rho = model.corr

    def integrand(ts: np.ndarray) -> np.ndarray:
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            a, b, r = float(s1.value_at(t)), float(s2.value_at(t)), float(rho.value_at(t))
            cov = np.array([[a * a, r * a * b], [r * a * b, b * b]])
            out[i] = normal_expectation(f, cov)
        return out

    return stieltjes(integrand, interval_stat, model.horizon, model.coefficient_breakpoints())


def marginal_limit(
    p: float,
    g: MarginalFunctional,
    model: SemimartingaleSpec,
    component: int,
    interval_stat: StepFunction,
) -> float:
    """Limit of the normalized marginal sum: E[g(Z)] times the integral of
    the component volatility to the p against the interval statistic."""
    deg = marginal_degree(g)
    if deg is None:
        raise ContractError("functional needs a declared homogeneity degree")
    if abs(deg - p) > 1e-9:
        raise ContractError(f"g has degree {deg}, expected {p}")
    vol = model.vol1 if component == 1 else model.vol2
    m1 = marginal_normal_expectation(g)

    def integrand(ts: np.ndarray) -> np.ndarray:
        return np.asarray(vol.value_at(ts), dtype=float) ** p

    return m1 * stieltjes(integrand, interval_stat, model.horizon, model.coefficient_breakpoints())


def uncorrelated_limit(
    p1: float,
    p2: float,
    f: PairFunctional,
    model: SemimartingaleSpec,
    pair_stat: StepFunction,
) -> float:
    """Limit of the normalized pair sum when the two Brownian drivers are
    uncorrelated: E[f] under the identity covariance times the integral of
    vol1**p1 * vol2**p2 against the cross statistic."""
    if not model.corr.is_constant(0.0):
        raise ContractError("this limit requires a correlation schedule that is identically 0")
    d1, d2 = _check_pair_degrees(f)
    if abs(d1 - p1) > 1e-9 or abs(d2 - p2) > 1e-9:
        raise ContractError(f"f has degrees {(d1, d2)}, expected {(p1, p2)}")
    m = normal_expectation(f, np.eye(2))
    v1, v2 = model.vol1, model.vol2

    def integrand(ts: np.ndarray) -> np.ndarray:
        return np.asarray(v1.value_at(ts), dtype=float) ** p1 * np.asarray(
            v2.value_at(ts), dtype=float
        ) ** p2

    return m * stieltjes(integrand, pair_stat, model.horizon, model.coefficient_breakpoints())


def split_stat_requirements(p1: int, p2: int) -> list[tuple[int, int]]:
    """The (k, m) set-difference statistics entering the integer-power limit."""
    return sorted({(k, m) for (k, l, m) in even_triple_exponents(p1, p2)})


def split_stat_table(
    scheme: Scheme, p1: int, p2: int, rate: float
) -> dict[tuple[int, int], StepFunction]:
    """Compute every set-difference statistic the integer-power limit needs."""
    p = p1 + p2
    return {
        (k, m): split_overlap_power_sum(scheme, k, m, p, rate)
        for (k, m) in split_stat_requirements(p1, p2)
    }


def product_power_limit(
    p1: int,
    p2: int,
    model: SemimartingaleSpec,
    split_stats: Mapping[tuple[int, int], StepFunction],
) -> float:
    """Limit of the normalized pair sum of x**p1 * y**p2 for integer powers.

    Expands the joint Gaussian moment of a pair of increments over the
    overlap / set-difference decomposition of their observation intervals:
    for each admissible even-exponent triple (k, l, m) a product of binomial
    and multinomial coefficients, standard normal moments and a polynomial in
    the instantaneous correlation, integrated against the matching
    set-difference statistic.
    """
    if p1 < 0 or p2 < 0:
        raise ParameterError("p1 and p2 must be nonnegative integers")
    triples = even_triple_exponents(p1, p2)
    by_km: dict[tuple[int, int], list[int]] = {}
    for (k, l, m) in triples:
        by_km.setdefault((k, m), []).append(l)
    for km in by_km:
        if km not in split_stats:
            raise InputError(f"split_stats is missing the statistic for (k, m)={km}")

    s1, s2, rho = model.vol1, model.vol2, model.corr
    p = p1 + p2
    parts = []
    for (k, m), ls in sorted(by_km.items()):
        coeffs = [
            (
                l,
                math.comb(p1, k)
                * math.factorial(p2)
                / (math.factorial(l) * math.factorial(m) * math.factorial(p2 - l - m))
                * normal_moment(k)
                * normal_moment(l)
                * normal_moment(m)
                * normal_moment(p - (k + l + m)),
            )
            for l in ls
        ]

        def integrand(ts: np.ndarray, _coeffs=coeffs, _m=m) -> np.ndarray:
            a = np.asarray(s1.value_at(ts), dtype=float) ** p1
            b = np.asarray(s2.value_at(ts), dtype=float) ** p2
            r = np.asarray(rho.value_at(ts), dtype=float)
            acc = np.zeros(len(ts))
            for l, c in _coeffs:
                acc += c * (1.0 - r * r) ** (l / 2.0) * r ** (p2 - (l + _m))
            return a * b * acc

        parts.append(
            stieltjes(
                integrand,
                split_stats[(k, m)],
                model.horizon,
                model.coefficient_breakpoints(),
            )
        )
    return math.fsum(parts)


#: tags of the simplified closed forms for small equal integer powers
PRESET_TAGS = ("xy", "x2y2", "x3y3", "x4y4")

# Each entry: (vol-product power, [(stat key, correlation polynomial)]).
# Stat keys name the statistic family ("split" uses set-difference lengths,
# "pair" full interval lengths) plus (k, m, p).
_PRESETS: dict[str, tuple[int, list]] = {
    "xy": (1, [(("split", 0, 0, 2), lambda r: r)]),
    "x2y2": (
        2,
        [(("split", 0, 0, 4), lambda r: 2.0 * r**2), (("pair", 2, 2, 4), lambda r: np.ones_like(r))],
    ),
    "x3y3": (
        3,
        [(("split", 0, 0, 6), lambda r: 6.0 * r**3), (("pair", 2, 2, 6), lambda r: 9.0 * r)],
    ),
    "x4y4": (
        4,
        [
            (("split", 0, 0, 8), lambda r: 24.0 * r**4),
            (("pair", 2, 2, 8), lambda r: 72.0 * r**2),
            (("pair", 4, 4, 8), lambda r: 9.0 * np.ones_like(r)),
        ],
    ),
}


def preset_requirements(tag: str) -> list[tuple[str, int, int, int]]:
    """Statistic keys a preset needs, as ("split"|"pair", k, m, p) tuples."""
    if tag not in _PRESETS:
        raise ParameterError(f"unknown preset {tag!r}; choose one of {PRESET_TAGS}")
    return [key for key, _ in _PRESETS[tag][1]]


def preset_stat_table(scheme: Scheme, tag: str, rate: float) -> dict[tuple, StepFunction]:
    """Compute the statistics required by :func:`product_power_limit_preset`."""
    table = {}
    for kind, k, m, p in preset_requirements(tag):
        fn = split_overlap_power_sum if kind == "split" else pair_overlap_power_sum
        table[(kind, k, m, p)] = fn(scheme, k, m, p, rate)
    return table


def product_power_limit_preset(
    tag: str, model: SemimartingaleSpec, stats: Mapping[tuple, StepFunction]
) -> float:
    """Simplified closed forms of :func:`product_power_limit` for the equal
    integer powers 1..4; algebraically identical to the full expansion."""
    if tag not in _PRESETS:
        raise ParameterError(f"unknown preset {tag!r}; choose one of {PRESET_TAGS}")
    power, terms = _PRESETS[tag]
    s1, s2, rho = model.vol1, model.vol2, model.corr
    parts = []
    for key, poly in terms:
        if key not in stats:
            raise InputError(f"stats is missing {key}")

        def integrand(ts: np.ndarray, _poly=poly) -> np.ndarray:
            a = np.asarray(s1.value_at(ts), dtype=float)
            b = np.asarray(s2.value_at(ts), dtype=float)
            r = np.asarray(rho.value_at(ts), dtype=float)
            return (a * b) ** power * _poly(r)

        parts.append(
            stieltjes(integrand, stats[key], model.horizon, model.coefficient_breakpoints())
        )
    return math.fsum(parts)
