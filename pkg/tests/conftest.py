"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's sweep/window machinery:
pair enumeration is a double loop, statistics go through per-pair dicts,
integrals through dense Riemann sums or adaptive quadrature.
"""

import math

import numpy as np
import pytest

from asynchy import ObservationScheme, PathRecord, StepFunction


def brute_force_pairs(t1, t2, T):
    """All overlapping 1-based index pairs with max(t_i, s_j) <= T."""
    out = []
    for i in range(1, len(t1)):
        for j in range(1, len(t2)):
            if max(t1[i], t2[j]) <= T and max(t1[i - 1], t2[j - 1]) < min(t1[i], t2[j]):
                out.append((i, j))
    return out


def brute_force_pair_stat(t1, t2, ea, eb, ec, setdiff, factor=1.0):
    """Step function of the pair statistic via a full double loop (no cut)."""
    acc: dict[float, float] = {}
    for i in range(1, len(t1)):
        for j in range(1, len(t2)):
            lo = max(t1[i - 1], t2[j - 1])
            hi = min(t1[i], t2[j])
            if lo >= hi:
                continue
            ov = hi - lo
            a = t1[i] - t1[i - 1]
            b = t2[j] - t2[j - 1]
            if setdiff:
                a = max(a - ov, 0.0)
                b = max(b - ov, 0.0)
            term = factor * a**ea * b**eb * ov**ec
            bp = max(t1[i], t2[j])
            acc[bp] = acc.get(bp, 0.0) + term
    bps = sorted(acc)
    cum = np.cumsum([acc[b] for b in bps])
    return StepFunction(
        np.concatenate([[0.0], bps]), np.concatenate([[0.0], cum])
    )


def brute_force_pair_sum(fn, scheme, d1, d2):
    """Pair functional sum via double loop over increments."""
    t1, t2, T = scheme.times1, scheme.times2, scheme.horizon
    total = []
    for i in range(1, len(t1)):
        for j in range(1, len(t2)):
            if max(t1[i], t2[j]) <= T and max(t1[i - 1], t2[j - 1]) < min(t1[i], t2[j]):
                total.append(fn(d1[i - 1], d2[j - 1]))
    return math.fsum(total)


def random_scheme(rng, max_points=200, horizon=1.0):
    """Random explicit scheme covering the horizon."""
    n1 = int(rng.integers(1, max_points))
    n2 = int(rng.integers(1, max_points))
    t1 = np.unique(np.concatenate([[0.0], np.sort(rng.uniform(0, horizon, n1)), [horizon * (1 + rng.uniform(0, 0.2))]]))
    t2 = np.unique(np.concatenate([[0.0], np.sort(rng.uniform(0, horizon, n2)), [horizon * (1 + rng.uniform(0, 0.2))]]))
    return ObservationScheme(t1, t2, horizon)


def path_through(scheme, knots1, knots2, extra_times=()):
    """Deterministic path interpolating the given (time, value) knots.

    Only increments over observation times matter to the functionals, so the
    interpolation rule is irrelevant as long as the knots sit on observation
    times.
    """
    times = np.union1d(np.union1d(scheme.times1, scheme.times2), np.asarray(extra_times, dtype=float))
    k1 = np.asarray(knots1, dtype=float)
    k2 = np.asarray(knots2, dtype=float)
    v1 = np.interp(times, k1[:, 0], k1[:, 1])
    v2 = np.interp(times, k2[:, 0], k2[:, 1])
    return PathRecord(times, np.column_stack([v1, v2]), ())


def quad_normal_expectation(fn, cov, lim=9.0):
    """Adaptive-quadrature oracle for E[fn(Z)], Z ~ N(0, cov)."""
    from scipy import integrate

    cov = np.asarray(cov, dtype=float)
    s1 = math.sqrt(cov[0, 0])
    s2 = math.sqrt(cov[1, 1])
    rho = 0.0 if s1 * s2 == 0 else cov[0, 1] / (s1 * s2)
    c = math.sqrt(max(1.0 - rho * rho, 0.0))

    def integrand(v, u):
        x = s1 * u
        y = s2 * (rho * u + c * v)
        return fn(x, y) * math.exp(-(u * u + v * v) / 2.0) / (2.0 * math.pi)

    val, _ = integrate.dblquad(integrand, -lim, lim, -lim, lim, epsabs=1e-12, epsrel=1e-12)
    return val


def riemann(fn, a, b, n=1_000_000):
    """Left-endpoint Riemann sum oracle."""
    ts = np.linspace(a, b, n + 1)[:-1]
    h = (b - a) / n
    return float(np.sum(fn(ts)) * h)


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)
