"""Bivariate jump-diffusion model with exact path sampling.

The process has two components, each with deterministic piecewise-constant
drift and volatility, a piecewise-constant instantaneous correlation between
the driving Brownian motions, and finite-activity jumps (a deterministic
jump list plus an optional compound-Poisson stream).  Because the
coefficients are piecewise constant, increments of the continuous part are
exactly Gaussian with a covariance that can be integrated in closed form, so
paths are sampled without discretization bias at any requested set of times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import substream
from .errors import InputError, ParameterError, PathLookupError

__all__ = [
    "Schedule",
    "JumpEvent",
    "SizeDist",
    "PoissonJumps",
    "SemimartingaleSpec",
    "PathRecord",
    "covariance_on",
    "drift_on",
    "sample_path",
    "increment",
    "increments_on",
]


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant function of time with left-closed pieces.

    ``values[k]`` applies on ``[breakpoints[k], breakpoints[k+1])`` and the
    last piece extends to the end of the horizon (evaluation past the last
    breakpoint returns the last value).
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.values):
            raise ParameterError("schedule needs one value per breakpoint")
        if not self.breakpoints or self.breakpoints[0] != 0.0:
            raise ParameterError("first schedule breakpoint must be 0")
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise ParameterError("schedule breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls((0.0,), (float(value),))

    def value_at(self, t):
        """Evaluate at a scalar time or an array of times."""
        bp = np.asarray(self.breakpoints)
        idx = np.searchsorted(bp, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values)[idx]

    def is_constant(self, value: float | None = None) -> bool:
        vals = set(self.values)
        if len(vals) != 1:
            return False
        return True if value is None else vals == {float(value)}


@dataclass(frozen=True)
class JumpEvent:
    """A jump of the bivariate path: time in (0, T] and per-component sizes.

    The jump is *common* when both components move, i.e. size[0]*size[1] != 0.
    """

    time: float
    size: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.time > 0.0:
            raise ParameterError(f"jump time must be positive, got {self.time}")
        if self.size == (0.0, 0.0):
            raise ParameterError("jump size must not be (0, 0)")

    @property
    def is_common(self) -> bool:
        return self.size[0] != 0.0 and self.size[1] != 0.0


@dataclass(frozen=True)
class SizeDist:
    """Jump-size distribution: ``normal(mu, sigma)``, ``uniform(lo, hi)`` or
    ``fixed(value)``."""

    kind: str
    params: tuple[float, ...]

    _KINDS = {"normal": 2, "uniform": 2, "fixed": 1}

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ParameterError(f"unknown size distribution {self.kind!r}")
        if len(self.params) != self._KINDS[self.kind]:
            raise ParameterError(f"{self.kind} takes {self._KINDS[self.kind]} parameters")
        if self.kind == "fixed" and self.params[0] == 0.0:
            raise ParameterError("fixed jump size must be nonzero")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "normal":
            return self.params[0] + self.params[1] * rng.standard_normal()
        if self.kind == "uniform":
            return self.params[0] + (self.params[1] - self.params[0]) * rng.random()
        return self.params[0]


@dataclass(frozen=True)
class PoissonJumps:
    """Compound-Poisson jump stream.

    Events arrive at rate ``intensity``; with probability ``common_prob`` an
    event moves both components (sizes drawn independently), otherwise it
    moves exactly one component, chosen by a fair coin.
    """

    intensity: float
    size1: SizeDist
    size2: SizeDist
    common_prob: float

    def __post_init__(self) -> None:
        if self.intensity < 0:
            raise ParameterError("jump intensity must be >= 0")
        if not 0.0 <= self.common_prob <= 1.0:
            raise ParameterError("common_prob must be in [0, 1]")


@dataclass(frozen=True)
class SemimartingaleSpec:
    """Full parametric description of the bivariate process on [0, T]."""

    x0: tuple[float, float] = (0.0, 0.0)
    drift1: Schedule = Schedule.constant(0.0)
    drift2: Schedule = Schedule.constant(0.0)
    vol1: Schedule = Schedule.constant(1.0)
    vol2: Schedule = Schedule.constant(1.0)
    corr: Schedule = Schedule.constant(0.0)
    scheduled_jumps: tuple[JumpEvent, ...] = ()
    poisson_jumps: PoissonJumps | None = None
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        for sch in (self.vol1, self.vol2):
            if any(v < 0 for v in sch.values):
                raise ParameterError("volatilities must be nonnegative")
        if any(abs(r) > 1 for r in self.corr.values):
            raise ParameterError("correlation values must lie in [-1, 1]")
        times = [ev.time for ev in self.scheduled_jumps]
        if any(s >= t for s, t in zip(times, times[1:])):
            raise ParameterError("scheduled jump times must be strictly increasing")
        if times and times[-1] > self.horizon:
            raise ParameterError("scheduled jump times must not exceed the horizon")

    def coefficient_breakpoints(self) -> np.ndarray:
        """Union of all schedule breakpoints (drift, vols, correlation)."""
        pieces = [
            s.breakpoints
            for s in (self.drift1, self.drift2, self.vol1, self.vol2, self.corr)
        ]
        return np.unique(np.concatenate([np.asarray(p) for p in pieces]))


def _cumulative_integral(bounds: np.ndarray, rates: np.ndarray, q: np.ndarray):
    """integral_0^q r(u) du for piecewise-constant r on pieces [bounds[k], bounds[k+1])."""
    steps = rates[:-1] * np.diff(bounds)
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    idx = np.clip(np.searchsorted(bounds, q, side="right") - 1, 0, len(bounds) - 1)
    return cum[idx] + (q - bounds[idx]) * rates[idx]


def _coefficient_grid(spec: SemimartingaleSpec) -> np.ndarray:
    return spec.coefficient_breakpoints()


def _integral_rates(spec: SemimartingaleSpec, grid: np.ndarray):
    """Per-piece rates of the five integrals driving the law of increments."""
    s1 = spec.vol1.value_at(grid).astype(float)
    s2 = spec.vol2.value_at(grid).astype(float)
    rho = spec.corr.value_at(grid).astype(float)
    b1 = spec.drift1.value_at(grid).astype(float)
    b2 = spec.drift2.value_at(grid).astype(float)
    return s1 * s1, s2 * s2, rho * s1 * s2, b1, b2


def _check_range(spec: SemimartingaleSpec, s: float, t: float) -> None:
    if not (0.0 <= s <= t <= spec.horizon):
        raise InputError(f"need 0 <= s <= t <= horizon, got s={s}, t={t}")


def covariance_on(spec: SemimartingaleSpec, s: float, t: float) -> np.ndarray:
    """Exact covariance matrix of the continuous-martingale increment over (s, t].

    Entries are the integrals of ``vol1**2``, ``vol2**2`` and
    ``corr*vol1*vol2`` over the interval, summed piece by piece.
    """
    _check_range(spec, s, t)
    grid = _coefficient_grid(spec)
    v1r, v2r, cvr, _, _ = _integral_rates(spec, grid)
    q = np.array([s, t])
    var1 = float(np.diff(_cumulative_integral(grid, v1r, q))[0])
    var2 = float(np.diff(_cumulative_integral(grid, v2r, q))[0])
    cov = float(np.diff(_cumulative_integral(grid, cvr, q))[0])
    return np.array([[var1, cov], [cov, var2]])


def drift_on(spec: SemimartingaleSpec, s: float, t: float) -> np.ndarray:
    """Exact drift integral (mean of the increment's continuous part) over (s, t]."""
    _check_range(spec, s, t)
    grid = _coefficient_grid(spec)
    _, _, _, b1r, b2r = _integral_rates(spec, grid)
    q = np.array([s, t])
    return np.array(
        [
            float(np.diff(_cumulative_integral(grid, b1r, q))[0]),
            float(np.diff(_cumulative_integral(grid, b2r, q))[0]),
        ]
    )


@dataclass(frozen=True)
class PathRecord:
    """Exact samples of the process at a finite set of times plus the jump ledger.

    ``times`` always contains 0 and the horizon, every coefficient breakpoint
    and every realized jump time.  ``values`` has one (x1, x2) row per time.
    There is no interpolation: looking up a time that was not sampled is an
    error.
    """

    times: np.ndarray
    values: np.ndarray
    jumps: tuple[JumpEvent, ...]

    def index_of(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t))
        if idx >= len(self.times) or self.times[idx] != t:
            raise PathLookupError(f"time {t!r} was not sampled on this path")
        return idx


def _draw_poisson_jumps(
    pj: PoissonJumps, horizon: float, seed: int
) -> list[JumpEvent]:
    rng_t = substream(seed, "jump-times")
    rng_s = substream(seed, "jump-sizes")
    n = int(rng_t.poisson(pj.intensity * horizon))
    # horizon*(1-U) lands in (0, T]; jump times of 0 are excluded by model
    times = np.sort(horizon * (1.0 - rng_t.random(n)))
    events = []
    for t in times:
        if rng_s.random() < pj.common_prob:
            size = (pj.size1.sample(rng_s), pj.size2.sample(rng_s))
        elif rng_s.random() < 0.5:
            size = (pj.size1.sample(rng_s), 0.0)
        else:
            size = (0.0, pj.size2.sample(rng_s))
        events.append(JumpEvent(float(t), size))
    return events


def sample_path(
    spec: SemimartingaleSpec, request_times: Sequence[float], seed: int
) -> PathRecord:
    """Sample the process exactly at ``request_times`` (plus mandatory times).

    The requested times are augmented with 0, the horizon, all coefficient
    breakpoints and all jump times.  Each inter-time increment of the
    continuous part is drawn as a bivariate Gaussian with the exact integrated
    covariance and drift; jump sizes are added at their times.  All randomness
    is derived from ``seed`` through labeled substreams, so enlarging the
    request set never changes the jump draws.
    """
    req = np.asarray(request_times, dtype=float)
    if req.ndim != 1:
        raise InputError("request_times must be one-dimensional")
    if np.any(np.diff(req) < 0):
        raise InputError("request_times must be sorted")
    if req.size and (req[0] < 0.0 or req[-1] > spec.horizon):
        raise InputError("request_times must lie in [0, horizon]")

    jumps = list(spec.scheduled_jumps)
    if spec.poisson_jumps is not None and spec.poisson_jumps.intensity > 0:
        jumps.extend(_draw_poisson_jumps(spec.poisson_jumps, spec.horizon, seed))
    jumps.sort(key=lambda ev: ev.time)

    grid = np.union1d(
        req,
        np.concatenate(
            [
                [0.0, spec.horizon],
                spec.coefficient_breakpoints(),
                np.array([ev.time for ev in jumps], dtype=float),
            ]
        ),
    )
    grid = grid[(grid >= 0.0) & (grid <= spec.horizon)]

    bounds = _coefficient_grid(spec)
    v1r, v2r, cvr, b1r, b2r = _integral_rates(spec, bounds)
    var1 = np.diff(_cumulative_integral(bounds, v1r, grid))
    var2 = np.diff(_cumulative_integral(bounds, v2r, grid))
    cov = np.diff(_cumulative_integral(bounds, cvr, grid))
    mean1 = np.diff(_cumulative_integral(bounds, b1r, grid))
    mean2 = np.diff(_cumulative_integral(bounds, b2r, grid))

    # Cholesky factor of each 2x2 increment covariance, degeneracy-safe.
    l11 = np.sqrt(var1)
    with np.errstate(invalid="ignore", divide="ignore"):
        l21 = np.where(l11 > 0, cov / np.where(l11 > 0, l11, 1.0), 0.0)
    l22 = np.sqrt(np.maximum(var2 - l21 * l21, 0.0))

    z = substream(seed, "gauss").standard_normal((len(grid) - 1, 2))
    inc1 = mean1 + l11 * z[:, 0]
    inc2 = mean2 + l21 * z[:, 0] + l22 * z[:, 1]

    for ev in jumps:
        pos = int(np.searchsorted(grid, ev.time))
        if pos >= len(grid) or grid[pos] != ev.time:
            raise InputError(f"jump time {ev.time} missing from the sample grid")
        inc1[pos - 1] += ev.size[0]
        inc2[pos - 1] += ev.size[1]

    values = np.empty((len(grid), 2))
    values[0] = spec.x0
    values[1:, 0] = spec.x0[0] + np.cumsum(inc1)
    values[1:, 1] = spec.x0[1] + np.cumsum(inc2)
    return PathRecord(times=grid, values=values, jumps=tuple(jumps))


def increment(path: PathRecord, s: float, t: float, component: int) -> float:
    """X^(component) at t minus at s; both times must have been sampled."""
    if component not in (1, 2):
        raise InputError("component must be 1 or 2")
    if s > t:
        raise InputError("need s <= t")
    i, j = path.index_of(s), path.index_of(t)
    col = component - 1
    return float(path.values[j, col] - path.values[i, col])


def increments_on(path: PathRecord, times: np.ndarray, component: int) -> np.ndarray:
    """Vector of increments of one component over consecutive entries of ``times``.

    Every entry of ``times`` must be a member of ``path.times`` (exact float
    equality; no interpolation).
    """
    if component not in (1, 2):
        raise InputError("component must be 1 or 2")
    times = np.asarray(times, dtype=float)
    idx = np.searchsorted(path.times, times)
    bad = (idx >= len(path.times)) | (path.times[np.minimum(idx, len(path.times) - 1)] != times)
    if np.any(bad):
        missing = times[bad][:3]
        raise PathLookupError(f"times not sampled on this path: {missing}")
    vals = path.values[idx, component - 1]
    return np.diff(vals)
