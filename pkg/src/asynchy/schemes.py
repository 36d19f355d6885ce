"""Observation schemes: generation, overlap enumeration and diagnostics.

A scheme is a pair of increasing observation-time sequences, one per
component, both starting at 0 and reaching (or passing) the horizon.
Observation interval ``i`` of a component is the half-open interval
``(t[i-1], t[i]]``; two intervals that share only an endpoint do not
overlap.  Interval indices are 1-based throughout, matching that
convention.

Two representations are provided:

* :class:`ObservationScheme` stores the time arrays explicitly and supports
  everything, including path sampling and functional evaluation.
* :class:`GridScheme` keeps an equidistant grid virtual (a step and a
  count per component), so scheme statistics stay cheap even when one
  component has billions of observations.  Such schemes cannot back a
  sampled path unless they are small enough to materialize.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._rng import substream
from .errors import InputError, ParameterError, SchemeSizeError

__all__ = [
    "ObservationScheme",
    "GridScheme",
    "EquidistantSync",
    "EquidistantAsync",
    "Oscillating",
    "PoissonScheme",
    "PoissonSyncScheme",
    "ExplicitScheme",
    "SchemeSpec",
    "parse_scheme",
    "generate_scheme",
    "mesh",
    "overlap_pairs",
    "max_overlap_count",
    "alternating_subsample",
    "interval_windows",
    "expand_windows",
    "request_times",
    "load_scheme_text",
    "save_scheme_text",
]

#: Largest number of observation times a single component may materialize.
MAX_MATERIALIZED_POINTS = 1 << 26


@dataclass(frozen=True)
class ObservationScheme:
    """Array-backed observation scheme.

    ``truncated`` marks schemes whose lists end before the horizon (only
    produced by :func:`alternating_subsample` running out of input); the
    coverage check is skipped for those.
    """

    times1: np.ndarray
    times2: np.ndarray
    horizon: float
    truncated: bool = False

    def __post_init__(self) -> None:
        for name in ("times1", "times2"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        for arr in (self.times1, self.times2):
            if arr.ndim != 1 or len(arr) < 2:
                raise ParameterError("each component needs at least one interval")
            if arr[0] != 0.0:
                raise ParameterError("observation times must start at 0")
            if np.any(np.diff(arr) <= 0):
                raise ParameterError("observation times must be strictly increasing")
            if not self.truncated and arr[-1] < self.horizon:
                raise ParameterError("observation times must reach the horizon")

    def times(self, component: int) -> np.ndarray:
        if component not in (1, 2):
            raise InputError("component must be 1 or 2")
        return self.times1 if component == 1 else self.times2


@dataclass(frozen=True)
class GridScheme:
    """Virtual equidistant scheme: component ``l`` observes at ``i * step_l``
    for ``i = 0 .. count_l``."""

    step1: float
    count1: int
    step2: float
    count2: int
    horizon: float

    def __post_init__(self) -> None:
        if self.step1 <= 0 or self.step2 <= 0:
            raise ParameterError("grid steps must be positive")
        if self.count1 < 1 or self.count2 < 1:
            raise ParameterError("each component needs at least one interval")
        if not self.horizon > 0:
            raise ParameterError("horizon must be positive")
        for step, count in ((self.step1, self.count1), (self.step2, self.count2)):
            if count * step < self.horizon:
                raise ParameterError("grid must cover the horizon")

    @classmethod
    def cover(cls, step1: float, step2: float, horizon: float) -> "GridScheme":
        """Smallest grids with the given steps reaching the horizon."""
        return cls(
            step1, _covering_count(step1, horizon), step2, _covering_count(step2, horizon), horizon
        )

    def step(self, component: int) -> float:
        if component not in (1, 2):
            raise InputError("component must be 1 or 2")
        return self.step1 if component == 1 else self.step2

    def count(self, component: int) -> int:
        return self.count1 if component == 1 else self.count2

    def component_times(self, component: int, max_points: int = MAX_MATERIALIZED_POINTS) -> np.ndarray:
        n = self.count(component)
        if n + 1 > max_points:
            raise SchemeSizeError(
                f"component {component} has {n} intervals; too large to materialize"
            )
        return np.arange(n + 1) * self.step(component)

    def materialize(self, max_points: int = MAX_MATERIALIZED_POINTS) -> ObservationScheme:
        return ObservationScheme(
            self.component_times(1, max_points),
            self.component_times(2, max_points),
            self.horizon,
        )


Scheme = Union[ObservationScheme, GridScheme]


def _covering_count(step: float, horizon: float) -> int:
    count = max(1, math.ceil(horizon / step))
    while count * step < horizon:
        count += 1
    return count


# ---------------------------------------------------------------------------
# Scheme specifications


@dataclass(frozen=True)
class EquidistantSync:
    """Both components observed at i/n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")

    def grid(self, horizon: float) -> GridScheme:
        step = 1.0 / self.n
        return GridScheme.cover(step, step, horizon)


@dataclass(frozen=True)
class EquidistantAsync:
    """Component 1 at i/n, component 2 at the faster grid i/n**(1+gamma)."""

    n: int
    gamma: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.gamma < 0:
            raise ParameterError("gamma must be >= 0")

    def grid(self, horizon: float) -> GridScheme:
        return GridScheme.cover(1.0 / self.n, float(self.n) ** -(1.0 + self.gamma), horizon)


@dataclass(frozen=True)
class Oscillating:
    """Component 2 grid flips with the parity of n: i/n for even n, i/(2n) for odd."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")

    def grid(self, horizon: float) -> GridScheme:
        step2 = 1.0 / self.n if self.n % 2 == 0 else 1.0 / (2 * self.n)
        return GridScheme.cover(1.0 / self.n, step2, horizon)


@dataclass(frozen=True)
class PoissonScheme:
    """Observation times are jump times of two independent Poisson processes
    with rates n*lambda1 and n*lambda2."""

    n: int
    lambda1: float
    lambda2: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ParameterError("Poisson intensities must be positive")


@dataclass(frozen=True)
class PoissonSyncScheme:
    """A single rate-(n*lam) Poisson grid observed by both components."""

    n: int
    lam: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if self.lam <= 0:
            raise ParameterError("Poisson intensity must be positive")


@dataclass(frozen=True)
class ExplicitScheme:
    """User-supplied observation times."""

    times1: tuple[float, ...]
    times2: tuple[float, ...]


SchemeSpec = Union[
    EquidistantSync, EquidistantAsync, Oscillating, PoissonScheme, PoissonSyncScheme, ExplicitScheme
]


def parse_scheme(text: str) -> SchemeSpec:
    """Parse the compact CLI form of a scheme specification.

    ``sync:N`` | ``async:N,GAMMA`` | ``osc:N`` | ``poisson:N,L1,L2`` |
    ``poisson-sync:N,L`` | ``explicit:PATH``
    """
    kind, _, rest = text.partition(":")
    try:
        if kind == "sync":
            return EquidistantSync(int(rest))
        if kind == "async":
            n, gamma = rest.split(",")
            return EquidistantAsync(int(n), float(gamma))
        if kind == "osc":
            return Oscillating(int(rest))
        if kind == "poisson":
            n, l1, l2 = rest.split(",")
            return PoissonScheme(int(n), float(l1), float(l2))
        if kind == "poisson-sync":
            n, lam = rest.split(",")
            return PoissonSyncScheme(int(n), float(lam))
        if kind == "explicit":
            with open(rest, "r", encoding="utf-8") as fh:
                times1, times2 = _read_scheme_columns(fh)
            return ExplicitScheme(tuple(times1), tuple(times2))
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"cannot parse scheme {text!r}: {exc}") from exc
    raise ParameterError(f"unknown scheme kind {kind!r}")


def _poisson_times(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    chunk = max(64, int(1.25 * rate * horizon) + 1)
    parts = [np.zeros(1)]
    last = 0.0
    while last < horizon:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        parts.append(last + np.cumsum(gaps))
        last = float(parts[-1][-1])
    times = np.concatenate(parts)
    stop = int(np.searchsorted(times, horizon, side="left"))
    if stop == len(times) or times[stop] < horizon:
        raise AssertionError("Poisson generation failed to cover the horizon")
    return times[: stop + 1]


def generate_scheme(
    spec: SchemeSpec,
    horizon: float,
    seed: int = 0,
    max_points: int = MAX_MATERIALIZED_POINTS,
) -> ObservationScheme:
    """Build an array-backed scheme covering [0, horizon].

    Deterministic variants ignore ``seed``.  Generation continues until both
    lists reach the horizon, so the last observation may exceed it; consumers
    apply the max(t_i, t_j) <= T cut themselves.  Raises
    :class:`SchemeSizeError` when a component would need more than
    ``max_points`` times; equidistant variants of that size can still be
    analyzed via their ``.grid(horizon)`` form.
    """
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    if isinstance(spec, (EquidistantSync, EquidistantAsync, Oscillating)):
        return spec.grid(horizon).materialize(max_points)
    if isinstance(spec, PoissonScheme):
        n_expected = spec.n * max(spec.lambda1, spec.lambda2) * horizon
        if n_expected > max_points:
            raise SchemeSizeError(f"expected {n_expected:.3g} observation times")
        t1 = _poisson_times(spec.n * spec.lambda1, horizon, substream(seed, "scheme", 1))
        t2 = _poisson_times(spec.n * spec.lambda2, horizon, substream(seed, "scheme", 2))
        return ObservationScheme(t1, t2, horizon)
    if isinstance(spec, PoissonSyncScheme):
        if spec.n * spec.lam * horizon > max_points:
            raise SchemeSizeError("expected observation count too large")
        t = _poisson_times(spec.n * spec.lam, horizon, substream(seed, "scheme", 1))
        return ObservationScheme(t, t.copy(), horizon)
    if isinstance(spec, ExplicitScheme):
        return ObservationScheme(np.asarray(spec.times1), np.asarray(spec.times2), horizon)
    raise ParameterError(f"unknown scheme spec {spec!r}")


# ---------------------------------------------------------------------------
# Diagnostics and pair enumeration


def mesh(scheme: Scheme) -> float:
    """Largest observation gap up to the horizon, over both components."""
    T = scheme.horizon
    if isinstance(scheme, GridScheme):
        return max(_grid_mesh(scheme.step1, T), _grid_mesh(scheme.step2, T))
    return max(
        float(np.max(np.diff(np.minimum(scheme.times1, T)))),
        float(np.max(np.diff(np.minimum(scheme.times2, T)))),
    )


def _grid_mesh(step: float, horizon: float) -> float:
    if step >= horizon:
        return horizon
    # full gaps of length `step` occur inside [0, horizon]; the last gap is cut
    return step


def interval_windows(
    times1: np.ndarray, times2: np.ndarray, tmax: float | None
) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Overlap windows of component-2 intervals per component-1 interval.

    Returns ``(jlo, jhi, n1, jcut)`` where component-1 intervals ``i = 1..n1``
    satisfy ``t_i <= tmax``, interval ``i`` overlaps component-2 intervals
    ``jlo[i-1] .. jhi[i-1]`` (1-based, before any cut on j), and ``jcut`` is
    the largest j with ``s_j <= tmax``.  With ``tmax=None`` no cut is applied.
    """
    if tmax is None:
        n1 = len(times1) - 1
        jcut = len(times2) - 1
    else:
        n1 = int(np.searchsorted(times1, tmax, side="right")) - 1
        jcut = int(np.searchsorted(times2, tmax, side="right")) - 1
    lefts = times1[:n1]
    rights = times1[1 : n1 + 1]
    jlo = np.searchsorted(times2, lefts, side="right")
    jhi = np.minimum(np.searchsorted(times2, rights, side="left"), len(times2) - 1)
    return jlo.astype(np.int64), jhi.astype(np.int64), n1, jcut


def expand_windows(jlo: np.ndarray, jhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten per-interval windows into parallel (i, j) index arrays (1-based i)."""
    counts = np.maximum(jhi - jlo + 1, 0)
    total = int(counts.sum())
    i_arr = np.repeat(np.arange(1, len(jlo) + 1, dtype=np.int64), counts)
    ends = np.cumsum(counts)
    j_arr = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts) + np.repeat(jlo, counts)
    return i_arr, j_arr


def overlap_pairs(scheme: Scheme, max_pairs: int = 1 << 27) -> np.ndarray:
    """All index pairs (i, j) of overlapping observation intervals with
    max(t_i, s_j) <= horizon, as an array of shape (P, 2), 1-based.

    Produced from a linear window sweep; ordered lexicographically, which is
    also nondecreasing in the pair breakpoint max(t_i, s_j).
    """
    if isinstance(scheme, GridScheme):
        scheme = scheme.materialize()
    jlo, jhi, n1, jcut = interval_windows(scheme.times1, scheme.times2, scheme.horizon)
    jhi = np.minimum(jhi, jcut)
    counts = np.maximum(jhi - jlo + 1, 0)
    if counts.sum() > max_pairs:
        raise SchemeSizeError(f"{counts.sum()} overlapping pairs; too many to enumerate")
    i_arr, j_arr = expand_windows(jlo, jhi)
    return np.column_stack([i_arr, j_arr])


def max_overlap_count(scheme: Scheme) -> int:
    """Largest number of intervals of one component met by a single interval
    of the other (intervals of the probed component restricted to t_i <= T)."""
    if isinstance(scheme, GridScheme):
        return max(
            _grid_max_window(scheme.step1, scheme.count1, scheme.step2, scheme.count2, scheme.horizon),
            _grid_max_window(scheme.step2, scheme.count2, scheme.step1, scheme.count1, scheme.horizon),
        )
    best = 0
    for a, b in ((scheme.times1, scheme.times2), (scheme.times2, scheme.times1)):
        jlo, jhi, _, _ = interval_windows(a, b, scheme.horizon)
        if len(jlo):
            best = max(best, int(np.max(np.maximum(jhi - jlo + 1, 0))))
    return best


_GRID_LOOP_CAP = 1 << 24


def _grid_max_window(step_a: float, count_a: int, step_b: float, count_b: int, horizon: float) -> int:
    """Max number of b-grid intervals overlapping one a-grid interval with
    right endpoint <= horizon."""
    n_a = min(count_a, int(math.floor(horizon / step_a + 1e-12)))
    if n_a < 1:
        return 0
    if step_a >= step_b:
        if n_a > _GRID_LOOP_CAP:
            raise SchemeSizeError("grid too fine to scan; reduce the horizon or n")
        best = 0
        for i in range(1, n_a + 1):
            left = (i - 1) * step_a
            jlo, jhi = _grid_window(left, left + step_a, step_b, count_b)
            best = max(best, max(jhi - jlo + 1, 0))
        return best
    # a finer than b: an a-interval meets two b-intervals exactly when a
    # b-boundary falls strictly inside it, so scan the (few) b-boundaries.
    n_b = min(count_b, int(math.floor(horizon / step_b + 1e-12)) + 1)
    if n_b > _GRID_LOOP_CAP:
        raise SchemeSizeError("grid too fine to scan; reduce the horizon or n")
    end_a = n_a * step_a
    for i in range(1, n_b + 1):
        g = i * step_b
        if g >= end_a:
            break
        j = round(g / step_a)
        if j * step_a != g:
            return 2
    return 1


def _grid_window(left: float, right: float, step_b: float, count_b: int) -> tuple[int, int]:
    """1-based window of b-grid intervals overlapping (left, right], matching
    float comparisons against times j*step_b exactly."""
    jlo = int(math.floor(left / step_b)) + 1
    while jlo > 1 and (jlo - 1) * step_b > left:
        jlo -= 1
    while jlo * step_b <= left:
        jlo += 1
    jhi = int(math.ceil(right / step_b))
    while (jhi - 1) * step_b >= right:
        jhi -= 1
    while jhi < count_b and jhi * step_b < right:
        jhi += 1
    return jlo, min(jhi, count_b)


def alternating_subsample(scheme: ObservationScheme) -> ObservationScheme:
    """Thin a scheme so the two components are observed strictly alternately.

    Starting from the first positive observation of component 1, each kept
    time is the smallest observation of the other component strictly after
    the previously kept one.  Kept times are a subset of the input times and
    every interval of the result meets at most two intervals of the other
    component.  If one component runs out before the horizon is covered the
    result is flagged ``truncated``.
    """
    t = {1: scheme.times1, 2: scheme.times2}
    out = {1: [0.0], 2: [0.0]}
    T = scheme.horizon
    truncated = False
    if len(t[1]) < 2:
        truncated = True
    else:
        cur = float(t[1][1])
        out[1].append(cur)
        comp = 2
        while out[1][-1] < T or out[2][-1] < T:
            k = int(np.searchsorted(t[comp], cur, side="right"))
            if k == len(t[comp]):
                truncated = True
                break
            cur = float(t[comp][k])
            out[comp].append(cur)
            comp = 3 - comp
    return ObservationScheme(
        np.asarray(out[1]), np.asarray(out[2]), T, truncated=truncated
    )


def request_times(scheme: ObservationScheme) -> np.ndarray:
    """Sorted union of both components' observation times within the horizon.

    This is the set of times a path must be sampled at before evaluating
    functionals on the scheme.
    """
    merged = np.union1d(scheme.times1, scheme.times2)
    return merged[merged <= scheme.horizon]


# ---------------------------------------------------------------------------
# Plain-text interchange (component id, time) per line


def _read_scheme_columns(fh) -> tuple[list[float], list[float]]:
    cols: dict[int, list[float]] = {1: [], 2: []}
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'component time'")
        comp = int(parts[0])
        if comp not in (1, 2):
            raise InputError(f"line {lineno}: component must be 1 or 2")
        cols[comp].append(float(parts[1]))
    for comp, vals in cols.items():
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise InputError(f"component {comp} times must be strictly increasing")
    return cols[1], cols[2]


def load_scheme_text(path_or_file, horizon: float | None = None) -> ObservationScheme:
    """Load an explicit scheme from two-column text (component id, time)."""
    if hasattr(path_or_file, "read"):
        t1, t2 = _read_scheme_columns(path_or_file)
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            t1, t2 = _read_scheme_columns(fh)
    if horizon is None:
        if not t1 or not t2:
            raise InputError("scheme file must list times for both components")
        horizon = min(t1[-1], t2[-1])
    return ObservationScheme(np.asarray(t1), np.asarray(t2), horizon)


def save_scheme_text(scheme: ObservationScheme, path_or_file) -> None:
    """Write a scheme in the same two-column format accepted by the loader."""
    buf = io.StringIO()
    for comp, arr in ((1, scheme.times1), (2, scheme.times2)):
        for t in arr.tolist():
            buf.write(f"{comp} {t!r}\n")
    data = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(data)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(data)
