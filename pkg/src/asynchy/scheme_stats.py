"""Observation-scheme statistics as step functions of time.

Each statistic is a rate-scaled sum over observation intervals (or pairs of
overlapping intervals) of powers of interval lengths, overlap lengths and
one-sided set-difference lengths.  The value at time t includes exactly the
intervals with t_i <= t, respectively the pairs with max(t_i, s_j) <= t, so
evaluating the step function at the horizon applies the summation cut.

For :class:`~asynchy.schemes.GridScheme` inputs the pair statistics are
computed analytically per coarse-grid interval (interior pairs of a window
share one breakpoint and one term), so they stay cheap even when the finer
component has billions of observations.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InputError, ParameterError, SchemeSizeError
from .schemes import GridScheme, ObservationScheme, Scheme, interval_windows

__all__ = [
    "StepFunction",
    "interval_power_sum",
    "pair_interval_power_sum",
    "split_overlap_power_sum",
    "pair_overlap_power_sum",
    "capped_pair_power_sum",
]

_GRID_VECTOR_CAP = 1 << 24


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant cumulative function on [0, inf).

    ``values[k]`` is the value on ``[breakpoints[k], breakpoints[k+1])``;
    evaluation past the last breakpoint returns the last value.  Statistics
    built here start at (0, 0) and are nondecreasing.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        bp = np.ascontiguousarray(self.breakpoints, dtype=float)
        vals = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.ndim != 1 or bp.shape != vals.shape or len(bp) == 0:
            raise ParameterError("breakpoints and values must be equal-length 1-d arrays")
        if bp[0] != 0.0 or vals[0] != 0.0:
            raise ParameterError("step functions must start at (0, 0)")
        if np.any(np.diff(bp) <= 0):
            raise ParameterError("breakpoints must be strictly increasing")

    @classmethod
    def from_increments(cls, bp: np.ndarray, inc: np.ndarray) -> "StepFunction":
        """Accumulate (breakpoint, increment) pairs given in nondecreasing
        breakpoint order, merging equal breakpoints."""
        if len(bp) == 0:
            return cls(np.zeros(1), np.zeros(1))
        cum = _backend.cumulative_sum(np.ascontiguousarray(inc, dtype=float))
        keep = np.empty(len(bp), dtype=bool)
        keep[:-1] = bp[1:] != bp[:-1]
        keep[-1] = True
        return cls(
            np.concatenate([[0.0], bp[keep]]),
            np.concatenate([[0.0], cum[keep]]),
        )

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise InputError("step functions are defined on [0, inf)")
        idx = np.searchsorted(self.breakpoints, t_arr, side="right") - 1
        out = self.values[idx]
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def to_text(self) -> str:
        buf = io.StringIO()
        for b, v in zip(self.breakpoints.tolist(), self.values.tolist()):
            buf.write(f"{b!r} {v!r}\n")
        return buf.getvalue()

    def save_text(self, path_or_file) -> None:
        """Two-column plain text (breakpoint, value), one line per breakpoint."""
        data = self.to_text()
        if hasattr(path_or_file, "write"):
            path_or_file.write(data)
        else:
            with open(path_or_file, "w", encoding="utf-8") as fh:
                fh.write(data)


def _rate_factor(rate: float, half_p_minus_one: float) -> float:
    if rate <= 0:
        raise ParameterError("rate must be positive")
    return 1.0 if half_p_minus_one == 0.0 else float(rate) ** half_p_minus_one


def interval_power_sum(scheme: Scheme, component: int, p: float, rate: float) -> StepFunction:
    """Rate-scaled running sum of |interval|**(p/2) for one component.

    Value at t: rate**(p/2-1) * sum over intervals with t_i <= t.
    """
    if p < 0:
        raise ParameterError("p must be >= 0")
    factor = _rate_factor(rate, p / 2.0 - 1.0)
    if isinstance(scheme, GridScheme):
        times = scheme.component_times(component)
    else:
        times = scheme.times(component)
    inc = factor * np.diff(times) ** (p / 2.0)
    return StepFunction.from_increments(times[1:], inc)


def _array_pair_terms(
    scheme: ObservationScheme, ea: float, eb: float, ec: float, use_setdiff: bool
):
    jlo, jhi, _, _ = interval_windows(scheme.times1, scheme.times2, None)
    return _backend.pair_stat_terms(
        np.ascontiguousarray(scheme.times1),
        np.ascontiguousarray(scheme.times2),
        np.ascontiguousarray(jlo, dtype=np.int64),
        np.ascontiguousarray(jhi, dtype=np.int64),
        ea,
        eb,
        ec,
        use_setdiff,
    )


def _grid_pair_terms(grid: GridScheme, ea: float, eb: float, ec: float, use_setdiff: bool):
    """Analytic per-window accumulation; O(count of the coarser component)."""
    if grid.step1 >= grid.step2:
        sa, na, sb, nb = grid.step1, grid.count1, grid.step2, grid.count2
    else:
        sa, na, sb, nb = grid.step2, grid.count2, grid.step1, grid.count1
        ea, eb = eb, ea
    if na > _GRID_VECTOR_CAP:
        raise SchemeSizeError("coarse grid too large for the analytic pair statistics")

    i = np.arange(1, na + 1, dtype=np.int64)
    left = (i - 1) * sa
    right = i * sa
    jlo = np.floor(left / sb).astype(np.int64) + 1
    jlo -= (jlo - 1) * sb > left
    jlo += jlo * sb <= left
    jhi = np.ceil(right / sb).astype(np.int64)
    jhi -= (jhi - 1) * sb >= right
    jhi += (jhi * sb < right) & (jhi < nb)
    jhi = np.minimum(jhi, nb)

    valid = jlo <= jhi
    left, right, jlo, jhi = left[valid], right[valid], jlo[valid], jhi[valid]
    counts = jhi - jlo + 1

    def term(ov):
        side_a = np.maximum(sa - ov, 0.0) if use_setdiff else sa
        side_b = np.maximum(sb - ov, 0.0) if use_setdiff else sb
        return np.asarray(side_a**ea * side_b**eb * ov**ec, dtype=float)

    ov_lo = np.minimum(right, jlo * sb) - np.maximum(left, (jlo - 1) * sb)
    ov_hi = np.minimum(right, jhi * sb) - np.maximum(left, (jhi - 1) * sb)

    bps = [np.maximum(right, jlo * sb)]
    incs = [term(ov_lo)]
    interior = counts - 2
    has_int = interior > 0
    if np.any(has_int):
        bps.append(right[has_int])
        incs.append(interior[has_int] * term(np.full(int(has_int.sum()), sb)))
    multi = counts >= 2
    if np.any(multi):
        bps.append(np.maximum(right, jhi * sb)[multi])
        incs.append(term(ov_hi)[multi])

    bp = np.concatenate(bps)
    inc = np.concatenate(incs)
    order = np.argsort(bp, kind="stable")
    return bp[order], inc[order]


def _pair_stat(
    scheme: Scheme, ea: float, eb: float, ec: float, use_setdiff: bool, factor: float
) -> StepFunction:
    if isinstance(scheme, GridScheme):
        bp, inc = _grid_pair_terms(scheme, ea, eb, ec, use_setdiff)
    else:
        bp, inc = _array_pair_terms(scheme, ea, eb, ec, use_setdiff)
    if factor != 1.0:
        inc = inc * factor
    return StepFunction.from_increments(bp, inc)


def pair_interval_power_sum(scheme: Scheme, p1: float, p2: float, rate: float) -> StepFunction:
    """Cross statistic: rate**((p1+p2)/2-1) * sum over overlapping pairs of
    |I_i|**(p1/2) * |I_j|**(p2/2), cumulated in the pair breakpoint
    max(t_i, s_j)."""
    if p1 < 0 or p2 < 0:
        raise ParameterError("exponents must be >= 0")
    factor = _rate_factor(rate, (p1 + p2) / 2.0 - 1.0)
    return _pair_stat(scheme, p1 / 2.0, p2 / 2.0, 0.0, False, factor)


def split_overlap_power_sum(scheme: Scheme, k: int, m: int, p: float, rate: float) -> StepFunction:
    """Set-difference statistic: per overlapping pair,
    |I_i \\ I_j|**(k/2) * |I_j \\ I_i|**(m/2) * |overlap|**((p-k-m)/2),
    rate-scaled by rate**(p/2-1).  Zero-length set differences with zero
    exponent count as 1."""
    _validate_kmp(k, m, p)
    factor = _rate_factor(rate, p / 2.0 - 1.0)
    return _pair_stat(scheme, k / 2.0, m / 2.0, (p - k - m) / 2.0, True, factor)


def pair_overlap_power_sum(scheme: Scheme, k: int, m: int, p: float, rate: float) -> StepFunction:
    """Full-length variant of :func:`split_overlap_power_sum`: uses the whole
    interval lengths |I_i|**(k/2) * |I_j|**(m/2) times the same overlap power."""
    _validate_kmp(k, m, p)
    factor = _rate_factor(rate, p / 2.0 - 1.0)
    return _pair_stat(scheme, k / 2.0, m / 2.0, (p - k - m) / 2.0, False, factor)


def _validate_kmp(k: int, m: int, p: float) -> None:
    if not (isinstance(k, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise ParameterError("k and m must be integers")
    if k < 0 or m < 0:
        raise ParameterError("k and m must be >= 0")
    if k + m > p:
        raise ParameterError("need k + m <= p")


def capped_pair_power_sum(scheme: Scheme, p1: float, p2: float) -> float:
    """Unscaled sum over overlapping pairs (with the horizon cut) of
    |I_i|**min(p1/2, 1) * |I_j|**min(p2/2, 1).

    Boundedness of this quantity across a ladder of n is the scheme-side
    condition for the pair functionals to converge; it is reported by the
    scheme diagnostics driver.
    """
    if p1 <= 0 or p2 <= 0:
        raise ParameterError("exponents must be positive")
    sf = _pair_stat(scheme, min(p1 / 2.0, 1.0), min(p2 / 2.0, 1.0), 0.0, False, 1.0)
    return sf(scheme.horizon)
