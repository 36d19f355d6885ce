"""Monte Carlo convergence experiments and scheme diagnostics.

An experiment fixes a process model, a scheme family, a functional and a
limit target, then sweeps a ladder of observation frequencies n with R
independent replications each.  Per replication the scheme and the path get
their own seeds, derived by labeled hashing of (base_seed, n, replication,
purpose); scheme and path randomness never mix, keeping the observation
times exogenous by construction, and any replication can be recomputed in
isolation.

Reports aggregate with exactly rounded summation, so results do not depend
on worker count or completion order; repeated runs of the same config
produce byte-identical CSV.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed
from .errors import AsynchyError, InputError, ParameterError
from .functionals import (
    MARGINAL_TYPES,
    PAIR_TYPES,
    MarginalFunctional,
    PairFunctional,
    marginal_sum,
    normalized_marginal_sum,
    normalized_pair_sum,
    pair_degrees,
    pair_sum,
    parse_functional,
)
from .limits import (
    jump_sum,
    marginal_jump_sum,
    marginal_limit,
    preset_stat_table,
    product_power_limit,
    product_power_limit_preset,
    split_stat_table,
    synchronous_limit,
    uncorrelated_limit,
)
from .model import (
    JumpEvent,
    PoissonJumps,
    Schedule,
    SemimartingaleSpec,
    SizeDist,
    sample_path,
)
from .scheme_stats import (
    capped_pair_power_sum,
    interval_power_sum,
    pair_interval_power_sum,
)
from .schemes import (
    EquidistantAsync,
    EquidistantSync,
    Oscillating,
    PoissonScheme,
    PoissonSyncScheme,
    SchemeSpec,
    generate_scheme,
    max_overlap_count,
    request_times,
)

__all__ = [
    "Normalization",
    "LimitTarget",
    "ExperimentConfig",
    "ReportRow",
    "ConvergenceReport",
    "DiagnosticsRow",
    "DiagnosticsReport",
    "run_experiment",
    "run_scheme_diagnostics",
    "load_config",
    "save_config",
    "config_from_dict",
    "config_to_dict",
]

TARGET_KINDS = (
    "value",
    "jump_sum",
    "common_jump_sum",
    "sync",
    "uncorrelated",
    "integer",
    "preset",
)

SCHEME_VARIANTS = ("sync", "async", "osc", "poisson", "poisson-sync")


@dataclass(frozen=True)
class Normalization:
    """Degree p plus the deterministic rate law rate(n) = scale * n**exponent."""

    p: float
    rate_scale: float = 1.0
    rate_exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ParameterError("p must be >= 0")
        if self.rate_scale <= 0:
            raise ParameterError("rate_scale must be positive")

    def rate(self, n: int) -> float:
        return self.rate_scale * float(n) ** self.rate_exponent


@dataclass(frozen=True)
class LimitTarget:
    """What the experiment's statistic is compared against.

    ``value`` is a fixed number; ``jump_sum``/``common_jump_sum`` evaluate
    the functional on each replication's jump ledger; the remaining kinds
    evaluate a limit formula with the replication's own scheme statistics as
    the proxy for their limits (the statistic's conditional expectation given
    the scheme, so the comparison is pure Monte Carlo noise).
    """

    kind: str
    value: float | None = None
    tag: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in TARGET_KINDS:
            raise ParameterError(f"limit target kind must be one of {TARGET_KINDS}")
        if self.kind == "value" and self.value is None:
            raise ParameterError("value target needs a number")
        if self.kind == "preset" and self.tag is None:
            raise ParameterError("preset target needs a tag")


@dataclass(frozen=True)
class ExperimentConfig:
    model: SemimartingaleSpec
    scheme_variant: str
    scheme_params: dict = field(default_factory=dict)
    functional: PairFunctional | MarginalFunctional = None  # type: ignore[assignment]
    component: int | None = None
    normalization: Normalization | None = None
    n_ladder: tuple[int, ...] = ()
    replications: int = 1
    base_seed: int = 0
    limit_target: LimitTarget = LimitTarget("value", value=0.0)
    se_multiple: float = 4.0
    output: str | None = None

    def __post_init__(self) -> None:
        if self.scheme_variant not in SCHEME_VARIANTS:
            raise ParameterError(f"scheme variant must be one of {SCHEME_VARIANTS}")
        if not self.n_ladder or any(
            a >= b for a, b in zip(self.n_ladder, self.n_ladder[1:])
        ):
            raise ParameterError("n_ladder must be nonempty and strictly increasing")
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        if self.functional is None:
            raise ParameterError("an experiment needs a functional")
        if isinstance(self.functional, MARGINAL_TYPES):
            if self.component not in (1, 2):
                raise ParameterError("one-dimensional functionals need component 1 or 2")
        kind = self.limit_target.kind
        if kind in ("sync", "uncorrelated", "integer", "preset"):
            if self.normalization is None:
                raise ParameterError(f"{kind} targets require a normalization block")
            if kind in ("uncorrelated", "integer", "preset") and not isinstance(
                self.functional, PAIR_TYPES
            ):
                raise ParameterError(f"{kind} targets need a pair functional")
            if kind in ("uncorrelated", "integer") and pair_degrees(self.functional) is None:
                raise ParameterError(f"{kind} targets need declared degrees")

    def scheme_spec(self, n: int) -> SchemeSpec:
        return _scheme_spec(self.scheme_variant, self.scheme_params, n)


def _scheme_spec(variant: str, params: dict, n: int) -> SchemeSpec:
    if variant == "sync":
        return EquidistantSync(n)
    if variant == "async":
        return EquidistantAsync(n, float(params["gamma"]))
    if variant == "osc":
        return Oscillating(n)
    if variant == "poisson":
        return PoissonScheme(n, float(params["lambda1"]), float(params["lambda2"]))
    if variant == "poisson-sync":
        return PoissonSyncScheme(n, float(params["lam"]))
    raise ParameterError(f"unknown scheme variant {variant!r}")


# ---------------------------------------------------------------------------
# Single replication


def _statistic(config: ExperimentConfig, scheme, path, rate: float | None) -> float:
    f = config.functional
    if isinstance(f, MARGINAL_TYPES):
        if config.normalization is None:
            return marginal_sum(f, scheme, path, config.component)
        return normalized_marginal_sum(
            config.normalization.p, f, scheme, path, config.component, rate
        )
    if config.normalization is None:
        return pair_sum(f, scheme, path)
    return normalized_pair_sum(config.normalization.p, f, scheme, path, rate)


def _target(config: ExperimentConfig, scheme, path, rate: float | None) -> float:
    t = config.limit_target
    f = config.functional
    model = config.model
    T = model.horizon
    if t.kind == "value":
        return float(t.value)
    if t.kind in ("jump_sum", "common_jump_sum"):
        if isinstance(f, MARGINAL_TYPES):
            if t.kind == "common_jump_sum":
                raise ParameterError("common_jump_sum applies to pair functionals")
            return marginal_jump_sum(path.jumps, f, T, config.component)
        return jump_sum(path.jumps, f, T, common_only=t.kind == "common_jump_sum")
    p = config.normalization.p
    if t.kind == "sync":
        if isinstance(f, MARGINAL_TYPES):
            stat = interval_power_sum(scheme, config.component, p, rate)
            return marginal_limit(p, f, model, config.component, stat)
        stat = interval_power_sum(scheme, 1, p, rate)
        return synchronous_limit(p, f, model, stat)
    if t.kind == "uncorrelated":
        p1, p2 = pair_degrees(f)
        stat = pair_interval_power_sum(scheme, p1, p2, rate)
        return uncorrelated_limit(p1, p2, f, model, stat)
    if t.kind == "integer":
        p1, p2 = pair_degrees(f)
        table = split_stat_table(scheme, int(p1), int(p2), rate)
        return product_power_limit(int(p1), int(p2), model, table)
    if t.kind == "preset":
        table = preset_stat_table(scheme, t.tag, rate)
        return product_power_limit_preset(t.tag, model, table)
    raise ParameterError(f"unknown limit target {t.kind!r}")


def _replicate(config: ExperimentConfig, n: int, r: int) -> tuple[float, float]:
    """One replication: returns (statistic, target)."""
    scheme_seed = derive_seed(config.base_seed, n, r, "scheme")
    path_seed = derive_seed(config.base_seed, n, r, "path")
    try:
        scheme = generate_scheme(config.scheme_spec(n), config.model.horizon, scheme_seed)
        path = sample_path(config.model, request_times(scheme), path_seed)
        rate = config.normalization.rate(n) if config.normalization else None
        return _statistic(config, scheme, path, rate), _target(config, scheme, path, rate)
    except AsynchyError as exc:
        raise type(exc)(f"replication (n={n}, r={r}): {exc}") from exc


def _replicate_star(args) -> tuple[int, int, float, float]:
    config, n, r = args
    value, target = _replicate(config, n, r)
    return n, r, value, target


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class ReportRow:
    n: int
    replications: int
    mean: float
    std_error: float
    limit: float
    abs_error: float
    rel_error: float
    se_multiple: float
    verdict: str

    @staticmethod
    def columns() -> tuple[str, ...]:
        return (
            "n",
            "replications",
            "mean",
            "std_error",
            "limit",
            "abs_error",
            "rel_error",
            "se_multiple",
            "verdict",
        )

    def csv_line(self) -> str:
        return ",".join(
            [
                str(self.n),
                str(self.replications),
                repr(self.mean),
                repr(self.std_error),
                repr(self.limit),
                repr(self.abs_error),
                repr(self.rel_error),
                repr(self.se_multiple),
                self.verdict,
            ]
        )


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ReportRow, ...]
    runtimes: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return all(row.verdict == "pass" for row in self.rows)

    def to_csv(self) -> str:
        lines = [",".join(ReportRow.columns())]
        lines.extend(row.csv_line() for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = []
        for row, rt in zip(self.rows, self.runtimes):
            out.append(
                f"n={row.n} R={row.replications} mean={row.mean:.10g} "
                f"se={row.std_error:.4g} limit={row.limit:.10g} "
                f"abs_err={row.abs_error:.4g} rel_err={row.rel_error:.4g} "
                f"verdict={row.verdict} runtime={rt:.2f}s"
            )
        return "\n".join(out) + "\n"

    def save(self, path: str, fmt: str = "csv") -> None:
        data = self.to_csv() if fmt == "csv" else self.to_text()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(data)


def _aggregate(config: ExperimentConfig, n: int, values: list[float], targets: list[float]) -> ReportRow:
    R = len(values)
    mean = math.fsum(values) / R
    if R > 1:
        var = math.fsum((v - mean) ** 2 for v in values) / (R - 1)
        se = math.sqrt(var / R)
    else:
        se = 0.0
    limit = math.fsum(targets) / R
    abs_err = abs(mean - limit)
    rel_err = abs_err / abs(limit) if limit != 0.0 else (0.0 if abs_err == 0.0 else math.inf)
    tol = config.se_multiple * se if se > 0.0 else 1e-12
    verdict = "pass" if abs_err <= tol else "fail"
    return ReportRow(
        n=n,
        replications=R,
        mean=mean,
        std_error=se,
        limit=limit,
        abs_error=abs_err,
        rel_error=rel_err,
        se_multiple=config.se_multiple,
        verdict=verdict,
    )


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ConvergenceReport:
    """Run the full ladder; deterministic for a fixed config at any ``jobs``."""
    rows = []
    runtimes = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for n in config.n_ladder:
            t0 = time.perf_counter()
            tasks = [(config, n, r) for r in range(1, config.replications + 1)]
            per_rep: dict[int, tuple[float, float]] = {}
            stream = pool.map(_replicate_star, tasks, chunksize=8) if pool else map(_replicate_star, tasks)
            for _, r, value, target in stream:
                per_rep[r] = (value, target)
            runtimes.append(time.perf_counter() - t0)
            ordered = [per_rep[r] for r in sorted(per_rep)]
            rows.append(_aggregate(config, n, [v for v, _ in ordered], [t for _, t in ordered]))
    finally:
        if pool is not None:
            pool.shutdown()
    return ConvergenceReport(tuple(rows), tuple(runtimes))


# ---------------------------------------------------------------------------
# Scheme diagnostics


@dataclass(frozen=True)
class DiagnosticsRow:
    n: int
    condition_median: float
    max_overlap: int
    growth_ratio: float

    @staticmethod
    def columns() -> tuple[str, ...]:
        return ("n", "condition_median", "max_overlap", "growth_ratio")

    def csv_line(self) -> str:
        return ",".join(
            [str(self.n), repr(self.condition_median), str(self.max_overlap), repr(self.growth_ratio)]
        )


@dataclass(frozen=True)
class DiagnosticsReport:
    rows: tuple[DiagnosticsRow, ...]
    divergent: bool
    exponents: tuple[float, float]

    def to_csv(self) -> str:
        lines = [",".join(DiagnosticsRow.columns())]
        lines.extend(row.csv_line() for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = [
            f"n={row.n} condition={row.condition_median:.6g} "
            f"max_overlap={row.max_overlap} growth={row.growth_ratio:.4g}"
            for row in self.rows
        ]
        out.append(f"verdict: {'divergent' if self.divergent else 'stable'}")
        return "\n".join(out) + "\n"


#: growth-ratio threshold and run length of the divergence rule
DIVERGENCE_RATIO = 2.0
DIVERGENCE_RUN = 2


def run_scheme_diagnostics(
    config: ExperimentConfig, replications: int | None = None
) -> DiagnosticsReport:
    """Scheme-side convergence diagnostics across the n ladder.

    Per rung, reports the median (over replications) of the capped pair power
    sum at the functional's degrees and the worst per-interval overlap count.
    The scheme family is flagged divergent when the median grows by a factor
    of at least ``DIVERGENCE_RATIO`` on ``DIVERGENCE_RUN`` consecutive rungs.
    """
    f = config.functional
    degrees = pair_degrees(f) if isinstance(f, PAIR_TYPES) else None
    if degrees is None:
        raise ParameterError("diagnostics need a pair functional with declared degrees")
    p1, p2 = degrees
    reps = replications if replications is not None else min(config.replications, 20)
    rows: list[DiagnosticsRow] = []
    medians: list[float] = []
    for n in config.n_ladder:
        conds = []
        overlaps = []
        for r in range(1, reps + 1):
            seed = derive_seed(config.base_seed, n, r, "scheme")
            scheme = generate_scheme(config.scheme_spec(n), config.model.horizon, seed)
            conds.append(capped_pair_power_sum(scheme, p1, p2))
            overlaps.append(max_overlap_count(scheme))
        med = float(np.median(conds))
        ratio = med / medians[-1] if medians else math.nan
        medians.append(med)
        rows.append(DiagnosticsRow(n, med, max(overlaps), ratio))
    ratios = [row.growth_ratio for row in rows[1:]]
    divergent = False
    run = 0
    for ratio in ratios:
        run = run + 1 if ratio >= DIVERGENCE_RATIO else 0
        if run >= DIVERGENCE_RUN:
            divergent = True
            break
    return DiagnosticsReport(tuple(rows), divergent, (p1, p2))


# ---------------------------------------------------------------------------
# Config (de)serialization: plain JSON, schema documented in the README


def _schedule_to_dict(s: Schedule) -> dict:
    return {"breakpoints": list(s.breakpoints), "values": list(s.values)}


def _schedule_from_dict(d: dict | float | int) -> Schedule:
    if isinstance(d, (int, float)):
        return Schedule.constant(float(d))
    return Schedule(tuple(float(x) for x in d["breakpoints"]), tuple(float(x) for x in d["values"]))


def _model_to_dict(m: SemimartingaleSpec) -> dict:
    out = {
        "x0": list(m.x0),
        "drift1": _schedule_to_dict(m.drift1),
        "drift2": _schedule_to_dict(m.drift2),
        "vol1": _schedule_to_dict(m.vol1),
        "vol2": _schedule_to_dict(m.vol2),
        "corr": _schedule_to_dict(m.corr),
        "scheduled_jumps": [{"time": ev.time, "size": list(ev.size)} for ev in m.scheduled_jumps],
        "horizon": m.horizon,
    }
    if m.poisson_jumps is not None:
        pj = m.poisson_jumps
        out["poisson_jumps"] = {
            "intensity": pj.intensity,
            "size1": {"kind": pj.size1.kind, "params": list(pj.size1.params)},
            "size2": {"kind": pj.size2.kind, "params": list(pj.size2.params)},
            "common_prob": pj.common_prob,
        }
    else:
        out["poisson_jumps"] = None
    return out


def _model_from_dict(d: dict) -> SemimartingaleSpec:
    pj = None
    if d.get("poisson_jumps"):
        raw = d["poisson_jumps"]
        pj = PoissonJumps(
            intensity=float(raw["intensity"]),
            size1=SizeDist(raw["size1"]["kind"], tuple(raw["size1"]["params"])),
            size2=SizeDist(raw["size2"]["kind"], tuple(raw["size2"]["params"])),
            common_prob=float(raw["common_prob"]),
        )
    return SemimartingaleSpec(
        x0=tuple(d.get("x0", (0.0, 0.0))),
        drift1=_schedule_from_dict(d.get("drift1", 0.0)),
        drift2=_schedule_from_dict(d.get("drift2", 0.0)),
        vol1=_schedule_from_dict(d.get("vol1", 1.0)),
        vol2=_schedule_from_dict(d.get("vol2", 1.0)),
        corr=_schedule_from_dict(d.get("corr", 0.0)),
        scheduled_jumps=tuple(
            JumpEvent(float(j["time"]), tuple(float(x) for x in j["size"]))
            for j in d.get("scheduled_jumps", [])
        ),
        poisson_jumps=pj,
        horizon=float(d.get("horizon", 1.0)),
    )


def _functional_to_text(f) -> str:
    from .functionals import (
        AbsProductPower,
        OneDimPower,
        PerturbedProductPower,
        SignedProductPower,
    )

    if isinstance(f, SignedProductPower):
        return f"spp:{f.p1},{f.p2}"
    if isinstance(f, AbsProductPower):
        return f"app:{f.p1},{f.p2}"
    if isinstance(f, PerturbedProductPower):
        return f"pert:{_functional_to_text(f.base)}"
    if isinstance(f, OneDimPower):
        return f"pow:{int(f.p)}" if f.signed else f"abspow:{f.p}"
    raise ParameterError("custom functionals cannot be serialized to a config file")


def config_to_dict(config: ExperimentConfig) -> dict:
    norm = None
    if config.normalization is not None:
        norm = {
            "p": config.normalization.p,
            "rate_scale": config.normalization.rate_scale,
            "rate_exponent": config.normalization.rate_exponent,
        }
    target: dict = {"kind": config.limit_target.kind}
    if config.limit_target.value is not None:
        target["value"] = config.limit_target.value
    if config.limit_target.tag is not None:
        target["tag"] = config.limit_target.tag
    return {
        "model": _model_to_dict(config.model),
        "scheme": {"variant": config.scheme_variant, **config.scheme_params},
        "functional": _functional_to_text(config.functional),
        "component": config.component,
        "normalization": norm,
        "n_ladder": list(config.n_ladder),
        "replications": config.replications,
        "base_seed": config.base_seed,
        "limit_target": target,
        "se_multiple": config.se_multiple,
        "output": config.output,
    }


def config_from_dict(d: dict) -> ExperimentConfig:
    try:
        scheme = dict(d["scheme"])
        variant = scheme.pop("variant")
        norm = None
        if d.get("normalization"):
            raw = d["normalization"]
            norm = Normalization(
                p=float(raw["p"]),
                rate_scale=float(raw.get("rate_scale", 1.0)),
                rate_exponent=float(raw.get("rate_exponent", 1.0)),
            )
        raw_target = d.get("limit_target", {"kind": "value", "value": 0.0})
        target = LimitTarget(
            kind=raw_target["kind"],
            value=raw_target.get("value"),
            tag=raw_target.get("tag"),
        )
        return ExperimentConfig(
            model=_model_from_dict(d["model"]),
            scheme_variant=variant,
            scheme_params=scheme,
            functional=parse_functional(d["functional"]),
            component=d.get("component"),
            normalization=norm,
            n_ladder=tuple(int(n) for n in d["n_ladder"]),
            replications=int(d.get("replications", 1)),
            base_seed=int(d.get("base_seed", 0)),
            limit_target=target,
            se_multiple=float(d.get("se_multiple", 4.0)),
            output=d.get("output"),
        )
    except KeyError as exc:
        raise InputError(f"config is missing required key {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def save_config(config: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")
