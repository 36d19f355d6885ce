"""Command-line interface.

Subcommands: ``simulate`` (emit a path), ``scheme`` (emit or diagnose
observation schemes), ``eval`` (one functional evaluation), ``stats``
(emit scheme statistics as step functions), ``limit`` (evaluate a limit
target), ``converge`` (full Monte Carlo experiment).

Exit codes: 0 on success, 1 on input errors, 2 when a convergence
experiment's verdict fails (for CI use).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from ._backend import BACKEND
from ._rng import derive_seed
from .errors import AsynchyError
from .harness import (
    _model_from_dict,
    _replicate,
    _target,
    load_config,
    run_experiment,
    run_scheme_diagnostics,
)
from .model import sample_path
from .scheme_stats import (
    capped_pair_power_sum,
    interval_power_sum,
    pair_interval_power_sum,
    pair_overlap_power_sum,
    split_overlap_power_sum,
)
from .schemes import generate_scheme, mesh, parse_scheme, request_times, save_scheme_text


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_model(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return _model_from_dict(raw.get("model", raw))


def _cmd_simulate(args) -> int:
    model = _load_model(args.config)
    if args.times:
        times = np.array([float(x) for x in args.times.split(",")])
    else:
        times = np.linspace(0.0, model.horizon, args.grid + 1)
    path = sample_path(model, times, args.seed)
    lines = ["time,x1,x2"]
    lines.extend(
        f"{t!r},{v[0]!r},{v[1]!r}"
        for t, v in zip(path.times.tolist(), path.values.tolist())
    )
    for ev in path.jumps:
        lines.append(f"# jump,{ev.time!r},{ev.size[0]!r},{ev.size[1]!r}")
    _write("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_scheme(args) -> int:
    if args.diagnose:
        config = load_config(args.config)
        report = run_scheme_diagnostics(config)
        _write(report.to_csv() if args.format == "csv" else report.to_text(), args.out)
        return 0
    if not args.spec:
        raise AsynchyError("scheme needs --spec (or --config with --diagnose)")
    spec = parse_scheme(args.spec)
    scheme = generate_scheme(spec, args.horizon, args.seed)
    if args.out:
        save_scheme_text(scheme, args.out)
    else:
        save_scheme_text(scheme, sys.stdout)
    sys.stderr.write(f"mesh={mesh(scheme)!r}\n")
    return 0


def _cmd_eval(args) -> int:
    config = load_config(args.config)
    value, target = _replicate(config, args.n, args.rep)
    sys.stdout.write(f"statistic={value!r}\ntarget={target!r}\n")
    return 0


_STAT_FORMS = "interval1:p | interval2:p | cross:p1,p2 | split:k,m,p | full:k,m,p | cond:p1,p2"


def _cmd_stats(args) -> int:
    spec = parse_scheme(args.spec)
    scheme = generate_scheme(spec, args.horizon, args.seed)
    kind, _, rest = args.stat.partition(":")
    parts = [float(x) for x in rest.split(",")] if rest else []
    if kind in ("interval1", "interval2"):
        sf = interval_power_sum(scheme, 1 if kind == "interval1" else 2, parts[0], args.rate)
    elif kind == "cross":
        sf = pair_interval_power_sum(scheme, parts[0], parts[1], args.rate)
    elif kind == "split":
        sf = split_overlap_power_sum(scheme, int(parts[0]), int(parts[1]), parts[2], args.rate)
    elif kind == "full":
        sf = pair_overlap_power_sum(scheme, int(parts[0]), int(parts[1]), parts[2], args.rate)
    elif kind == "cond":
        value = capped_pair_power_sum(scheme, parts[0], parts[1])
        _write(f"{value!r}\n", args.out)
        return 0
    else:
        raise AsynchyError(f"unknown statistic {args.stat!r}; forms: {_STAT_FORMS}")
    _write(sf.to_text(), args.out)
    return 0


def _cmd_limit(args) -> int:
    config = load_config(args.config)
    n = args.n or config.n_ladder[-1]
    scheme_seed = derive_seed(config.base_seed, n, args.rep, "scheme")
    path_seed = derive_seed(config.base_seed, n, args.rep, "path")
    scheme = generate_scheme(config.scheme_spec(n), config.model.horizon, scheme_seed)
    path = sample_path(config.model, request_times(scheme), path_seed)
    rate = config.normalization.rate(n) if config.normalization else None
    value = _target(config, scheme, path, rate)
    sys.stdout.write(f"{value!r}\n")
    return 0


def _cmd_converge(args) -> int:
    config = load_config(args.config)
    report = run_experiment(config, jobs=args.jobs)
    out = args.out or config.output
    _write(report.to_csv() if args.format == "csv" else report.to_text(), out)
    return 0 if report.passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asynchy",
        description="Pair functionals of asynchronously observed bivariate processes: "
        "simulation, scheme statistics, limits and convergence experiments "
        f"(kernel backend: {BACKEND})",
    )
    parser.add_argument("--version", action="version", version=f"asynchy {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a path at given times")
    p.add_argument("--config", required=True, help="JSON file with a model (or full experiment) config")
    p.add_argument("--times", help="comma-separated times; default: uniform grid")
    p.add_argument("--grid", type=int, default=100, help="grid intervals when --times is absent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("scheme", help="emit a scheme, or diagnose a config's scheme family")
    p.add_argument("--spec", help="e.g. sync:100 | async:100,0.5 | osc:101 | poisson:100,1,1")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="experiment config (with --diagnose)")
    p.add_argument("--diagnose", action="store_true")
    p.add_argument("--format", choices=("csv", "rows"), default="csv")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_scheme)

    p = sub.add_parser("eval", help="one functional evaluation on one replication")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rep", type=int, default=1)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("stats", help="emit a scheme statistic as two-column text")
    p.add_argument("--spec", required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stat", required=True, help=_STAT_FORMS)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("limit", help="evaluate the config's limit target")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, help="ladder point (default: largest)")
    p.add_argument("--rep", type=int, default=1)
    p.set_defaults(fn=_cmd_limit)

    p = sub.add_parser("converge", help="run the full convergence experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "rows"), default="csv")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_converge)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (AsynchyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
