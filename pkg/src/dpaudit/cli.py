"""Command-line entry point: plan, simulate, figure, serve, audit.

Deterministic outputs (CSV, reports) go to stdout or the requested file;
the resolved parameter set is echoed to stderr so piped output stays clean.
Audit verdicts use the exit code: 0 fair, 2 unfair, 1 error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import sys
from dataclasses import replace
from pathlib import Path

import httpx
import yaml

from .client import AuditClient, client_audit
from .core import AuditSpec, FairnessReport, ScoreDomain
from .errors import AuditError
from .harness import (load_experiment_config, result_csv, run_experiment,
                      summarize)
from .planner import (SWEEP_PARAMETERS, factor_sweep, n_min_nonprivate,
                      n_min_private, sweep_csv)
from .population import load_population, sample_audience
from .service import load_server_config, serve

EXIT_FAIR = 0
EXIT_ERROR = 1
EXIT_UNFAIR = 2

DEFAULT_SEED = 1729
SEED_ENV_VAR = "DPAUDIT_SEED"

DEFAULT_SWEEP_GRIDS = {
    "alpha": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
    "delta": [0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2],
    "groups": [2, 3, 4, 5, 6, 7, 8, 9, 10],
    "bins": [2, 5, 10, 20, 50, 100, 200, 500, 1000],
}


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, DEFAULT_SEED))


def _echo_resolved(**params) -> None:
    desc = " ".join(f"{k}={v}" for k, v in params.items())
    print(f"resolved: {desc}", file=sys.stderr)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def bundled_config(name: str) -> Path:
    """Path of a bundled experiment config (e.g. "fair_default")."""
    return Path(str(importlib.resources.files("dpaudit") / "configs" / f"{name}.yaml"))


def _resolve_config_path(raw: str) -> Path:
    path = Path(raw)
    if path.exists():
        return path
    bundled = bundled_config(raw)
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"no config file {raw!r} and no bundled config of that name")


def format_report(report: FairnessReport) -> str:
    lines = [f"efg: {report.efg!r}"]
    if report.argmax is not None:
        g1, g2, y = report.argmax
        lines.append(f"argmax: {g1} vs {g2} at bin {y}")
    lines.append(f"alpha: {report.alpha}")
    lines.append(f"mode: {report.mode}")
    if report.per_group_n:
        sizes = " ".join(f"{g}={n}" for g, n in report.per_group_n.items())
        lines.append(f"per-group n: {sizes}")
    lines.append(f"verdict: {'fair' if report.passed else 'unfair'}")
    return "\n".join(lines) + "\n"


def _cmd_plan(args) -> int:
    _echo_resolved(alpha=args.alpha, delta=args.delta, epsilon=args.epsilon,
                   groups=args.groups, bins=args.bins,
                   privacy=not args.no_privacy)
    if args.no_privacy:
        result = n_min_nonprivate(args.alpha, args.delta, args.groups, args.bins)
    else:
        result = n_min_private(args.alpha, args.delta, args.epsilon,
                               args.groups, args.bins)
    print(f"n_min_per_group: {result.n_min_per_group}")
    print(f"raw_bound: {result.raw_bound!r}")
    print(f"factor_vs_nonprivate: {result.factor_vs_nonprivate!r}")
    print(f"upper_bound_factor: {result.upper_bound_factor!r}")
    return 0


def _cmd_simulate(args) -> int:
    spec = load_experiment_config(_resolve_config_path(args.config))
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    _echo_resolved(alpha=spec.audit.alpha, delta=spec.audit.delta,
                   epsilon=spec.audit.epsilon,
                   groups=len(spec.audit.attributes),
                   bins=spec.audit.domain.size, n_per_group=spec.n_per_group,
                   trials=spec.trials, seed=spec.seed,
                   use_privacy=spec.use_privacy)
    result = run_experiment(spec)
    _emit(result_csv(result), args.output)
    print(summarize(spec, result), file=sys.stderr)
    return 0


def _cmd_figure(args) -> int:
    grid = DEFAULT_SWEEP_GRIDS[args.sweep]
    if args.grid:
        cast = int if args.sweep in ("groups", "bins") else float
        grid = [cast(v) for v in args.grid.split(",")]
    _echo_resolved(sweep=args.sweep, grid=grid)
    points = factor_sweep(args.sweep, grid)
    _emit(sweep_csv(points), args.out)
    return 0


def _cmd_serve(args) -> int:
    config = load_server_config(args.config)
    _echo_resolved(host=config.host, port=config.port,
                   population=config.population_path,
                   total_epsilon=config.total_epsilon, seed=config.seed)
    serve(config)
    return 0


def _cmd_audit(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    labels = [g.strip() for g in args.groups.split(",") if g.strip()]
    spec = AuditSpec.for_groups(labels, ScoreDomain.discrete(args.bins),
                                alpha=args.alpha, delta=args.delta,
                                epsilon=args.epsilon)
    if args.n is not None:
        n = args.n
    else:
        n = n_min_private(args.alpha, args.delta, args.epsilon,
                          len(labels), args.bins).n_min_per_group
    _echo_resolved(endpoint=args.endpoint, auditor_id=args.auditor_id,
                   alpha=args.alpha, delta=args.delta, epsilon=args.epsilon,
                   groups=",".join(labels), bins=args.bins, n=n, seed=seed)

    population = load_population(args.population)
    audiences = {
        attr.label: sample_audience(population, attr, True, n, seed)
        for attr in spec.attributes
    }
    prefix = args.handle_prefix or f"audit{seed}"
    with AuditClient(args.endpoint, auditor_id=args.auditor_id) as client:
        report = client_audit(client, spec, audiences,
                              content_id=args.content_id,
                              handle_prefix=prefix)
    sys.stdout.write(format_report(report))
    return EXIT_FAIR if report.passed else EXIT_UNFAIR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpaudit",
        description="Plan, simulate, and run privacy-preserving fairness audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="minimum qualified sample size per group")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--no-privacy", action="store_true",
                   help="plan for raw (non-private) histogram release")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("simulate", help="Monte Carlo validation of an experiment config")
    p.add_argument("config", help="experiment config path or bundled name "
                                  "(fair_default, biased_shift2)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=None, help="write the result CSV here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("figure", help="sample-size overhead curve data")
    p.add_argument("--sweep", choices=SWEEP_PARAMETERS, required=True)
    p.add_argument("--grid", default=None,
                   help="comma-separated grid values (defaults per sweep)")
    p.add_argument("--out", "--output", dest="out", default=None,
                   help="write the sweep CSV here")
    p.set_defaults(func=_cmd_figure)

    p = sub.add_parser("serve", help="run the platform service")
    p.add_argument("config", help="server config path")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("audit", help="run one audit against a platform endpoint")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--auditor-id", default="auditor-0")
    p.add_argument("--population", required=True,
                   help="population file the audiences are drawn from")
    p.add_argument("--groups", default="a,b", help="comma-separated group labels")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None,
                   help="audience size per group (default: planner minimum)")
    p.add_argument("--seed", type=int, default=None,
                   help=f"audience sampling seed (env {SEED_ENV_VAR}, "
                        f"built-in {DEFAULT_SEED})")
    p.add_argument("--handle-prefix", default=None)
    p.add_argument("--content-id", default="content-0")
    p.set_defaults(func=_cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
