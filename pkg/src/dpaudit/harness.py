"""Monte Carlo validation of the audit guarantee at desk scale.

Each trial builds fresh per-group audiences of i.i.d. users, runs the full
pipeline (sample -> score -> privatize -> evaluate), and records the fairness
report. Aggregates split by ground truth: configurations whose closed-form
gap is within alpha report a failure rate (fraction of trials wrongly flagged);
configurations with a true gap above alpha report detection power.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
import yaml

from .core import (AuditSpec, FairnessReport, NoisyHistogram, ScoreDomain,
                   efg, efg_cdf, evaluate_audit)
from .errors import InsufficientTrials, InvalidParameter
from .estimator import (EstimatorConfig, estimator_from_dict,
                        expected_distribution, score_audience)
from .planner import n_min_nonprivate, n_min_private
from .population import generate_population, sample_audience
from .privacy import LaplaceNoiser, privatize_histogram
from .seeds import spawn_seed, substream

TRADEOFF_PARAMETERS = ("alpha", "epsilon", "n")
MIN_TRIALS_FOR_RATES = 100


@dataclass(frozen=True)
class ExperimentSpec:
    audit: AuditSpec
    estimator: EstimatorConfig
    n_per_group: int
    trials: int
    seed: int
    use_privacy: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameter(f"trials must be >= 1, got {self.trials}")
        if self.n_per_group < 1:
            raise InvalidParameter(f"n_per_group must be >= 1, got {self.n_per_group}")


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregate of one experiment; exactly one of failure_rate/power is set."""

    trials: int
    n_per_group: int
    use_privacy: bool
    true_efg: float
    flagged: int
    failure_rate: float | None
    power: float | None
    efg_mean: float
    efg_p50: float
    efg_p95: float
    wall_clock: float

    @property
    def flag_rate(self) -> float:
        return self.flagged / self.trials


def true_distributions(spec: ExperimentSpec) -> dict[str, np.ndarray]:
    """Closed-form per-group score distributions under the configured estimator."""
    return {
        attr.label: expected_distribution(spec.estimator, attr, spec.audit.domain)
        for attr in spec.audit.attributes
    }


def true_gap(spec: ExperimentSpec) -> float:
    """Ground-truth fairness gap of the configuration (no sampling, no noise)."""
    dists = true_distributions(spec)
    gap_fn = efg_cdf if spec.audit.domain.kind == "continuous" else efg
    report = gap_fn([dists[a.label] for a in spec.audit.attributes],
                    spec.audit.domain, spec.audit.alpha,
                    groups=spec.audit.attributes, mode="exact")
    return report.efg


def run_trial(spec: ExperimentSpec, trial_seed: int) -> FairnessReport:
    """One end-to-end audit over fresh audiences of n_per_group i.i.d. users.

    Per group, the trial seed expands into the named population / audience /
    score / noise sub-streams, so a trial is fully determined by its seed.
    """
    audit = spec.audit
    released: list[NoisyHistogram] = []
    for attr in audit.attributes:
        gseed = spawn_seed(trial_seed, attr.label)
        pop = generate_population(spec.n_per_group, {attr.label: 1.0}, 1.0, gseed)
        audience = sample_audience(pop, attr, True, spec.n_per_group, gseed)
        hist = score_audience(spec.estimator, audience, audit.domain,
                              substream(gseed, "score"))
        if spec.use_privacy:
            noiser = LaplaceNoiser.for_epsilon(audit.epsilon,
                                               rng=substream(gseed, "noise"))
            released.append(privatize_histogram(hist, audit.epsilon, noiser))
        else:
            released.append(NoisyHistogram(
                group=hist.group,
                noisy_counts=tuple(float(c) for c in hist.counts),
                n_declared=hist.n,
                epsilon_spent=0.0,
            ))
    return evaluate_audit(audit, released,
                          mode="noisy" if spec.use_privacy else "exact")


def trial_seeds(spec: ExperimentSpec) -> Iterator[int]:
    for i in range(spec.trials):
        yield spawn_seed(spec.seed, "trial", i)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Aggregate run_trial over independent per-trial streams.

    The flag rate is reported as failure_rate when the configuration is truly
    fair (closed-form gap <= alpha) and as power when it is truly unfair.
    """
    if spec.trials < MIN_TRIALS_FOR_RATES:
        warnings.warn(
            f"{spec.trials} trials is too few for stable rate estimates "
            f"(want >= {MIN_TRIALS_FOR_RATES})", InsufficientTrials, stacklevel=2)
    start = time.perf_counter()
    gaps = np.empty(spec.trials)
    flagged = 0
    for i, tseed in enumerate(trial_seeds(spec)):
        report = run_trial(spec, tseed)
        gaps[i] = report.efg
        flagged += 0 if report.passed else 1
    elapsed = time.perf_counter() - start

    truth = true_gap(spec)
    rate = flagged / spec.trials
    fair = truth <= spec.audit.alpha
    return ExperimentResult(
        trials=spec.trials,
        n_per_group=spec.n_per_group,
        use_privacy=spec.use_privacy,
        true_efg=truth,
        flagged=flagged,
        failure_rate=rate if fair else None,
        power=None if fair else rate,
        efg_mean=float(gaps.mean()),
        efg_p50=float(np.median(gaps)),
        efg_p95=float(np.quantile(gaps, 0.95)),
        wall_clock=elapsed,
    )


RESULT_CSV_HEADER = ("trials,n_per_group,use_privacy,true_efg,flagged,"
                     "failure_rate,power,efg_mean,efg_p50,efg_p95")


def result_csv(result: ExperimentResult) -> str:
    """One-row CSV of the deterministic result fields (wall clock excluded)."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, float):
            return repr(v)
        return str(v)

    row = [result.trials, result.n_per_group, result.use_privacy,
           result.true_efg, result.flagged, result.failure_rate, result.power,
           result.efg_mean, result.efg_p50, result.efg_p95]
    return RESULT_CSV_HEADER + "\n" + ",".join(cell(v) for v in row) + "\n"


def summarize(spec: ExperimentSpec, result: ExperimentResult) -> str:
    """Human-readable verdict pairing the measured rate with its target."""
    lines = [
        f"trials={result.trials} n_per_group={result.n_per_group} "
        f"privacy={'on' if result.use_privacy else 'off'}",
        f"true gap {result.true_efg:.4f} vs alpha {spec.audit.alpha}: "
        f"{'fair' if result.failure_rate is not None else 'unfair'} configuration",
        f"EFG mean {result.efg_mean:.4f}, median {result.efg_p50:.4f}, "
        f"p95 {result.efg_p95:.4f}",
    ]
    if result.failure_rate is not None:
        lines.append(
            f"failure rate {result.failure_rate:.4f} "
            f"(target <= delta = {spec.audit.delta})")
    else:
        lines.append(f"power {result.power:.4f}")
    lines.append(f"wall clock {result.wall_clock:.2f}s")
    return "\n".join(lines)


@dataclass(frozen=True)
class TradeoffPoint:
    parameter: str
    value: float
    n_per_group: int
    n_min: int
    flag_rate: float
    efg_mean: float


def tradeoff_curve(spec: ExperimentSpec, parameter: str,
                   grid: Sequence[float]) -> list[TradeoffPoint]:
    """Planner prediction vs measured behavior along one parameter axis.

    parameter="epsilon" or "alpha" re-plans n_min at each grid value and runs
    at it; parameter="n" holds the audit fixed and varies the sample size.
    """
    if parameter not in TRADEOFF_PARAMETERS:
        raise InvalidParameter(
            f"parameter must be one of {TRADEOFF_PARAMETERS}, got {parameter!r}")
    if len(grid) == 0:
        raise InvalidParameter("tradeoff grid must be non-empty")

    audit = spec.audit
    num_groups, num_bins = len(audit.attributes), audit.domain.size

    def plan(alpha: float, epsilon: float) -> int:
        if spec.use_privacy:
            return n_min_private(alpha, audit.delta, epsilon, num_groups,
                                 num_bins).n_min_per_group
        return n_min_nonprivate(alpha, audit.delta, num_groups,
                                num_bins).n_min_per_group

    points = []
    for i, value in enumerate(grid):
        value = float(value)
        if parameter == "epsilon":
            audit_i = replace(audit, epsilon=value)
            n_min = plan(audit.alpha, value)
            n_used = n_min
        elif parameter == "alpha":
            audit_i = replace(audit, alpha=value)
            n_min = plan(value, audit.epsilon)
            n_used = n_min
        else:
            audit_i = audit
            n_min = plan(audit.alpha, audit.epsilon)
            n_used = int(value)
        spec_i = replace(spec, audit=audit_i, n_per_group=n_used,
                         seed=spawn_seed(spec.seed, "tradeoff", parameter, i))
        result = run_experiment(spec_i)
        points.append(TradeoffPoint(
            parameter=parameter, value=value, n_per_group=n_used, n_min=n_min,
            flag_rate=result.flag_rate, efg_mean=result.efg_mean,
        ))
    return points


TRADEOFF_CSV_HEADER = "parameter,value,n_per_group,n_min,flag_rate,efg_mean"


def tradeoff_csv(points: Sequence[TradeoffPoint]) -> str:
    lines = [TRADEOFF_CSV_HEADER]
    for p in points:
        lines.append(f"{p.parameter},{p.value!r},{p.n_per_group},{p.n_min},"
                     f"{p.flag_rate!r},{p.efg_mean!r}")
    return "\n".join(lines) + "\n"


def _require(cfg: Mapping, key: str, where: str):
    if key not in cfg:
        raise InvalidParameter(f"missing {key!r} in {where} section")
    return cfg[key]


def _domain_from_config(audit_cfg: Mapping) -> ScoreDomain:
    if "domain" in audit_cfg:
        dom = audit_cfg["domain"]
        kind = dom.get("kind", "discrete")
        if kind == "continuous":
            return ScoreDomain.continuous(dom["edges"])
        return ScoreDomain.discrete(dom["bins"])
    return ScoreDomain.discrete(int(_require(audit_cfg, "bins", "audit")))


def experiment_from_dict(cfg: Mapping) -> ExperimentSpec:
    """Build an ExperimentSpec from the declarative config shape.

    Top-level sections: audit (alpha, delta, epsilon, groups, bins|domain),
    estimator (base, bias_model, bias_params), experiment (n_per_group which
    may be "auto" for the planner's minimum, trials, seed, use_privacy).
    """
    audit_cfg = dict(_require(cfg, "audit", "top-level"))
    exp_cfg = dict(_require(cfg, "experiment", "top-level"))
    audit = AuditSpec.for_groups(
        [str(g) for g in _require(audit_cfg, "groups", "audit")],
        _domain_from_config(audit_cfg),
        alpha=float(_require(audit_cfg, "alpha", "audit")),
        delta=float(_require(audit_cfg, "delta", "audit")),
        epsilon=float(_require(audit_cfg, "epsilon", "audit")),
    )
    estimator = estimator_from_dict(dict(cfg.get("estimator", {})))
    use_privacy = bool(exp_cfg.get("use_privacy", True))

    n_raw = exp_cfg.get("n_per_group", "auto")
    if n_raw == "auto":
        num_groups, num_bins = len(audit.attributes), audit.domain.size
        if use_privacy:
            n = n_min_private(audit.alpha, audit.delta, audit.epsilon,
                              num_groups, num_bins).n_min_per_group
        else:
            n = n_min_nonprivate(audit.alpha, audit.delta, num_groups,
                                 num_bins).n_min_per_group
    else:
        n = int(n_raw)

    return ExperimentSpec(
        audit=audit,
        estimator=estimator,
        n_per_group=n,
        trials=int(exp_cfg.get("trials", 1000)),
        seed=int(exp_cfg.get("seed", 0)),
        use_privacy=use_privacy,
    )


def load_experiment_config(path: str | Path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, Mapping):
        raise InvalidParameter(f"{path} does not contain a mapping")
    return experiment_from_dict(cfg)
