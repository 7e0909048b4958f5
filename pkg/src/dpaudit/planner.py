"""Closed-form minimum sample sizes for the fairness audit, with and without privacy.

Per group, the audit needs at least

    non-private:  (2 / alpha^2) * ln(2 |A| |Y| / delta)
    private:      (8 / alpha^2) * ln(3 |A| |Y| / delta)

qualified members, where |A| is the number of groups and |Y| the number of
score bins. The private bound holds for every epsilon > alpha / 2, so it is
free of epsilon. Their ratio, the privacy overhead, is

    f(P) = 4 * (ln 3 + P) / (ln 2 + P),   P = ln(|A| |Y| / delta),

which decreases monotonically from 4 * ln3 / ln2 (about 6.34) at P = 0 toward
4 as P grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EpsilonTooSmall, InvalidParameter

#: Supremum of the privacy overhead factor, attained only in the P -> 0 limit.
UPPER_BOUND_FACTOR = 4 * math.log(3) / math.log(2)

#: Canonical sweep parameter names, mirroring the plan inputs.
SWEEP_PARAMETERS = ("alpha", "delta", "groups", "bins")


@dataclass(frozen=True)
class PlanResult:
    """A minimum-sample-size answer.

    ``n_min_per_group`` is the ceiling of ``raw_bound``;
    ``factor_vs_nonprivate`` is the ratio of ceilinged counts (1.0 for a
    non-private plan) and never exceeds ``upper_bound_factor``.
    """

    n_min_per_group: int
    raw_bound: float
    factor_vs_nonprivate: float
    private: bool
    upper_bound_factor: float = UPPER_BOUND_FACTOR


def _validate(alpha: float, delta: float, num_groups: int, num_bins: int) -> None:
    # alpha = 1 is the degenerate maximum tolerance; still a usable plan input.
    if not 0 < alpha <= 1:
        raise InvalidParameter(f"alpha must be in (0, 1], got {alpha}")
    if not 0 < delta < 1:
        raise InvalidParameter(f"delta must be in (0, 1), got {delta}")
    if int(num_groups) != num_groups or num_groups < 2:
        raise InvalidParameter(f"num_groups must be an integer >= 2, got {num_groups}")
    if int(num_bins) != num_bins or num_bins < 1:
        raise InvalidParameter(f"num_bins must be an integer >= 1, got {num_bins}")


def _raw_nonprivate(alpha: float, delta: float, num_groups: int, num_bins: int) -> float:
    return (2.0 / alpha**2) * math.log(2.0 * num_groups * num_bins / delta)


def _raw_private(alpha: float, delta: float, num_groups: int, num_bins: int) -> float:
    return (8.0 / alpha**2) * math.log(3.0 * num_groups * num_bins / delta)


def n_min_nonprivate(alpha: float, delta: float, num_groups: int,
                     num_bins: int) -> PlanResult:
    """Minimum qualified samples per group without any privacy mechanism."""
    _validate(alpha, delta, num_groups, num_bins)
    raw = _raw_nonprivate(alpha, delta, num_groups, num_bins)
    return PlanResult(
        n_min_per_group=math.ceil(raw),
        raw_bound=raw,
        factor_vs_nonprivate=1.0,
        private=False,
    )


def n_min_private(alpha: float, delta: float, epsilon: float, num_groups: int,
                  num_bins: int) -> PlanResult:
    """Minimum qualified samples per group under an epsilon-DP release.

    Valid only for epsilon > alpha / 2; given that, the bound is the same for
    every epsilon, so epsilon enters only through the assumption check.
    """
    _validate(alpha, delta, num_groups, num_bins)
    if not epsilon > alpha / 2:
        raise EpsilonTooSmall(
            f"the private bound assumes epsilon > alpha/2; "
            f"got epsilon={epsilon} with alpha/2={alpha / 2}"
        )
    raw = _raw_private(alpha, delta, num_groups, num_bins)
    n_private = math.ceil(raw)
    n_nonprivate = math.ceil(_raw_nonprivate(alpha, delta, num_groups, num_bins))
    return PlanResult(
        n_min_per_group=n_private,
        raw_bound=raw,
        factor_vs_nonprivate=n_private / n_nonprivate,
        private=True,
    )


def factor_curve(p: float) -> float:
    """The overhead factor f(P) = 4 (ln3 + P) / (ln2 + P) for P >= 0.

    f(0) equals UPPER_BOUND_FACTOR and f decreases monotonically toward 4.
    """
    if p < 0:
        raise InvalidParameter(f"P = ln(|A||Y|/delta) cannot be negative, got {p}")
    return 4.0 * (math.log(3) + p) / (math.log(2) + p)


def sdp_factor(alpha: float, delta: float, num_groups: int, num_bins: int) -> float:
    """Continuous ratio of the private to the non-private raw bound.

    Alpha cancels in the ratio; it is validated but does not affect the value.
    The result lies in (4, UPPER_BOUND_FACTOR], approaching the upper end only
    as |A| |Y| / delta -> 1.
    """
    _validate(alpha, delta, num_groups, num_bins)
    return factor_curve(math.log(num_groups * num_bins / delta))


@dataclass(frozen=True)
class SweepPoint:
    parameter: str
    value: float
    factor: float
    n_private: int
    n_nonprivate: int


def factor_sweep(varying: str, grid, *, alpha: float = 0.2, delta: float = 0.05,
                 num_groups: int = 2, num_bins: int = 100) -> list[SweepPoint]:
    """Overhead factor along one parameter axis, others fixed.

    ``varying`` is one of "alpha", "delta", "groups", "bins". The fixed values
    default to the worked-example setting (alpha=0.2, delta=0.05, |A|=2,
    |Y|=100). The factor column is flat along alpha, since alpha cancels.
    """
    if varying not in SWEEP_PARAMETERS:
        raise InvalidParameter(
            f"unknown sweep parameter {varying!r}; expected one of {SWEEP_PARAMETERS}"
        )
    grid = list(grid)
    if not grid:
        raise InvalidParameter("sweep grid must be non-empty")

    points = []
    for value in grid:
        params = {"alpha": alpha, "delta": delta,
                  "num_groups": num_groups, "num_bins": num_bins}
        key = {"alpha": "alpha", "delta": "delta",
               "groups": "num_groups", "bins": "num_bins"}[varying]
        params[key] = value
        _validate(**params)
        points.append(SweepPoint(
            parameter=varying,
            value=float(value),
            factor=sdp_factor(**params),
            n_private=math.ceil(_raw_private(**params)),
            n_nonprivate=math.ceil(_raw_nonprivate(**params)),
        ))
    return points


def sweep_csv(points: list[SweepPoint], *, alpha: float = 0.2, delta: float = 0.05,
              num_groups: int = 2, num_bins: int = 100) -> str:
    """Render sweep points as CSV with the fixed parameters recorded up front."""
    if not points:
        raise InvalidParameter("nothing to render")
    varying = points[0].parameter
    fixed = {"alpha": alpha, "delta": delta, "groups": num_groups, "bins": num_bins}
    fixed.pop(varying, None)
    fixed_desc = " ".join(f"{k}={v}" for k, v in fixed.items())
    lines = [
        f"# fixed: {fixed_desc}",
        "parameter,value,factor,n_private,n_nonprivate",
    ]
    for pt in points:
        lines.append(
            f"{pt.parameter},{pt.value!r},{pt.factor!r},{pt.n_private},{pt.n_nonprivate}"
        )
    return "\n".join(lines) + "\n"
