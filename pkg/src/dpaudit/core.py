"""Auditor-side fairness math over per-group score distributions.

Domain types for one audit (sensitive attributes, score domain, tolerances)
plus the operations the auditor runs on released histograms: empirical
per-group distributions, the worst-pair fairness gap, and the pass/fail
decision against the tolerance alpha, in both per-bin and CDF form.

Everything here is immutable and pure; no randomness, no I/O.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import GroupCountMismatch, TooFewGroups, ZeroQualifiedGroup


@dataclass(frozen=True)
class AttributeId:
    """One value of the sensitive attribute, e.g. label="women", index=1.

    Indices are dense 0..num_groups-1 within an audit; labels are unique.
    """

    label: str
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"attribute index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class ScoreDomain:
    """The finite score space: labelled discrete bins or binned real intervals.

    For kind="discrete", ``bins`` holds one label per score value. For
    kind="continuous", ``bins`` holds strictly increasing bin edges, so
    ``size`` is len(edges) - 1.
    """

    kind: Literal["discrete", "continuous"]
    bins: tuple

    def __post_init__(self):
        if self.kind not in ("discrete", "continuous"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "discrete":
            if len(self.bins) < 1:
                raise ValueError("discrete domain needs at least one bin")
            if len(set(self.bins)) != len(self.bins):
                raise ValueError("discrete bin labels must be unique")
        else:
            edges = [float(e) for e in self.bins]
            if len(edges) < 2:
                raise ValueError("continuous domain needs at least two edges")
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise ValueError("bin edges must be strictly increasing")

    @classmethod
    def discrete(cls, bins) -> "ScoreDomain":
        """Discrete domain from a bin count (labels "0".."K-1") or label list."""
        if isinstance(bins, int):
            labels = tuple(str(i) for i in range(bins))
        else:
            labels = tuple(bins)
        return cls(kind="discrete", bins=labels)

    @classmethod
    def continuous(cls, edges) -> "ScoreDomain":
        return cls(kind="continuous", bins=tuple(float(e) for e in edges))

    @classmethod
    def equal_width(cls, low: float, high: float, num_bins: int) -> "ScoreDomain":
        """Continuous domain with num_bins equal-width bins over [low, high]."""
        edges = np.linspace(low, high, num_bins + 1)
        return cls(kind="continuous", bins=tuple(float(e) for e in edges))

    @property
    def size(self) -> int:
        if self.kind == "discrete":
            return len(self.bins)
        return len(self.bins) - 1

    def bin_of(self, value):
        """Map raw score values to bin indices, clipping to the end bins.

        Discrete domains treat the value as a position in bin units and round
        half-up; continuous domains locate the value between edges. Accepts a
        scalar (returns int) or an array (returns an int array).
        """
        arr = np.asarray(value, dtype=float)
        if self.kind == "discrete":
            idx = np.floor(arr + 0.5).astype(int)
        else:
            idx = np.searchsorted(self.bins, arr, side="right") - 1
        idx = np.clip(idx, 0, self.size - 1)
        if np.ndim(value) == 0:
            return int(idx)
        return idx


@dataclass(frozen=True)
class AuditSpec:
    """The auditor's knobs: tolerance alpha, confidence delta, privacy epsilon,
    the attribute set, and the score domain.

    Requires epsilon > alpha / 2, the standing assumption of the private
    sample-size bound.
    """

    alpha: float
    delta: float
    epsilon: float
    attributes: tuple[AttributeId, ...]
    domain: ScoreDomain

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not self.epsilon > self.alpha / 2:
            raise ValueError(
                f"epsilon must exceed alpha/2 = {self.alpha / 2}, got {self.epsilon}"
            )
        if len(self.attributes) < 2:
            raise ValueError("an audit needs at least two attribute groups")
        labels = [a.label for a in self.attributes]
        if len(set(labels)) != len(labels):
            raise ValueError("attribute labels must be unique")
        if sorted(a.index for a in self.attributes) != list(range(len(labels))):
            raise ValueError("attribute indices must be dense 0..|A|-1")

    @classmethod
    def for_groups(cls, labels: Sequence[str], domain: ScoreDomain, *,
                   alpha: float, delta: float, epsilon: float) -> "AuditSpec":
        attrs = tuple(AttributeId(label, i) for i, label in enumerate(labels))
        return cls(alpha=alpha, delta=delta, epsilon=epsilon,
                   attributes=attrs, domain=domain)


@dataclass(frozen=True)
class ScoreHistogram:
    """Raw per-bin counts of qualified members of one group. Platform-side only."""

    group: AttributeId
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise ValueError("histogram counts must be non-negative")

    @property
    def n(self) -> int:
        """Total qualified count for the group."""
        return int(sum(self.counts))


@dataclass(frozen=True)
class NoisyHistogram:
    """Laplace-noised per-bin counts as released to the auditor.

    Negative values pass through unclamped: clamping would bias the noisy
    estimate and break its unbiasedness analysis. ``n_declared`` is the group
    size the auditor already knows (the denominator of every probability).
    """

    group: AttributeId
    noisy_counts: tuple[float, ...]
    n_declared: int
    epsilon_spent: float


@dataclass(frozen=True)
class FairnessReport:
    """Outcome of one fairness evaluation.

    ``argmax`` is the (group label, group label, bin index) attaining the gap,
    with lexicographic tie-breaking; None only for the degenerate CDF case with
    a single bin. ``passed`` holds iff efg <= alpha.
    """

    efg: float
    argmax: tuple[str, str, int] | None
    passed: bool
    mode: Literal["exact", "noisy"]
    alpha: float
    per_group_n: Mapping[str, int] = field(default_factory=dict)


def empirical_distribution(hist: ScoreHistogram) -> np.ndarray:
    """Per-bin empirical probabilities counts[y] / n for one group.

    Raises ZeroQualifiedGroup when the group has no qualified members (the
    degenerate case the sample-size bound exists to rule out).
    """
    n = hist.n
    if n == 0:
        raise ZeroQualifiedGroup(
            f"group {hist.group.label!r} has no qualified members"
        )
    return np.asarray(hist.counts, dtype=float) / n


def noisy_distribution(hist: NoisyHistogram) -> np.ndarray:
    """Per-bin noisy probabilities noisy_counts[y] / n_declared.

    Entries may be negative and need not sum to 1; they are never renormalized,
    since any post-processing is the auditor's choice and renormalizing would
    obscure the estimator whose error the sample-size bound analyzes.
    """
    if hist.n_declared <= 0:
        raise ZeroQualifiedGroup(
            f"group {hist.group.label!r} declared a non-positive size"
        )
    return np.asarray(hist.noisy_counts, dtype=float) / hist.n_declared


def _group_labels(groups, count: int) -> list[str]:
    if groups is None:
        return [f"g{i}" for i in range(count)]
    labels = [g.label if isinstance(g, AttributeId) else str(g) for g in groups]
    if len(labels) != count:
        raise GroupCountMismatch(
            f"{count} distributions but {len(labels)} group identifiers"
        )
    return labels


def _as_matrix(distributions, width: int) -> np.ndarray:
    rows = []
    for vec in distributions:
        arr = np.asarray(vec, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != width:
            raise GroupCountMismatch(
                f"distribution of length {arr.shape[0] if arr.ndim == 1 else arr.shape}"
                f" does not match |Y| = {width}"
            )
        rows.append(arr)
    return np.vstack(rows)


def _max_pairwise_gap(matrix: np.ndarray) -> tuple[float, tuple[int, int, int]]:
    """Max over group pairs and bins of |P[i, y] - P[j, y]|.

    Tie-breaking is lexicographic: lowest (i, j), then lowest bin index.
    """
    num_groups = matrix.shape[0]
    best = -1.0
    where = (0, 1, 0)
    for i in range(num_groups):
        for j in range(i + 1, num_groups):
            diffs = np.abs(matrix[i] - matrix[j])
            y = int(np.argmax(diffs))
            if diffs[y] > best:
                best = float(diffs[y])
                where = (i, j, y)
    return best, where


def efg(distributions: Sequence, domain: ScoreDomain, alpha: float, *,
        groups=None, per_group_n: Mapping[str, int] | None = None,
        mode: Literal["exact", "noisy"] = "exact") -> FairnessReport:
    """Empirical fairness gap over discrete score bins.

    The gap is the maximum over all group pairs and bins of the absolute
    difference in per-bin probabilities; a large gap implies unfairness, and
    the audit passes iff the gap is at most alpha.

    Args:
        distributions: one per-bin probability vector per group, each of
            length domain.size (exact or noisy).
        domain: the score domain the vectors are defined over.
        alpha: fairness tolerance for the pass/fail decision.
        groups: optional group identifiers (AttributeId or str), parallel to
            distributions; defaults to positional labels.
        per_group_n: optional map of group label to qualified sample size,
            echoed into the report.
        mode: "exact" for empirical distributions, "noisy" for privatized ones.
    """
    if len(distributions) < 2:
        raise TooFewGroups("fairness gap needs at least two groups")
    labels = _group_labels(groups, len(distributions))
    matrix = _as_matrix(distributions, domain.size)
    gap, (i, j, y) = _max_pairwise_gap(matrix)
    return FairnessReport(
        efg=gap,
        argmax=(labels[i], labels[j], y),
        passed=gap <= alpha,
        mode=mode,
        alpha=alpha,
        per_group_n=dict(per_group_n or {}),
    )


def efg_cdf(distributions: Sequence, domain: ScoreDomain, alpha: float, *,
            groups=None, per_group_n: Mapping[str, int] | None = None,
            mode: Literal["exact", "noisy"] = "exact") -> FairnessReport:
    """Fairness gap for continuous scores, compared through CDFs.

    Each per-bin vector is folded into its complementary CDF, the probability
    of scoring above each interior threshold; the gap is then the same
    worst-pair statistic over thresholds. A single-bin domain has no interior
    threshold, so its gap is identically 0 (argmax None).
    """
    if len(distributions) < 2:
        raise TooFewGroups("fairness gap needs at least two groups")
    labels = _group_labels(groups, len(distributions))
    matrix = _as_matrix(distributions, domain.size)
    if domain.size == 1:
        return FairnessReport(
            efg=0.0, argmax=None, passed=True, mode=mode, alpha=alpha,
            per_group_n=dict(per_group_n or {}),
        )
    # ccdf[:, y] = sum over bins strictly above y, for interior thresholds y.
    ccdf = np.cumsum(matrix[:, ::-1], axis=1)[:, ::-1][:, 1:]
    gap, (i, j, y) = _max_pairwise_gap(ccdf)
    return FairnessReport(
        efg=gap,
        argmax=(labels[i], labels[j], y),
        passed=gap <= alpha,
        mode=mode,
        alpha=alpha,
        per_group_n=dict(per_group_n or {}),
    )


def evaluate_audit(spec: AuditSpec, noisy: Sequence[NoisyHistogram],
                   mode: Literal["exact", "noisy"] = "noisy") -> FairnessReport:
    """Step 4 of the audit: fairness decision over released noisy histograms.

    Expects exactly one histogram per attribute in the spec (matched by group
    label) and dispatches to the per-bin or CDF gap per the domain kind. Any
    further post-processing of the noisy values is the auditor's prerogative
    and cannot reduce the privacy guarantee. ``mode`` labels the report; pass
    "exact" when the histograms carry unnoised counts.
    """
    if len(noisy) < 2:
        raise TooFewGroups(
            f"audit spec names {len(spec.attributes)} groups but got {len(noisy)} histograms"
        )
    by_label: dict[str, NoisyHistogram] = {}
    for hist in noisy:
        if hist.group.label in by_label:
            raise GroupCountMismatch(f"duplicate histogram for group {hist.group.label!r}")
        by_label[hist.group.label] = hist
    ordered = []
    for attr in spec.attributes:
        if attr.label not in by_label:
            raise GroupCountMismatch(f"missing histogram for group {attr.label!r}")
        ordered.append(by_label[attr.label])

    dists = [noisy_distribution(h) for h in ordered]
    per_group_n = {h.group.label: h.n_declared for h in ordered}
    gap_fn = efg_cdf if spec.domain.kind == "continuous" else efg
    return gap_fn(
        dists, spec.domain, spec.alpha,
        groups=spec.attributes, per_group_n=per_group_n, mode=mode,
    )
