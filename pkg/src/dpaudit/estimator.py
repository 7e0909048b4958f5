"""Pluggable relevance estimators with per-group bias models.

The base score T(x) is a discretized logistic transform of the user's latent
trait mixed with fresh per-draw noise: z = (trait + eta*xi)/sqrt(1+eta^2) is
standard normal for any eta >= 0, so the marginal score distribution does not
depend on the noise weight. Bias transforms (per attribute) are applied on
top of T(x): an additive constant, a multiplicative constant, or an additive
discrete random variable; the result is binned back into the score domain,
clipping to the end bins.

``expected_distribution`` computes the resulting per-bin probabilities in
closed form (normal CDF pushed through the bias map), which the Monte Carlo
scoring path must match in expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit, logit, ndtr

from .core import AttributeId, ScoreDomain, ScoreHistogram
from .errors import EmptyAudience, InvalidParameter, MixedGroupAudience
from .population import UserRecord

BASE_KINDS = ("logistic", "uniform")
BIAS_MODELS = ("none", "additive", "multiplicative", "random_additive")


@dataclass(frozen=True)
class RandomBias:
    """A finite-support additive bias: offset b_i with probability p_i."""

    offsets: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if len(self.offsets) != len(self.probabilities) or not self.offsets:
            raise InvalidParameter("offsets and probabilities must be non-empty and equal length")
        if not all(math.isfinite(b) for b in self.offsets):
            raise InvalidParameter(f"bias offsets must be finite, got {self.offsets}")
        if any(p < 0 for p in self.probabilities) or not math.isclose(
                sum(self.probabilities), 1.0, abs_tol=1e-9):
            raise InvalidParameter(
                f"bias probabilities must be non-negative and sum to 1, got {self.probabilities}")

    @property
    def mean(self) -> float:
        return float(sum(b * p for b, p in zip(self.offsets, self.probabilities)))


@dataclass(frozen=True)
class BaseDistribution:
    """Distribution of the unbiased score T(x).

    kind="logistic": u = expit((trait + eta*xi)/sqrt(1+eta^2)), xi ~ N(0,1).
    kind="uniform":  u ~ Uniform[0,1), independent of the trait.
    ``scoring_noise`` is eta, the weight of fresh noise relative to the trait.
    """

    kind: str = "logistic"
    scoring_noise: float = 1.0

    def __post_init__(self):
        if self.kind not in BASE_KINDS:
            raise InvalidParameter(f"base kind must be one of {BASE_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.scoring_noise) and self.scoring_noise >= 0):
            raise InvalidParameter(f"scoring_noise must be finite and >= 0, got {self.scoring_noise}")

    def draw_unit(self, traits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one u in [0,1) per trait; u determines the position in the domain."""
        traits = np.asarray(traits, dtype=float)
        if self.kind == "uniform":
            return rng.random(traits.shape)
        eta = self.scoring_noise
        z = (traits + eta * rng.standard_normal(traits.shape)) / math.sqrt(1.0 + eta * eta)
        return expit(z)

    def cdf_unit(self, x) -> np.ndarray:
        """Pr[u <= x] for x in [0,1]."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.kind == "uniform":
            return x
        with np.errstate(divide="ignore"):
            return ndtr(logit(x))


def _identity_bias(model: str):
    if model == "additive":
        return 0.0
    if model == "multiplicative":
        return 1.0
    if model == "random_additive":
        return RandomBias((0.0,), (1.0,))
    return None


@dataclass(frozen=True)
class EstimatorConfig:
    base: BaseDistribution = field(default_factory=BaseDistribution)
    bias_model: str = "none"
    bias_params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.bias_model not in BIAS_MODELS:
            raise InvalidParameter(f"bias_model must be one of {BIAS_MODELS}, got {self.bias_model!r}")
        params = dict(self.bias_params)
        for label, value in params.items():
            if self.bias_model == "none":
                raise InvalidParameter("bias_params must be empty when bias_model is none")
            if self.bias_model == "random_additive":
                if not isinstance(value, RandomBias):
                    raise InvalidParameter(
                        f"bias for {label!r} must be a RandomBias, got {type(value).__name__}")
            else:
                value = float(value)
                if not math.isfinite(value):
                    raise InvalidParameter(f"bias for {label!r} must be finite, got {value}")
                if self.bias_model == "multiplicative" and value <= 0:
                    raise InvalidParameter(f"multiplicative bias must be > 0, got {value}")
                params[label] = value
        object.__setattr__(self, "bias_params", params)

    def bias_for(self, group: AttributeId | str):
        """The group's bias parameter; groups not listed get the identity bias."""
        label = group.label if isinstance(group, AttributeId) else group
        return self.bias_params.get(label, _identity_bias(self.bias_model))


def estimator_from_dict(spec: Mapping) -> EstimatorConfig:
    """Build an EstimatorConfig from a plain mapping (config-file shape)."""
    base_spec = dict(spec.get("base", {}))
    base = BaseDistribution(
        kind=base_spec.get("kind", "logistic"),
        scoring_noise=float(base_spec.get("scoring_noise", 1.0)),
    )
    model = spec.get("bias_model", "none")
    raw = dict(spec.get("bias_params", {}) or {})
    params: dict[str, object] = {}
    for label, value in raw.items():
        if model == "random_additive":
            params[label] = RandomBias(
                offsets=tuple(float(b) for b in value["offsets"]),
                probabilities=tuple(float(p) for p in value["probabilities"]),
            )
        else:
            params[label] = float(value)
    return EstimatorConfig(base=base, bias_model=model, bias_params=params)


def estimator_to_dict(config: EstimatorConfig) -> dict:
    params: dict[str, object] = {}
    for label, value in config.bias_params.items():
        if isinstance(value, RandomBias):
            params[label] = {"offsets": list(value.offsets),
                             "probabilities": list(value.probabilities)}
        else:
            params[label] = value
    return {
        "base": {"kind": config.base.kind, "scoring_noise": config.base.scoring_noise},
        "bias_model": config.bias_model,
        "bias_params": params,
    }


def _bias_atoms(config: EstimatorConfig, group: AttributeId | str) -> list[tuple[float, float]]:
    """The group's bias as (parameter, probability) atoms; none -> additive 0."""
    bias = config.bias_for(group)
    if config.bias_model == "random_additive":
        return list(zip(bias.offsets, bias.probabilities))
    if config.bias_model == "none":
        return [(0.0, 1.0)]
    return [(float(bias), 1.0)]


def _apply_bias(raw: np.ndarray, config: EstimatorConfig, group: AttributeId | str,
                rng: np.random.Generator) -> np.ndarray:
    if config.bias_model == "none":
        return raw
    bias = config.bias_for(group)
    if config.bias_model == "additive":
        return raw + bias
    if config.bias_model == "multiplicative":
        return raw * bias
    offsets = np.asarray(bias.offsets, dtype=float)
    draws = rng.choice(len(offsets), size=raw.shape, p=np.asarray(bias.probabilities, dtype=float))
    return raw + offsets[draws]


def _score_traits(config: EstimatorConfig, traits: np.ndarray, group: AttributeId | str,
                  domain: ScoreDomain, rng: np.random.Generator) -> np.ndarray:
    """Vectorized scoring: traits -> bin indices, bias applied per the group."""
    u = config.base.draw_unit(np.asarray(traits, dtype=float), rng)
    k = domain.size
    if domain.kind == "discrete":
        # bias operates in bin units on the integer base score
        raw = np.minimum(np.floor(u * k), k - 1)
    else:
        lo, hi = domain.bins[0], domain.bins[-1]
        raw = lo + u * (hi - lo)
    biased = _apply_bias(raw, config, group, rng)
    return domain.bin_of(biased)


def score(config: EstimatorConfig, user: UserRecord, domain: ScoreDomain,
          rng: np.random.Generator) -> int:
    """Score one user: draw T(x) given the latent trait, bias it, bin it."""
    bins = _score_traits(config, np.asarray([user.latent_trait]), user.attribute, domain, rng)
    return int(bins[0])


def score_audience(config: EstimatorConfig, audience: Sequence[UserRecord],
                   domain: ScoreDomain, rng: np.random.Generator) -> ScoreHistogram:
    """Score a single-group audience and tally the per-bin histogram.

    Raw scores never leave this function; only the histogram does.
    """
    if len(audience) == 0:
        raise EmptyAudience("cannot score an empty audience")
    groups = {u.attribute for u in audience}
    if len(groups) != 1:
        labels = sorted(g.label for g in groups)
        raise MixedGroupAudience(f"audience spans multiple groups: {labels}")
    group = audience[0].attribute
    traits = np.asarray([u.latent_trait for u in audience], dtype=float)
    bins = _score_traits(config, traits, group, domain, rng)
    counts = np.bincount(bins, minlength=domain.size)
    return ScoreHistogram(group=group, counts=tuple(int(c) for c in counts))


def base_pmf(base: BaseDistribution, domain: ScoreDomain) -> np.ndarray:
    """Closed-form per-bin probabilities of the unbiased score T(x)."""
    k = domain.size
    grid = np.arange(k + 1, dtype=float) / k
    cdf = base.cdf_unit(grid)
    return np.diff(cdf)


def expected_distribution(config: EstimatorConfig, group: AttributeId | str,
                          domain: ScoreDomain) -> np.ndarray:
    """Closed-form per-bin probabilities of the biased, binned score for a group.

    Discrete domains: push the base pmf through the bias map bin by bin.
    Continuous domains: evaluate the biased value's CDF at the bin edges.
    """
    k = domain.size
    atoms = _bias_atoms(config, group)
    if domain.kind == "discrete":
        pmf_t = base_pmf(config.base, domain)
        out = np.zeros(k)
        base_bins = np.arange(k, dtype=float)
        for param, prob in atoms:
            if config.bias_model == "multiplicative":
                shifted = base_bins * param
            else:
                shifted = base_bins + param
            idx = domain.bin_of(shifted)
            np.add.at(out, idx, prob * pmf_t)
        return out

    lo, hi = domain.bins[0], domain.bins[-1]
    span = hi - lo
    inner = np.asarray(domain.bins[1:-1], dtype=float)
    cdf_inner = np.zeros(max(k - 1, 0))
    for param, prob in atoms:
        # invert the bias to find which base values land below each inner edge
        if config.bias_model == "multiplicative":
            pre = inner / param
        else:
            pre = inner - param
        cdf_inner = cdf_inner + prob * config.base.cdf_unit((pre - lo) / span)
    cdf = np.concatenate(([0.0], cdf_inner, [1.0]))
    return np.diff(cdf)
