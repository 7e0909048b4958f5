"""Synthetic user population: generation, stratified audience sampling, JSONL export.

Users carry the tuple the audit reasons about (attribute, qualification) plus
a latent trait that drives the relevance estimator. Generation and sampling
take explicit seeds and are fully reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import AttributeId
from .errors import InsufficientPopulation, InvalidMix
from .seeds import substream


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    attribute: AttributeId
    qualified: bool
    latent_trait: float


@dataclass
class Population:
    """An immutable-by-convention bag of users plus its generation recipe."""

    users: tuple[UserRecord, ...]
    seed: int
    group_mix: Mapping[str, float]
    qualification_rate: Mapping[str, float]

    @property
    def size(self) -> int:
        return len(self.users)

    @property
    def attributes(self) -> tuple[AttributeId, ...]:
        return tuple(AttributeId(label, i) for i, label in enumerate(self.group_mix))

    def stratum(self, group: AttributeId | str, qualified_only: bool = True) -> list[UserRecord]:
        label = group.label if isinstance(group, AttributeId) else group
        return [
            u for u in self.users
            if u.attribute.label == label and (u.qualified or not qualified_only)
        ]

    def index_by_id(self) -> dict[str, UserRecord]:
        return {u.user_id: u for u in self.users}


def _normalize_rates(group_mix: Mapping[str, float],
                     qualification_rate) -> dict[str, float]:
    if isinstance(qualification_rate, Mapping):
        rates = {label: float(qualification_rate[label]) for label in group_mix
                 if label in qualification_rate}
        if set(rates) != set(group_mix):
            raise InvalidMix("qualification_rate must cover every group in the mix")
    else:
        rates = {label: float(qualification_rate) for label in group_mix}
    for label, rate in rates.items():
        if not 0.0 <= rate <= 1.0:
            raise InvalidMix(f"qualification rate for {label!r} must be in [0, 1], got {rate}")
    return rates


def generate_population(size: int, group_mix: Mapping[str, float],
                        qualification_rate, seed: int) -> Population:
    """Draw ``size`` users with independent attribute, qualification, and trait.

    ``group_mix`` maps attribute labels to proportions summing to 1;
    ``qualification_rate`` is one probability or a per-label mapping. Latent
    traits are standard normal. Identical seeds give identical populations.
    """
    if size <= 0:
        raise InvalidMix(f"population size must be positive, got {size}")
    labels = list(group_mix)
    probs = np.asarray([float(group_mix[label]) for label in labels], dtype=float)
    if len(labels) == 0 or np.any(probs < 0) or not math.isclose(
            float(probs.sum()), 1.0, abs_tol=1e-9):
        raise InvalidMix(f"group proportions must be non-negative and sum to 1, got {dict(group_mix)}")
    rates = _normalize_rates(group_mix, qualification_rate)

    rng = substream(seed, "population")
    group_idx = rng.choice(len(labels), size=size, p=probs)
    qualified = rng.random(size) < np.asarray([rates[labels[g]] for g in group_idx])
    latent = rng.standard_normal(size)

    attrs = [AttributeId(label, i) for i, label in enumerate(labels)]
    users = tuple(
        UserRecord(
            user_id=f"u{i:08d}",
            attribute=attrs[group_idx[i]],
            qualified=bool(qualified[i]),
            latent_trait=float(latent[i]),
        )
        for i in range(size)
    )
    return Population(users=users, seed=int(seed), group_mix=dict(group_mix),
                      qualification_rate=rates)


def sample_audience(population: Population, group: AttributeId | str,
                    qualified_only: bool, n: int, seed: int) -> list[UserRecord]:
    """Uniform sample without replacement from one (attribute, qualified) stratum.

    Within-group i.i.d.-ness of the population carries over to the sample.
    Raises InsufficientPopulation (with the available count) when the stratum
    is too small; n = 0 returns an empty list.
    """
    label = group.label if isinstance(group, AttributeId) else group
    stratum = population.stratum(label, qualified_only=qualified_only)
    if n > len(stratum):
        raise InsufficientPopulation(requested=n, available=len(stratum))
    if n == 0:
        return []
    rng = substream(seed, "audience", label)
    picks = rng.choice(len(stratum), size=n, replace=False)
    return [stratum[i] for i in picks]


def save_population(population: Population, path: str | Path) -> None:
    """Write a population as line-delimited JSON: one metadata line, one line per user."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "schema": "population/1",
            "seed": population.seed,
            "group_mix": dict(population.group_mix),
            "qualification_rate": dict(population.qualification_rate),
        }) + "\n")
        for user in population.users:
            fh.write(json.dumps({
                "user_id": user.user_id,
                "attribute": user.attribute.label,
                "qualified": user.qualified,
                "latent_trait": user.latent_trait,
            }) + "\n")


def load_population(path: str | Path) -> Population:
    """Read a population written by save_population."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != "population/1":
            raise ValueError(f"{path} is not a population file")
        labels = list(header["group_mix"])
        attrs = {label: AttributeId(label, i) for i, label in enumerate(labels)}
        users = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            users.append(UserRecord(
                user_id=rec["user_id"],
                attribute=attrs[rec["attribute"]],
                qualified=bool(rec["qualified"]),
                latent_trait=float(rec["latent_trait"]),
            ))
    return Population(
        users=tuple(users),
        seed=int(header["seed"]),
        group_mix={k: float(v) for k, v in header["group_mix"].items()},
        qualification_rate={k: float(v) for k, v in header["qualification_rate"].items()},
    )
