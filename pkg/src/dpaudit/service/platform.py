"""The platform side of the audit protocol, independent of any transport.

PlatformState is the single source of truth for upload/query semantics; the
HTTP app is a thin shell over it, so an in-process pipeline and the networked
one are the same computation. Every query is a deterministic function of
(server seed, auditor, audience handle, per-audience query ordinal): the seed
expands into named score/noise sub-streams, and the ordinal advances only
when the budget charge succeeds.

Budgets persist across restarts via the append-only ledger log; audiences and
query ordinals are in-memory and must be re-established after a restart.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from ..core import ScoreDomain
from ..errors import (DuplicateAudienceHandle, EmptyAudience, InvalidEpsilon,
                      InvalidParameter, MixedGroupAudience, UnknownAudience)
from ..estimator import EstimatorConfig, estimator_from_dict, score_audience
from ..population import Population, UserRecord, load_population
from ..privacy import BudgetLedger, LaplaceNoiser, privatize_histogram, replay_ledgers
from ..seeds import substream


@dataclass(frozen=True)
class ServerConfig:
    estimator: EstimatorConfig
    domain: ScoreDomain
    total_epsilon: float
    seed: int
    population_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8765
    ledger_path: str | None = None
    request_log_path: str | None = None

    def __post_init__(self):
        if self.total_epsilon <= 0:
            raise InvalidEpsilon(
                f"per-auditor budget must be positive, got {self.total_epsilon}")


def _domain_from_config(cfg: Mapping) -> ScoreDomain:
    if cfg.get("kind", "discrete") == "continuous":
        return ScoreDomain.continuous(cfg["edges"])
    return ScoreDomain.discrete(int(cfg["bins"]))


def load_server_config(path: str | Path) -> ServerConfig:
    """Parse the server config file (population path, estimator, domain,
    per-auditor budget, listen address, optional ledger/request-log paths)."""
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, Mapping):
        raise InvalidParameter(f"{path} does not contain a mapping")
    for key in ("population", "domain", "budget", "seed"):
        if key not in cfg:
            raise InvalidParameter(f"server config is missing {key!r}")
    listen = dict(cfg.get("listen", {}))
    return ServerConfig(
        estimator=estimator_from_dict(dict(cfg.get("estimator", {}))),
        domain=_domain_from_config(dict(cfg["domain"])),
        total_epsilon=float(cfg["budget"]["total_epsilon"]),
        seed=int(cfg["seed"]),
        population_path=str(cfg["population"]),
        host=str(listen.get("host", "127.0.0.1")),
        port=int(listen.get("port", 8765)),
        ledger_path=cfg.get("ledger"),
        request_log_path=cfg.get("request_log"),
    )


@dataclass(frozen=True)
class AudienceRecord:
    handle: str
    group: str
    members: tuple[UserRecord, ...]
    accepted: int
    matched: int


@dataclass(frozen=True)
class QueryResult:
    audience_handle: str
    group: str
    noisy_counts: tuple[float, ...]
    n_declared: int
    epsilon_spent: float
    remaining_budget: float
    query_id: str


class PlatformState:
    """Audiences, per-auditor budget ledgers, and the scoring pipeline."""

    def __init__(self, config: ServerConfig, population: Population | None = None):
        if population is None:
            if config.population_path is None:
                raise InvalidParameter("config names no population file")
            population = load_population(config.population_path)
        self.config = config
        self.population = population
        self._index = population.index_by_id()
        self._groups = set(population.group_mix)
        self._audiences: dict[tuple[str, str], AudienceRecord] = {}
        self._ordinals: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()
        if config.ledger_path and Path(config.ledger_path).exists():
            self._ledgers = replay_ledgers(config.ledger_path, config.total_epsilon)
        else:
            self._ledgers: dict[str, BudgetLedger] = {}

    def _ledger(self, auditor_id: str) -> BudgetLedger:
        # callers hold self._lock
        if auditor_id not in self._ledgers:
            self._ledgers[auditor_id] = BudgetLedger(
                auditor_id, self.config.total_epsilon,
                log_path=self.config.ledger_path)
        return self._ledgers[auditor_id]

    def _log_request(self, record: dict) -> None:
        if not self.config.request_log_path:
            return
        record = {"timestamp": time.time(), **record}
        with open(self.config.request_log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    def upload_audience(self, auditor_id: str, handle: str, group: str,
                        user_ids: Sequence[str]) -> AudienceRecord:
        """Match uploaded ids against the population under one handle.

        Matching is exact-string on user_id; ids absent from the population
        are counted as accepted but unmatched. Matched users must all belong
        to the declared group.
        """
        ids = list(user_ids)
        if len(set(ids)) != len(ids):
            raise InvalidParameter("user_ids must be unique")
        if group not in self._groups:
            raise InvalidParameter(
                f"unknown group {group!r}; population has {sorted(self._groups)}")
        members = tuple(self._index[uid] for uid in ids if uid in self._index)
        strangers = sum(1 for u in members if u.attribute.label != group)
        if strangers:
            raise MixedGroupAudience(
                f"{strangers} matched ids are not in group {group!r}")
        with self._lock:
            key = (auditor_id, handle)
            if key in self._audiences:
                raise DuplicateAudienceHandle(
                    f"auditor {auditor_id!r} already uploaded {handle!r}")
            record = AudienceRecord(handle=handle, group=group, members=members,
                                    accepted=len(ids), matched=len(members))
            self._audiences[key] = record
        self._log_request({"type": "upload_audience", "auditor_id": auditor_id,
                           "audience_handle": handle, "group": group,
                           "accepted": record.accepted, "matched": record.matched})
        return record

    def query_relevance(self, auditor_id: str, handle: str, content_id: str,
                        content_text: str, epsilon: float) -> QueryResult:
        """Score the audience against the content and release a noisy histogram.

        Validation and the budget charge happen before any noise is drawn; a
        rejected charge leaves the query ordinal (and thus the noise stream)
        untouched.
        """
        if epsilon <= 0:
            raise InvalidEpsilon(f"epsilon must be positive, got {epsilon}")
        with self._lock:
            record = self._audiences.get((auditor_id, handle))
            if record is None:
                raise UnknownAudience(
                    f"auditor {auditor_id!r} has no audience {handle!r}")
            if not record.members:
                raise EmptyAudience(f"audience {handle!r} matched no users")
            ordinal = self._ordinals.get((auditor_id, handle), 0)
            query_id = f"{auditor_id}/{handle}/{ordinal}"
            ledger = self._ledger(auditor_id)
            ledger.charge(query_id, epsilon)
            self._ordinals[(auditor_id, handle)] = ordinal + 1
            remaining = ledger.remaining

        seed = self.config.seed
        hist = score_audience(self.config.estimator, record.members,
                              self.config.domain,
                              substream(seed, "score", auditor_id, handle, ordinal))
        noiser = LaplaceNoiser.for_epsilon(
            epsilon, rng=substream(seed, "noise", auditor_id, handle, ordinal))
        noisy = privatize_histogram(hist, epsilon, noiser)
        self._log_request({"type": "query_relevance", "auditor_id": auditor_id,
                           "audience_handle": handle, "content_id": content_id,
                           "content_text": content_text, "epsilon": epsilon,
                           "query_id": query_id})
        return QueryResult(
            audience_handle=handle,
            group=record.group,
            noisy_counts=noisy.noisy_counts,
            n_declared=noisy.n_declared,
            epsilon_spent=noisy.epsilon_spent,
            remaining_budget=remaining,
            query_id=query_id,
        )

    def budget_status(self, auditor_id: str) -> dict:
        with self._lock:
            ledger = self._ledger(auditor_id)
            return {
                "auditor_id": auditor_id,
                "total_epsilon": ledger.total_epsilon,
                "spent": ledger.spent,
                "remaining": ledger.remaining,
                "queries": len(ledger.entries),
            }
