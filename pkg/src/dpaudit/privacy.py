"""Platform-side epsilon-differential privacy.

Laplace noise on histogram bins (sensitivity 1 per bin under add/remove-one
neighboring, so scale 1/epsilon privatizes a whole histogram release) and a
sequential-composition budget ledger with append-only persistence.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import NoisyHistogram, ScoreDomain, ScoreHistogram
from .errors import BudgetExhausted, InvalidEpsilon


def laplace_inverse_cdf(u, scale: float):
    """Inverse CDF of Laplace(0, scale) at u in (0, 1). Accepts arrays.

    u = 1/2 maps to exactly 0; u = 3/4 maps to scale * ln 2.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = np.asarray(u, dtype=float)
    centered = u - 0.5
    out = -scale * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))
    return out if out.ndim else float(out)


class LaplaceNoiser:
    """A seeded stream of Laplace(0, scale) draws via the inverse-CDF transform.

    Single-owner: the underlying RNG stream is stateful, so concurrent callers
    must each hold their own noiser. Identical (seed, scale) reproduce the
    identical noise stream.
    """

    def __init__(self, scale: float, *, seed: int | None = None,
                 rng: np.random.Generator | None = None):
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.scale = float(scale)
        self._rng = rng if rng is not None else np.random.default_rng(seed)

    @classmethod
    def for_epsilon(cls, epsilon: float, *, seed: int | None = None,
                    rng: np.random.Generator | None = None) -> "LaplaceNoiser":
        """Noiser at scale 1/epsilon, the scale that privatizes unit-sensitivity bins."""
        if epsilon <= 0:
            raise InvalidEpsilon(f"epsilon must be positive, got {epsilon}")
        return cls(1.0 / epsilon, seed=seed, rng=rng)

    def sample(self, size: int | None = None):
        """One draw (or an array of draws) from Laplace(0, scale)."""
        if size is None:
            u = self._rng.random()
            if u == 0.0:  # would map to -inf; measure-zero under the uniform
                u = np.nextafter(0.0, 1.0)
            return float(laplace_inverse_cdf(u, self.scale))
        u = self._rng.random(size)
        u[u == 0.0] = np.nextafter(0.0, 1.0)
        return laplace_inverse_cdf(u, self.scale)


def sample_laplace(noiser: LaplaceNoiser) -> float:
    """One Laplace draw from the noiser's stream."""
    return noiser.sample()


def histogram_sensitivity(domain: ScoreDomain) -> int:
    """Per-bin sensitivity of a score histogram under add/remove-one neighboring.

    One user lands in exactly one bin, so their presence or absence changes
    each bin's count by at most one, for any domain.
    """
    del domain
    return 1


def privatize_histogram(hist: ScoreHistogram, epsilon: float,
                        noiser: LaplaceNoiser) -> NoisyHistogram:
    """Add independent Laplace(1/epsilon) noise to every bin of a raw histogram.

    The raw counts never leave this function; only the noisy release does.
    The noiser must already be at scale 1/epsilon.
    """
    if epsilon <= 0:
        raise InvalidEpsilon(f"epsilon must be positive, got {epsilon}")
    if not math.isclose(noiser.scale, 1.0 / epsilon, rel_tol=1e-12):
        raise InvalidEpsilon(
            f"noiser scale {noiser.scale} does not match 1/epsilon = {1.0 / epsilon}"
        )
    noise = noiser.sample(size=len(hist.counts))
    noisy = np.asarray(hist.counts, dtype=float) + noise
    return NoisyHistogram(
        group=hist.group,
        noisy_counts=tuple(float(v) for v in noisy),
        n_declared=hist.n,
        epsilon_spent=float(epsilon),
    )


@dataclass(frozen=True)
class LedgerEntry:
    query_id: str
    epsilon: float
    timestamp: float
    spent_total: float


class BudgetLedger:
    """Per-auditor epsilon accounting under sequential composition.

    ``charge`` is linearizable: racing charges can never drive the spent total
    above the budget. With a log path, every accepted charge is appended as one
    JSON line (query_id, epsilon, timestamp, running total) so that a restarted
    service still counts previously spent epsilon.
    """

    def __init__(self, auditor_id: str, total_epsilon: float,
                 log_path: str | Path | None = None):
        if total_epsilon <= 0:
            raise InvalidEpsilon(f"total budget must be positive, got {total_epsilon}")
        self.auditor_id = auditor_id
        self.total_epsilon = float(total_epsilon)
        self._entries: list[LedgerEntry] = []
        self._spent = 0.0
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path is not None else None

    @property
    def spent(self) -> float:
        return self._spent

    @property
    def remaining(self) -> float:
        return self.total_epsilon - self._spent

    @property
    def entries(self) -> tuple[LedgerEntry, ...]:
        return tuple(self._entries)

    def charge(self, query_id: str, epsilon: float,
               timestamp: float | None = None) -> LedgerEntry:
        """Spend epsilon for one query, or reject without mutating anything."""
        if epsilon <= 0:
            raise InvalidEpsilon(f"charged epsilon must be positive, got {epsilon}")
        with self._lock:
            if self._spent + epsilon > self.total_epsilon:
                raise BudgetExhausted(requested=epsilon, remaining=self.remaining)
            self._spent += epsilon
            entry = LedgerEntry(
                query_id=str(query_id),
                epsilon=float(epsilon),
                timestamp=time.time() if timestamp is None else float(timestamp),
                spent_total=self._spent,
            )
            self._entries.append(entry)
            if self._log_path is not None:
                self._append_log(entry)
        return entry

    def _append_log(self, entry: LedgerEntry) -> None:
        record = {
            "auditor_id": self.auditor_id,
            "query_id": entry.query_id,
            "epsilon": entry.epsilon,
            "timestamp": entry.timestamp,
            "spent_total": entry.spent_total,
        }
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")

    @classmethod
    def replay(cls, log_path: str | Path, auditor_id: str,
               total_epsilon: float) -> "BudgetLedger":
        """Rebuild one auditor's ledger from the append-only log."""
        ledger = cls(auditor_id, total_epsilon, log_path=log_path)
        path = Path(log_path)
        if not path.exists():
            return ledger
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if record["auditor_id"] != auditor_id:
                    continue
                ledger._spent = ledger._spent + record["epsilon"]
                ledger._entries.append(LedgerEntry(
                    query_id=record["query_id"],
                    epsilon=record["epsilon"],
                    timestamp=record["timestamp"],
                    spent_total=ledger._spent,
                ))
        return ledger


def replay_ledgers(log_path: str | Path, total_epsilon: float) -> dict[str, BudgetLedger]:
    """Rebuild every auditor's ledger found in the log."""
    path = Path(log_path)
    ledgers: dict[str, BudgetLedger] = {}
    if not path.exists():
        return ledgers
    auditor_ids = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                auditor_id = json.loads(line)["auditor_id"]
                if auditor_id not in auditor_ids:
                    auditor_ids.append(auditor_id)
    for auditor_id in auditor_ids:
        ledgers[auditor_id] = BudgetLedger.replay(path, auditor_id, total_epsilon)
    return ledgers
