"""Release gate: the nine behaviors the package must exhibit, one test each.

Every test prints one ``[criterion N] ...: PASS`` / ``FAIL`` line; thresholds
and tolerances are stated inline next to the asserts they guard.
"""

import math
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dpaudit.cli import main
from dpaudit.core import (AttributeId, AuditSpec, ScoreDomain, ScoreHistogram,
                          efg, empirical_distribution)
from dpaudit.errors import (BudgetExhausted, EpsilonTooSmall,
                            InsufficientTrials)
from dpaudit.estimator import (EstimatorConfig, RandomBias,
                               expected_distribution, score, score_audience)
from dpaudit.harness import ExperimentSpec, result_csv, run_experiment
from dpaudit.planner import (UPPER_BOUND_FACTOR, factor_curve, factor_sweep,
                             n_min_nonprivate, n_min_private, sdp_factor)
from dpaudit.population import generate_population
from dpaudit.privacy import LaplaceNoiser
from dpaudit.seeds import substream
from dpaudit.service import PlatformState, ServerConfig, create_app


@contextmanager
def criterion(num: int, text: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {num}] {text}: FAIL")
        raise
    print(f"[criterion {num}] {text}: PASS")


def phi(t: float) -> float:
    # standard normal CDF from math.erf only: independent of the scipy route
    return 0.5 * (1.0 + math.erf(t / math.sqrt(2.0)))


def audit_10_bins(epsilon=1.0) -> AuditSpec:
    return AuditSpec.for_groups(["a", "b"], ScoreDomain.discrete(10),
                                alpha=0.2, delta=0.05, epsilon=epsilon)


# --------------------------------------------------------------------------

def test_criterion_1_planner_worked_example():
    with criterion(1, "planner reproduces the worked sample sizes"):
        private = n_min_private(0.2, 0.05, 1.0, 2, 100)
        nonprivate = n_min_nonprivate(0.2, 0.05, 2, 100)
        assert private.n_min_per_group == 1879
        assert nonprivate.n_min_per_group == 450
        assert private.factor_vs_nonprivate == pytest.approx(4.1756, abs=1e-4)
        assert private.raw_bound == pytest.approx(
            (8 / 0.2**2) * math.log(3 * 2 * 100 / 0.05), rel=1e-12)
        assert nonprivate.raw_bound == pytest.approx(
            (2 / 0.2**2) * math.log(2 * 2 * 100 / 0.05), rel=1e-12)
        assert sdp_factor(0.2, 0.05, 2, 100) == pytest.approx(4.18046, abs=1e-4)
        # degenerate full-tolerance plan still well defined
        assert n_min_nonprivate(1.0, 0.05, 2, 1).n_min_per_group == \
            math.ceil(2 * math.log(80)) == 9
        with pytest.raises(EpsilonTooSmall):
            n_min_private(0.2, 0.05, 0.09, 2, 100)


def test_criterion_2_overhead_factor_bounded_everywhere():
    with criterion(2, "privacy overhead factor stays in (4, 4*ln3/ln2]"):
        top = UPPER_BOUND_FACTOR
        assert top == pytest.approx(6.339850002884625, abs=1e-12)
        assert factor_curve(0.0) == top  # the supremum is attained at P = 0

        rng = np.random.default_rng(20260814)
        for _ in range(10_000):
            alpha = rng.uniform(0.01, 0.5)
            delta = rng.uniform(0.001, 0.2)
            groups = int(rng.integers(2, 11))
            bins = int(rng.integers(2, 1001))
            f = sdp_factor(alpha, delta, groups, bins)
            assert 4.0 < f <= top + 1e-6, (alpha, delta, groups, bins, f)


def test_criterion_3_figure_sweeps_behave():
    with criterion(3, "factor sweeps: bounded, flat in alpha, falling in bins"):
        deltas = factor_sweep("delta", [0.001, 0.002, 0.005, 0.01, 0.02,
                                        0.05, 0.1, 0.2])
        assert all(4.0 < p.factor < 4.35 for p in deltas)

        bins = factor_sweep("bins", [2, 5, 10, 20, 50, 100, 200, 500, 1000])
        factors = [p.factor for p in bins]
        assert all(a > b for a, b in zip(factors, factors[1:]))
        assert all(4.0 < f <= 6.34 for f in factors)

        alphas = factor_sweep("alpha", [0.05, 0.1, 0.2, 0.4])
        assert len({p.factor for p in alphas}) == 1

        groups = factor_sweep("groups", [2, 4, 8])
        assert all(a > b for a, b in zip(
            [p.factor for p in groups], [p.factor for p in groups][1:]))


def test_criterion_4_failure_rate_within_delta():
    with criterion(4, "fair config fails at most ~delta of 2000 audits"):
        margin = 0.05 + 3 * math.sqrt(0.05 * 0.95 / 2000)  # 0.0646
        fair = EstimatorConfig()

        private = run_experiment(ExperimentSpec(
            audit=audit_10_bins(), estimator=fair,
            n_per_group=n_min_private(0.2, 0.05, 1.0, 2, 10).n_min_per_group,
            trials=2000, seed=20260814))
        assert private.n_per_group == 1419
        assert private.true_efg == 0.0
        assert private.failure_rate is not None
        assert private.failure_rate <= margin
        assert private.wall_clock < 60.0

        nonprivate = run_experiment(ExperimentSpec(
            audit=audit_10_bins(), estimator=fair,
            n_per_group=n_min_nonprivate(0.2, 0.05, 2, 10).n_min_per_group,
            trials=2000, seed=20260815, use_privacy=False))
        assert nonprivate.n_per_group == 335
        assert nonprivate.failure_rate <= margin
        assert nonprivate.wall_clock < 60.0


def test_criterion_5_noise_distribution_and_sensitivity():
    with criterion(5, "Laplace release: correct law, one-bin sensitivity"):
        start = time.perf_counter()

        scale = 2.0
        n = 100_000
        draws = LaplaceNoiser(scale, seed=515).sample(size=n)
        assert abs(draws.mean()) <= 4 * math.sqrt(2 * scale**2 / n)  # 0.036
        assert abs(draws.var() - 2 * scale**2) <= 0.05 * 2 * scale**2
        for t in (scale, 2 * scale, 4 * scale):
            p = math.exp(-t / scale)
            observed = float(np.mean(np.abs(draws) >= t))
            assert abs(observed - p) <= 2.576 * math.sqrt(p * (1 - p) / n)

        # neighboring audiences: adding one user moves exactly one bin by one
        domain = ScoreDomain.discrete(10)
        config = EstimatorConfig()
        pool = generate_population(26_000, {"a": 1.0}, 1.0, seed=525).users

        def histogram(users, seed):
            counts = np.zeros(domain.size, dtype=int)
            for u in users:
                counts[score(config, u, domain, substream(seed, u.user_id))] += 1
            return counts

        for k in range(1000):
            base = pool[26 * k: 26 * k + 25]
            extra = pool[26 * k + 25]
            diff = histogram((*base, extra), seed=k) - histogram(base, seed=k)
            assert diff.sum() == 1
            assert np.abs(diff).max() == 1  # hence Laplace(1/eps) suffices

        assert time.perf_counter() - start < 5.0


def test_criterion_6_estimator_matches_closed_form():
    with criterion(6, "scored audiences converge to the closed-form law"):
        start = time.perf_counter()
        k = 10
        domain = ScoreDomain.discrete(k)
        chunks, per_chunk = 2000, 500
        total_n = chunks * per_chunk

        # erf-based oracle for the base law and the three bias pushforwards
        def logit(p):
            return math.log(p / (1.0 - p))

        edges = [0.0] + [phi(logit(i / k)) for i in range(1, k)] + [1.0]
        base = [edges[i + 1] - edges[i] for i in range(k)]
        assert sum(base) == pytest.approx(1.0, abs=1e-12)

        def push(transform):
            out = [0.0] * k
            for i, p in enumerate(base):
                out[min(max(transform(i), 0), k - 1)] += p
            return out

        oracles = {
            "additive": push(lambda i: i + 2),
            "multiplicative": push(lambda i: math.floor(i * 1.3 + 0.5)),
            "random_additive": [0.5 * a + 0.5 * b for a, b in
                                zip(base, push(lambda i: i + 3))],
        }
        configs = {
            "additive": EstimatorConfig(bias_model="additive",
                                        bias_params={"b": 2.0}),
            "multiplicative": EstimatorConfig(bias_model="multiplicative",
                                              bias_params={"b": 1.3}),
            "random_additive": EstimatorConfig(
                bias_model="random_additive",
                bias_params={"b": RandomBias((0.0, 3.0), (0.5, 0.5))}),
        }

        population = generate_population(total_n, {"b": 1.0}, 1.0, seed=606)
        for model, config in configs.items():
            oracle = oracles[model]
            library = expected_distribution(config, "b", domain)
            np.testing.assert_allclose(library, oracle, atol=1e-12)

            counts = np.zeros(k, dtype=np.int64)
            for i in range(chunks):
                chunk = population.users[i * per_chunk:(i + 1) * per_chunk]
                hist = score_audience(config, chunk, domain,
                                      substream(606, "score", model, i))
                counts += np.asarray(hist.counts)
            empirical = counts / total_n
            for p, q in zip(oracle, empirical):
                if p == 0.0:
                    assert q == 0.0, model  # structural zeros stay zero
                else:
                    tol = 4 * math.sqrt(p * (1 - p) / total_n)
                    assert abs(q - p) <= tol, (model, p, q, tol)

        assert time.perf_counter() - start < 60.0


def test_criterion_7_gap_matches_brute_force():
    with criterion(7, "fairness gap equals exhaustive pairwise search"):
        rng = np.random.default_rng(707)
        domain_cache = {}
        for _ in range(1000):
            num_groups = int(rng.integers(2, 5))
            num_bins = int(rng.integers(1, 9))
            domain = domain_cache.setdefault(num_bins,
                                             ScoreDomain.discrete(num_bins))
            counts = rng.integers(0, 30, size=(num_groups, num_bins))
            counts[:, 0] += 1  # every group has at least one observation
            dists = [empirical_distribution(ScoreHistogram(
                group=AttributeId(f"g{i}", i),
                counts=tuple(int(c) for c in row)))
                for i, row in enumerate(counts)]

            best = 0.0
            for i in range(num_groups):
                for j in range(num_groups):
                    for y in range(num_bins):
                        best = max(best, abs(dists[i][y] - dists[j][y]))

            report = efg(dists, domain, alpha=0.2)
            assert report.efg == best
            if report.argmax is not None:
                gi, gj, y = report.argmax
                i, j = int(gi[1:]), int(gj[1:])  # default labels g0, g1, ...
                assert abs(dists[i][y] - dists[j][y]) == report.efg


def test_criterion_8_protocol_round_trip_and_budget(tmp_path):
    with criterion(8, "wire protocol: lossless releases, budget enforced"):
        start = time.perf_counter()
        population = generate_population(400, {"a": 0.5, "b": 0.5}, 1.0,
                                         seed=808)
        ids = [u.user_id for u in population.stratum("a")][:80]

        def config(**kw):
            base = dict(estimator=EstimatorConfig(),
                        domain=ScoreDomain.discrete(10),
                        total_epsilon=1.0, seed=818)
            base.update(kw)
            return ServerConfig(**base)

        # in-process reference release vs the same query over HTTP
        reference = PlatformState(config(), population)
        reference.upload_audience("aud", "h", "a", ids)
        direct = reference.query_relevance("aud", "h", "c1", "", 0.4)

        with TestClient(create_app(config(), population)) as client:
            client.post("/v1/audience", json={
                "auditor_id": "aud", "audience_handle": "h", "group": "a",
                "user_ids": ids})
            body = client.post("/v1/query", json={
                "auditor_id": "aud", "audience_handle": "h",
                "content": {"content_id": "c1", "text": ""},
                "epsilon": 0.4}).json()
            # JSON floats round-trip bit-identically
            assert tuple(body["noisy_counts"]) == direct.noisy_counts
            assert body["query_id"] == direct.query_id

            second = client.post("/v1/query", json={
                "auditor_id": "aud", "audience_handle": "h",
                "content": {"content_id": "c1", "text": ""},
                "epsilon": 0.4})
            assert second.status_code == 200

            third = client.post("/v1/query", json={
                "auditor_id": "aud", "audience_handle": "h",
                "content": {"content_id": "c1", "text": ""},
                "epsilon": 0.4})
            assert third.status_code == 429  # 0.8 spent: 0.4 does not fit
            assert third.json()["data"]["remaining"] == pytest.approx(0.2)

        # spent budget must survive a process restart
        persistent = config(ledger_path=str(tmp_path / "ledger.jsonl"))
        before = PlatformState(persistent, population)
        before.upload_audience("aud", "h", "a", ids)
        before.query_relevance("aud", "h", "c", "", 0.7)

        after = PlatformState(persistent, population)  # fresh process, same log
        assert after.budget_status("aud")["spent"] == pytest.approx(0.7)
        after.upload_audience("aud", "h", "a", ids)
        with pytest.raises(BudgetExhausted):
            after.query_relevance("aud", "h", "c", "", 0.4)

        assert time.perf_counter() - start < 10.0


def test_criterion_9_artifacts_are_byte_deterministic(tmp_path, capsys):
    with criterion(9, "same seed, same bytes for every CSV artifact"):
        one, two = tmp_path / "f1.csv", tmp_path / "f2.csv"
        argv = ["figure", "--sweep", "bins", "--grid", "2,10,100,1000"]
        assert main(argv + ["--out", str(one)]) == 0
        assert main(argv + ["--out", str(two)]) == 0
        assert one.read_bytes() == two.read_bytes()

        spec = ExperimentSpec(audit=audit_10_bins(), estimator=EstimatorConfig(),
                              n_per_group=200, trials=120, seed=909)
        assert result_csv(run_experiment(spec)) == \
            result_csv(run_experiment(spec))

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InsufficientTrials)
            shifted = run_experiment(ExperimentSpec(
                audit=audit_10_bins(), estimator=EstimatorConfig(),
                n_per_group=200, trials=20, seed=910))
            assert result_csv(shifted) != result_csv(run_experiment(spec))
