import math

import numpy as np
import pytest

from dpaudit.core import AttributeId
from dpaudit.errors import InsufficientPopulation, InvalidMix
from dpaudit.population import (Population, UserRecord, generate_population,
                                load_population, sample_audience,
                                save_population)

MIX = {"a": 0.6, "b": 0.4}


def test_generation_matches_mix_and_rates():
    size = 100_000
    pop = generate_population(size, MIX, {"a": 0.5, "b": 0.9}, seed=42)
    assert pop.size == size
    assert pop.attributes == (AttributeId("a", 0), AttributeId("b", 1))

    n_a = len(pop.stratum("a", qualified_only=False))
    n_b = len(pop.stratum("b", qualified_only=False))
    assert n_a + n_b == size
    # binomial 4-sigma checks on draw frequencies
    assert abs(n_a - 0.6 * size) <= 4 * math.sqrt(size * 0.6 * 0.4)
    q_a = len(pop.stratum("a"))
    assert abs(q_a - 0.5 * n_a) <= 4 * math.sqrt(n_a * 0.25)
    q_b = len(pop.stratum("b", qualified_only=True))
    assert abs(q_b - 0.9 * n_b) <= 4 * math.sqrt(n_b * 0.9 * 0.1)

    traits = np.array([u.latent_trait for u in pop.users])
    assert abs(traits.mean()) <= 4 / math.sqrt(size)
    assert traits.std() == pytest.approx(1.0, rel=0.02)


def test_generation_deterministic():
    one = generate_population(500, MIX, 0.8, seed=7)
    two = generate_population(500, MIX, 0.8, seed=7)
    other = generate_population(500, MIX, 0.8, seed=8)
    assert one.users == two.users
    assert one.users != other.users
    assert [u.user_id for u in one.users] == [f"u{i:08d}" for i in range(500)]


def test_single_user_population():
    pop = generate_population(1, {"solo": 1.0}, 1.0, seed=0)
    assert pop.size == 1
    assert pop.users[0].attribute == AttributeId("solo", 0)
    assert pop.users[0].qualified


def test_invalid_mix_rejected():
    with pytest.raises(InvalidMix):
        generate_population(10, {"a": 0.5, "b": 0.6}, 1.0, seed=0)
    with pytest.raises(InvalidMix):
        generate_population(10, {"a": 1.2, "b": -0.2}, 1.0, seed=0)
    with pytest.raises(InvalidMix):
        generate_population(10, {}, 1.0, seed=0)
    with pytest.raises(InvalidMix):
        generate_population(0, MIX, 1.0, seed=0)
    with pytest.raises(InvalidMix):
        generate_population(10, MIX, 1.5, seed=0)
    with pytest.raises(InvalidMix):
        generate_population(10, MIX, {"a": 0.5}, seed=0)  # missing group b


def test_sample_audience_contract():
    pop = generate_population(2_000, MIX, 0.5, seed=3)
    sample = sample_audience(pop, "a", True, 100, seed=3)
    assert len(sample) == 100
    assert len({u.user_id for u in sample}) == 100  # without replacement
    assert all(u.attribute.label == "a" and u.qualified for u in sample)

    again = sample_audience(pop, AttributeId("a", 0), True, 100, seed=3)
    assert [u.user_id for u in again] == [u.user_id for u in sample]
    shifted = sample_audience(pop, "a", True, 100, seed=4)
    assert [u.user_id for u in shifted] != [u.user_id for u in sample]

    assert sample_audience(pop, "b", True, 0, seed=3) == []


def test_sample_audience_exhaustion():
    pop = generate_population(50, {"a": 1.0}, 1.0, seed=1)
    with pytest.raises(InsufficientPopulation) as exc:
        sample_audience(pop, "a", True, 51, seed=1)
    assert exc.value.requested == 51
    assert exc.value.available == 50
    # taking the entire stratum is fine
    assert len(sample_audience(pop, "a", True, 50, seed=1)) == 50


def test_unqualified_included_when_asked():
    pop = generate_population(4_000, {"a": 1.0}, 0.5, seed=9)
    everyone = sample_audience(pop, "a", False, 3_000, seed=9)
    assert any(not u.qualified for u in everyone)


def test_save_load_round_trip(tmp_path):
    pop = generate_population(300, MIX, {"a": 0.7, "b": 0.4}, seed=11)
    path = tmp_path / "pop.jsonl"
    save_population(pop, path)
    loaded = load_population(path)
    assert loaded.users == pop.users  # bit-exact traits via JSON float repr
    assert loaded.seed == pop.seed
    assert loaded.group_mix == pop.group_mix
    assert loaded.qualification_rate == pop.qualification_rate


def test_index_by_id():
    pop = generate_population(20, MIX, 1.0, seed=2)
    index = pop.index_by_id()
    assert len(index) == 20
    assert index["u00000003"] is pop.users[3]


def test_population_is_plain_data():
    user = UserRecord("u0", AttributeId("a", 0), True, 0.5)
    pop = Population(users=(user,), seed=0, group_mix={"a": 1.0},
                     qualification_rate={"a": 1.0})
    assert pop.stratum("a") == [user]
    assert pop.stratum("b") == []
