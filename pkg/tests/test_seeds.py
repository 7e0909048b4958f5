import numpy as np

from dpaudit.seeds import spawn_seed, substream


def test_same_tags_same_stream():
    a = substream(42, "score", "g", 3).random(8)
    b = substream(42, "score", "g", 3).random(8)
    assert np.array_equal(a, b)


def test_different_tags_different_streams():
    a = substream(42, "score").random(8)
    b = substream(42, "noise").random(8)
    c = substream(43, "score").random(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_spawn_seed_deterministic_and_distinct():
    assert spawn_seed(7, "trial", 0) == spawn_seed(7, "trial", 0)
    seeds = {spawn_seed(7, "trial", i) for i in range(1000)}
    assert len(seeds) == 1000


def test_string_and_int_tags_coexist():
    a = substream(1, "g", 2).random(4)
    b = substream(1, "g", "2").random(4)
    # int 2 and string "2" are distinct tags by design
    assert not np.array_equal(a, b)
