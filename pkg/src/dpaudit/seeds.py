"""Named, reproducible RNG substreams.

All randomness in the toolkit flows through one master seed expanded into
named substreams (population / audience / score / noise / trial), so any run
is replayable from a single integer and concurrent consumers never share a
stream.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK64
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def spawn_seed(master_seed: int, *tags) -> int:
    """Derive a child seed from a master seed and a tuple of str/int tags."""
    seq = np.random.SeedSequence(
        [int(master_seed) & _MASK64] + [_tag_to_int(t) for t in tags]
    )
    return int(seq.generate_state(1, np.uint64)[0])


def substream(master_seed: int, *tags) -> np.random.Generator:
    """A Generator seeded by (master_seed, *tags); identical tags, identical stream."""
    seq = np.random.SeedSequence(
        [int(master_seed) & _MASK64] + [_tag_to_int(t) for t in tags]
    )
    return np.random.default_rng(seq)
