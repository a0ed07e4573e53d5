"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, *key)``, so a given
path, level or run always sees the same numbers no matter how work is
split across workers.
"""

import numpy as np

__all__ = ["stream", "derive_seed", "DEFAULT_SEED"]

DEFAULT_SEED = 20240607


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for stream ``key`` under base ``seed``."""
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream keys must be non-negative integers")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A child seed for an independent family of streams."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
