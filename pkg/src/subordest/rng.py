"""Counter-based random streams keyed by (seed, work-item indices).

Every path draws from its own Philox4x64-10 stream. The 128-bit key is
``(path_index, base)`` where ``base`` hashes the seed together with the
indices of the enclosing work item (beta index, delta index, repetition,
...). Streams therefore do not depend on how paths are scheduled.
"""

import numpy as np

from .errors import ConfigError

# stream domains, appended to the work-item prefix
INCREMENTS = 0
OUTER = 1

_U64 = 1 << 64


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream_base(seed, prefix=()):
    """64-bit hash of ``seed`` and the integer tuple ``prefix``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(i) for i in prefix))
    return int(ss.generate_state(1, np.uint64)[0])


def path_keys(seed, n_paths, prefix=(), start=0):
    """Philox keys for paths ``start .. start + n_paths - 1``, shape (n, 2) uint64."""
    keys = np.empty((n_paths, 2), dtype=np.uint64)
    keys[:, 0] = np.arange(start, start + n_paths, dtype=np.uint64)
    keys[:, 1] = np.uint64(stream_base(seed, prefix))
    return keys


def philox_generator(key):
    """numpy Generator over the Philox stream with the given (lo, hi) key."""
    return np.random.Generator(np.random.Philox(key=int(key[0]) | (int(key[1]) << 64)))
