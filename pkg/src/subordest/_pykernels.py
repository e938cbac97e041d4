"""Pure numpy implementation of the path kernels.

Consumes the same Philox raw words in the same order as the compiled
kernels and accumulates partial sums sequentially, so the two backends
agree up to the last-ulp behaviour of the elementary functions.
"""

import numpy as np

_TWO_M52 = 2.0 ** -52
_MAX_CHUNK = 1 << 20


def _open_uniform(raw):
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52


def increments_from_raw(raw, beta, log_scale):
    raw = np.asarray(raw, dtype=np.uint64)
    a = (1.0 - beta) / beta
    u = np.pi * _open_uniform(raw[0::2])
    w = -np.log(_open_uniform(raw[1::2]))
    return np.exp(
        np.log(np.sin(beta * u)) + a * np.log(np.sin((1.0 - beta) * u))
        - np.log(np.sin(u)) / beta - a * np.log(w) + log_scale
    )


def _run_path(key, beta, log_scale, horizon, max_steps, hint, keep):
    bg = np.random.Philox(key=int(key[0]) | (int(key[1]) << 64))
    total = 0.0
    k = 0
    kept = []
    m = max(16, hint)
    while True:
        z = increments_from_raw(bg.random_raw(2 * m), beta, log_scale)
        partial = np.cumsum(np.concatenate(([total], z)))[1:]
        j = int(np.searchsorted(partial, horizon, side="right"))
        if j < m:
            if keep:
                kept.append(z[: j + 1])
            return k + j, float(partial[j]), kept
        if keep:
            kept.append(z)
        k += m
        total = float(partial[-1])
        if k > max_steps:
            return -1, total, kept
        m = min(2 * m, _MAX_CHUNK)


def simulate_counts(keys, beta, log_scale, horizon, max_steps, hint=0):
    n = keys.shape[0]
    counts = np.empty(n, dtype=np.int64)
    totals = np.empty(n, dtype=np.float64)
    for p in range(n):
        counts[p], totals[p], _ = _run_path(keys[p], beta, log_scale, horizon, max_steps, hint, False)
    return counts, totals


def simulate_lengths(keys, beta, log_scale, horizon, max_steps, hint=0):
    n = keys.shape[0]
    counts = np.empty(n, dtype=np.int64)
    totals = np.empty(n, dtype=np.float64)
    pieces = []
    for p in range(n):
        counts[p], totals[p], kept = _run_path(keys[p], beta, log_scale, horizon, max_steps, hint, True)
        pieces.extend(kept)
    lengths = np.concatenate(pieces) if pieces else np.empty(0)
    return counts, totals, lengths
