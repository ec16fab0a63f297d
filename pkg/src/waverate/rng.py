"""Counter-based random streams for reproducible, schedule-independent draws.

Every stochastic task derives its own Philox generator from a 64-bit user
seed plus a small integer path (replication index, sample-size index,
stream role).  Streams are independent of execution order and thread
count, so parallel and serial runs of the same plan are bit-identical.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_key(seed: int, *path: int) -> int:
    """Pack a user seed and a stream path into a 128-bit Philox key."""
    if any(p < 0 for p in path):
        raise ValueError("stream path components must be nonnegative")
    sub = 0
    for p in path:
        # 16 bits per component keeps distinct short paths collision-free
        sub = (sub << 16) | (int(p) & 0xFFFF)
    return (int(seed) & _MASK64) | ((sub & _MASK64) << 64)


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (seed, path) combination."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, *path)))
