"""Per-purpose random streams derived from a single master seed.

Every source of randomness in a run (parameter init, Gumbel draws, channel
noise, batch selection, ...) gets its own generator, keyed by a purpose
string plus optional counters such as the step index.  Two runs with the
same master seed therefore agree bitwise, and changing how often one
stream is consumed cannot perturb the others.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_rng(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Return the generator for (master_seed, purpose, indices).

    The purpose string is folded to a stable 32-bit code (CRC-32), so the
    stream identity does not depend on Python's per-process string hashing.
    """
    entropy = [int(master_seed) & _MASK64, zlib.crc32(purpose.encode("utf-8"))]
    entropy.extend(int(i) & _MASK64 for i in indices)
    return np.random.default_rng(entropy)
