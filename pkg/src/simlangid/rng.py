"""Seed derivation helpers.

All stochastic behaviour in the toolkit runs on Python's ``random.Random``
(Mersenne Twister, MT19937).  Sub-seeds are derived by hashing the parent
seed together with context values through SHA-256, so every individual job
(a learning-curve replicate, the tie-break for one instance) is reproducible
in isolation and independent of execution order, thread count, or platform.
"""

import hashlib
import random


def derived_seed(*parts) -> int:
    """Stable 64-bit sub-seed from a parent seed plus context values.

    Parts may be ints or strings; the derivation is the first 8 bytes of
    SHA-256 over their repr, so it does not depend on PYTHONHASHSEED.
    """
    blob = repr(parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def instance_rng(seed: int, index: int) -> random.Random:
    """Seeded generator for per-instance tie breaking.

    Keyed by instance index only, so combiner output is invariant to the
    order in which systems (columns) are supplied.
    """
    return random.Random(derived_seed(seed, "instance", index))
