"""Named derivation of RNG seeds from a single base seed.

Every random decision in the pipeline draws from a stream derived as
``derive_seed(base, "purpose", ...)``.  Derivation is hash-based (SHA-256,
never Python's ``hash()``), so the same (base seed, labels) pair yields the
same stream on any platform and regardless of how many other streams were
created before it.  That makes concurrent and serial runs interchangeable.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base_seed: int, *labels) -> int:
    """Return a child seed for the stream named by ``labels``."""
    text = str(int(base_seed)) + "\x1f" + "\x1f".join(str(part) for part in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(base_seed: int, *labels) -> np.random.Generator:
    """Return a ``numpy`` generator seeded for the stream named by ``labels``."""
    return np.random.default_rng(derive_seed(base_seed, *labels))
