"""Deterministic seed derivation.

All randomness in a run flows from one root seed. Component seeds are derived
by hashing the root together with a name path, so adding or reordering
components never shifts the streams of the others.
"""

import hashlib

import numpy as np


def child_seed(root: int, *names) -> int:
    """Derive a stable 32-bit seed from a root seed and a name path.

    Each path component is length-prefixed before hashing so distinct
    paths can never collide through separator characters inside names.
    """
    h = hashlib.sha256()
    for part in [str(int(root))] + [str(n) for n in names]:
        raw = part.encode("utf-8")
        h.update(len(raw).to_bytes(4, "little"))
        h.update(raw)
    return int.from_bytes(h.digest()[:4], "little")


def rng(root: int, *names) -> np.random.Generator:
    """Generator seeded from the derived child seed."""
    return np.random.default_rng(child_seed(root, *names))
