"""Deterministic random streams.

Every random draw in the package comes from a counter-based Philox generator keyed by a hash of
``(seed, purpose tag, index)``, so results never depend on call order or thread scheduling.
"""
import hashlib

import numpy as np


def derive_key(seed: int, tag: str, index: int = 0) -> int:
    """Hash a (seed, tag, index) triple into a 64-bit Philox key.

    Args:
        seed (int): Run seed.
        tag (str): Purpose of the stream, e.g. ``"forest-tree"``.
        index (int): Sub-stream index, e.g. the tree number.

    Returns:
        int: Unsigned 64-bit key.
    """
    digest = hashlib.blake2b(f"{int(seed)}:{tag}:{int(index)}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Return an independent generator for one purpose-tagged sub-stream."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, tag, index)))
