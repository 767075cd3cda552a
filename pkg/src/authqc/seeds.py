"""Seed derivation tree.

Every random draw in the package comes from ``derive_rng(root, *labels)``:
the root seed plus a path of string labels (``"L"``, ``"R"``, ``"shuffle"``,
``"sample", 17`` ...) is hashed into a numpy ``SeedSequence``.  The same root
and path always give the same stream, independent of call order.
"""
from __future__ import annotations

import zlib

import numpy as np


def _label_key(label) -> int:
    if isinstance(label, int):
        return label
    return zlib.crc32(str(label).encode())


def derive_seed(root: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(root), *(_label_key(x) for x in labels)])


def derive_rng(root: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *labels))


def derive_int(root: int, *labels) -> int:
    return int(derive_seed(root, *labels).generate_state(1, dtype=np.uint32)[0])
