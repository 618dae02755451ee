"""Seed derivation: one master seed, named substreams.

Streams are derived by hashing the master seed with a path of names, so
every component (generation, splits, init, sampling) can be re-run in
isolation and parallel workers produce byte-identical results to serial
runs.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master, *names) -> int:
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for name in names:
        h.update(b"/")
        h.update(str(name).encode())
    return int.from_bytes(h.digest()[:8], "little")


def substream(master, *names) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *names))


def pick(rng: np.random.Generator, seq):
    if not seq:
        raise ValueError("cannot pick from an empty sequence")
    return seq[int(rng.integers(len(seq)))]


def shuffled(rng: np.random.Generator, seq) -> list:
    items = list(seq)
    order = rng.permutation(len(items))
    return [items[int(i)] for i in order]
