"""Seed derivation shared by training, sweeps and the CLI.

A component seed is derived from ``(master, name, index)`` as::

    h = splitmix64(master)
    for byte in utf8(name):  h = splitmix64(h ^ byte)
    seed = splitmix64(h ^ index)

with all arithmetic modulo 2**64. The recipe is simple enough to reproduce
in any language.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, name: str, index: int = 0) -> int:
    h = splitmix64(int(master) & MASK64)
    for byte in name.encode("utf-8"):
        h = splitmix64(h ^ byte)
    return splitmix64(h ^ (int(index) & MASK64))


def rng_for(master: int, name: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, name, index))
