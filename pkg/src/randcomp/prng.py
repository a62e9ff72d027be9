"""Seed derivation and generator construction.

Every random draw in the package comes from ``make_rng(seed)``, a numpy
``Generator`` over PCG64.  Sub-streams are split off a master seed with
``derive_seed(master, index)``, which is splitmix64 applied to
``master + index`` (mod 2**64).  Both pieces are platform independent.
"""

import numpy as np

GENERATOR_NAME = "numpy.PCG64/splitmix64"

_MASK64 = (1 << 64) - 1


def splitmix64(value):
    """One round of the splitmix64 finalizer on a 64-bit unsigned integer."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master, index):
    """Seed of sub-stream ``index`` of ``master``."""
    return splitmix64((int(master) + int(index)) & _MASK64)


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
