"""Seed derivation for reproducible, order-independent Monte Carlo."""

import numpy as np


def substream(seed, *key):
    """Return an independent generator for ``(seed, *key)``.

    The stream depends only on the master seed and the key, never on how
    many other streams were drawn before, so replication ``r`` sees the same
    numbers whether it runs first, last, or in another process.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
