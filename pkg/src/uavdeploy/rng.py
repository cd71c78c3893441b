"""Seeded random streams.

Every random consumer draws from its own child stream of a PCG64 generator.
A child stream is identified by ``(seed, purpose)``: the purpose name maps to a
fixed integer that becomes the ``spawn_key`` of a :class:`numpy.random.SeedSequence`.
Adding a consumer never shifts the draws of an existing one.
"""
import numpy as np

PURPOSES = {
    "positions": 0,
    "rates": 1,
    "perturbation": 2,
    "ga": 3,
    "random-placement": 4,
    "kmeans": 5,
    "altitude": 6,
}


def stream(seed: int, purpose: str) -> np.random.Generator:
    try:
        key = PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown random stream purpose {purpose!r}") from None
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(ss))
