"""One 64-bit seed, expanded into independent named sub-streams."""
import os
import zlib

import numpy as np

SEED_ENV = "RELGRAPH_SEED"
DEFAULT_SEED = 42


def resolve_seed(seed=None):
    """Return ``seed`` if given, else ``$RELGRAPH_SEED``, else the default."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    return DEFAULT_SEED


def _name_key(name):
    return zlib.crc32(name.encode("utf-8"))


def substream(seed, name, *index):
    """Seed sequence for sub-stream ``name`` (optionally indexed, e.g. by node id).

    Streams with different names or indices are statistically independent and
    do not depend on the order in which they are requested.
    """
    key = (_name_key(name),) + tuple(int(i) for i in index)
    return np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)


def rng(seed, name, *index):
    return np.random.default_rng(substream(seed, name, *index))


def int_seed(seed, name, *index):
    """A 63-bit integer derived from a sub-stream, for kernels that run their own PRNG."""
    return int(substream(seed, name, *index).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
