"""Counter-based splittable random streams.

Every replica gets its own Philox bit generator keyed by the master seed and
a tuple of stream ids, so results do not depend on scheduling or worker
count.  All consumers draw raw uniform doubles in a documented order and
apply explicit inverse-CDF transforms; both kernel backends therefore walk
the exact same bit stream.
"""

from __future__ import annotations

import numpy as np


def bit_generator(seed: int, *ids: int) -> np.random.Philox:
    return np.random.Philox(np.random.SeedSequence((int(seed),) + tuple(int(i) for i in ids)))


def stream(seed: int, *ids: int) -> np.random.Generator:
    return np.random.Generator(bit_generator(seed, *ids))


# experiment tags for stream separation
TAG_CLOUD = 11
TAG_CONTRACTION = 21
TAG_CHAOS = 31
TAG_MOMENTS = 41
TAG_FIDELITY = 51
TAG_VALIDATE = 61
