"""Named, hierarchical RNG streams derived from one integer seed.

``stream(seed, INIT, 3, 1)`` always yields the same generator no matter how
many other streams were drawn before it, so adding folds or imputations
never shifts the draws of another job.
"""

import numpy as np

INIT = 0
IMPUTE = 1
FOLDS = 2
GRADCHECK = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))
