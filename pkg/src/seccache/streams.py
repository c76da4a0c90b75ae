"""Named, independently seeded random streams.

Each consumer gets its own child of one ``SeedSequence``, so a negative
control that perturbs one stream leaves the draws of the others unchanged.
"""

from __future__ import annotations

import numpy as np

STREAM_NAMES = ("files", "y_keys", "e_keys", "demands")


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}
