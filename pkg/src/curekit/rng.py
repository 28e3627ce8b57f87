"""Deterministic substream construction shared by every stochastic routine."""

from __future__ import annotations

import numpy as np


def substream(seed: int, index: int) -> np.random.Generator:
    """Return the generator for substream ``index`` of ``seed``.

    Built on a counter-based bit generator keyed by the seed, so any
    substream can be reconstructed independently of the order in which
    the others are consumed.  Two calls with the same ``(seed, index)``
    always yield identical draws.
    """
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    if index < 0:
        raise ValueError(f"substream index must be non-negative, got {index}")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))
