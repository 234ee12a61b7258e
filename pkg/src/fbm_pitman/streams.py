"""Counter-based random streams.

Every trajectory of a campaign draws from its own Philox stream keyed by the
campaign seed.  The trajectory index is written into the top word of the
256-bit counter, so streams are disjoint blocks of one counter space and a
trajectory's draws never depend on which worker produced them.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

#: Domain tags separate unrelated uses of the same seed.
TWO_SIDED = 0
ONE_SIDED = 1
ORACLE = 2


def trajectory_stream(seed: int, index: int, domain: int = TWO_SIDED) -> np.random.Generator:
    """Return the generator for trajectory ``index`` of the campaign ``seed``."""
    if index < 0:
        raise ValueError("trajectory index must be nonnegative")
    bitgen = np.random.Philox(
        key=seed & _MASK64,
        counter=[0, 0, domain & _MASK64, index & _MASK64],
    )
    return np.random.Generator(bitgen)


def stacked_normals(seed: int, indices, width: int, domain: int = TWO_SIDED) -> np.ndarray:
    """Draw ``width`` standard normals per index, one row per trajectory."""
    indices = list(indices)
    out = np.empty((len(indices), width))
    for row, index in enumerate(indices):
        out[row] = trajectory_stream(seed, index, domain).standard_normal(width)
    return out
