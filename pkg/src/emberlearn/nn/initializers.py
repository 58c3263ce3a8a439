"""Weight initialization."""

from __future__ import annotations

import numpy as np


def truncated_normal(shape, std: float, rng) -> np.ndarray:
    """N(0, std^2) samples re-drawn until they land inside +/- 2 std.

    Draws are taken from the shared xoshiro stream in a fixed order (one
    Box-Muller cosine variate per candidate), so the result is reproducible
    and identical whether filled scalar-by-scalar or in batches.  std == 0
    returns zeros without consuming the stream.
    """
    if std < 0:
        raise ValueError("std must be nonnegative")
    n = int(np.prod(shape))
    if std == 0 or n == 0:
        return np.zeros(shape)
    accepted: list[np.ndarray] = []
    have = 0
    while have < n:
        want = n - have
        u = np.array(rng.uniforms(2 * want)).reshape(want, 2)
        z = np.sqrt(-2.0 * np.log(1.0 - u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])
        z = z[np.abs(z) <= 2.0]
        accepted.append(z)
        have += len(z)
    return np.concatenate(accepted)[:n].reshape(shape) * std
