"""Proximal maps and the circular-difference total-variation operator."""

from __future__ import annotations

import numpy as np

__all__ = ["soft_threshold", "tv_forward", "tv_adjoint"]


def soft_threshold(v, threshold):
    """Elementwise sign(v) * max(|v| - threshold, 0); the l1 proximal map."""
    if threshold < 0:
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def tv_forward(x):
    """Circular forward differences along the last two axes.

    Output gains a leading axis of size 2: row differences, then column
    differences. Circular boundaries keep the Gram matrix of this operator
    diagonal in the frequency domain.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.stack(
        [np.roll(x, -1, axis=-2) - x, np.roll(x, -1, axis=-1) - x]
    )


def tv_adjoint(g):
    """Exact adjoint of tv_forward (negative circular divergence)."""
    g = np.asarray(g, dtype=np.float64)
    if g.shape[0] != 2:
        raise ValueError("tv_adjoint expects a leading axis of size 2")
    gr, gc = g[0], g[1]
    return (np.roll(gr, 1, axis=-2) - gr) + (np.roll(gc, 1, axis=-1) - gc)
