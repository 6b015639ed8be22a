"""Smooth compactly supported profiles built from the exp(-1/t) glue."""

from __future__ import annotations

import numpy as np

__all__ = ["glue", "smoothstep", "lp_profile", "chi_step", "radial_bump"]


def glue(t):
    """exp(-1/t) for t > 0, zero otherwise; C^inf on the line."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(t):
    """C^inf monotone step: 0 for t <= 0, 1 for t >= 1."""
    a = glue(t)
    b = glue(1.0 - np.asarray(t, dtype=float))
    return a / (a + b + np.finfo(float).tiny)


def lp_profile(r):
    """Radial Littlewood-Paley bump: 1 on [0,1], 0 on [2,inf), monotone."""
    return smoothstep(2.0 - np.asarray(r, dtype=float))


def chi_step(s):
    """Cutoff profile chi: 1 on (-inf,-1], 0 on [0,inf), monotone."""
    return smoothstep(-np.asarray(s, dtype=float))


def radial_bump(r, flat=0.5):
    """Radial bump: 1 on [0, flat], 0 on [1, inf)."""
    r = np.asarray(r, dtype=float)
    return smoothstep((1.0 - r) / (1.0 - flat))
