"""Small 2-vector helpers shared by the controllers and the simulator.

The ``_``-prefixed kernels work on scalar pairs so they can be called from
inside the compiled step loop without allocating; the public wrappers accept
anything array-like and return ``np.ndarray`` of shape (2,).
"""
import math

import numpy as np
from numba import njit

ZERO_TOL = 1e-12


@njit(cache=True)
def _clip(x, y, a):
    n = math.hypot(x, y)
    if n < a:
        return x, y
    if n == 0.0:
        # only reachable with a == 0
        return 0.0, 0.0
    return a * x / n, a * y / n


@njit(cache=True)
def _rot90(x, y):
    return -y, x


@njit(cache=True)
def _crossz(ax, ay, bx, by):
    return ax * by - ay * bx


@njit(cache=True)
def _sgnz(x):
    if x < 0.0:
        return -1.0
    return 1.0


def _as_vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {v.shape}")
    return v


def clip(x, a):
    """Scale `x` down to magnitude `a` if it is not already shorter.

    Returns `x` unchanged when ``|x| < a``, otherwise ``a * x / |x|``.
    """
    if a < 0:
        raise ValueError("clip magnitude must be nonnegative")
    x = _as_vec(x)
    return np.array(_clip(x[0], x[1], float(a)))


def rot90(x):
    """Counterclockwise quarter turn, (x, y) -> (-y, x)."""
    x = _as_vec(x)
    return np.array(_rot90(x[0], x[1]))


def crossz(a, b):
    """z component of the cross product of two planar vectors."""
    a = _as_vec(a)
    b = _as_vec(b)
    return float(_crossz(a[0], a[1], b[0], b[1]))


def sgnz(x):
    """Sign function with sgnz(0) = 1, so head-on encounters steer left."""
    return float(_sgnz(float(x)))
