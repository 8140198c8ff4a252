"""Ring quality metrics: fatness, tangentness and their combination."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _ring_metrics(pos, vel):
    n = pos.shape[0]
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += pos[i, 0]
        my += pos[i, 1]
    mx /= n
    my /= n
    r_min = math.inf
    r_max = 0.0
    tang = 0.0
    for i in range(n):
        rx = pos[i, 0] - mx
        ry = pos[i, 1] - my
        d = math.sqrt(rx * rx + ry * ry)
        s = math.sqrt(vel[i, 0] * vel[i, 0] + vel[i, 1] * vel[i, 1])
        if d < r_min:
            r_min = d
        if d > r_max:
            r_max = d
        if d == 0.0 or s == 0.0:
            tang += 1.0
        else:
            c = (rx * vel[i, 0] + ry * vel[i, 1]) / (d * s)
            tang += min(abs(c), 1.0)
    if r_max == 0.0:
        phi = 1.0
    else:
        phi = 1.0 - (r_min * r_min) / (r_max * r_max)
    return phi, tang / n


def metrics_step(positions, velocities):
    """Instantaneous (fatness, tangentness) of a swarm state.

    Fatness is ``1 - r_min^2 / r_max^2`` over distances to the centroid and
    tangentness the mean ``|unit radial . unit velocity|``. An agent sitting
    on the centroid or standing still counts as fully misaligned.
    """
    pos = np.ascontiguousarray(positions, dtype=float).reshape(-1, 2)
    vel = np.ascontiguousarray(velocities, dtype=float).reshape(-1, 2)
    phi, tau = _ring_metrics(pos, vel)
    return float(phi), float(tau)


def ring_quality(mean_fatness, mean_tangentness):
    """lambda = 1 - max(mean fatness, mean tangentness); 1 is a perfect ring."""
    return 1.0 - max(mean_fatness, mean_tangentness)
