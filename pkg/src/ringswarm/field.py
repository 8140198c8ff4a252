"""Force-based collision avoidance: the no-op baseline, potential-field
repulsion and gyroscopic steering.

All avoidance strategies share one calling convention. The kernels take the
agent's own state, its desired input and the neighbor arrays (first `k` rows
valid) and return the corrected input as a pair of floats.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import NeighborView, SwarmParams
from .vecgeo import _crossz, _rot90, _sgnz

STRATEGIES = ("none", "potential", "gyro", "cbc", "orca")


@dataclass
class AvoidanceRequest:
    u_des: np.ndarray
    pos: np.ndarray
    vel: np.ndarray
    neighbors: NeighborView
    params: SwarmParams
    dt: float = 0.015
    index: int = 0

    def __post_init__(self):
        self.u_des = np.asarray(self.u_des, dtype=float)
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)
        if not isinstance(self.neighbors, NeighborView):
            self.neighbors = NeighborView.from_pairs(self.neighbors)

    def arrays(self):
        nb = self.neighbors
        npos = np.ascontiguousarray(nb.positions, dtype=float).reshape(-1, 2)
        nvel = np.ascontiguousarray(nb.velocities, dtype=float).reshape(-1, 2)
        return npos, nvel, len(npos)


@njit(cache=True)
def _magnitude(d, c_r, l_r):
    """U(d) = 2 (c_r / l_r) exp(-2 d / l_r)."""
    return 2.0 * (c_r / l_r) * math.exp(-2.0 * d / l_r)


@njit(cache=True)
def _avoid_potential(px, py, index, ux, uy, npos, k, c_r, l_r):
    if c_r == 0.0 or l_r <= 0.0:
        return ux, uy
    for m in range(k):
        dx = px - npos[m, 0]
        dy = py - npos[m, 1]
        d = math.sqrt(dx * dx + dy * dy)
        f = _magnitude(d, c_r, l_r)
        if d > 0.0:
            ux += f * dx / d
            uy += f * dy / d
        else:
            ux += f * (1.0 if index % 2 == 0 else -1.0)
    return ux, uy


@njit(cache=True)
def _nearest(px, py, npos, k):
    best = -1
    best_d = math.inf
    for m in range(k):
        dx = px - npos[m, 0]
        dy = py - npos[m, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d < best_d:
            best_d = d
            best = m
    return best, best_d


@njit(cache=True)
def _avoid_gyro(px, py, vx, vy, ux, uy, npos, k, c_r, l_r):
    if k == 0 or l_r <= 0.0:
        return ux, uy
    speed = math.sqrt(vx * vx + vy * vy)
    if speed == 0.0:
        return ux, uy
    m, d = _nearest(px, py, npos, k)
    hx, hy = _rot90(vx / speed, vy / speed)
    s = _sgnz(_crossz(npos[m, 0] - px, npos[m, 1] - py, vx, vy))
    f = s * _magnitude(d, c_r, l_r)
    return ux + f * hx, uy + f * hy


def avoid_none(req):
    """Collision avoidance disabled: the desired input passes through."""
    return np.array(req.u_des, dtype=float)


def avoid_potential(req):
    """Add an exponentially decaying repulsion from every neighbor."""
    npos, _, k = req.arrays()
    p = req.params
    if k and p.l_r <= 0:
        raise ValueError("potential avoidance needs l_r > 0")
    return np.array(_avoid_potential(
        req.pos[0], req.pos[1], req.index, req.u_des[0], req.u_des[1],
        npos, k, p.c_r, p.l_r))


def avoid_gyro(req):
    """Steer perpendicular to the velocity, away from the nearest neighbor.

    The correction has the same magnitude as a single-neighbor potential
    repulsion. Agents at rest are not steered.
    """
    npos, _, k = req.arrays()
    p = req.params
    return np.array(_avoid_gyro(
        req.pos[0], req.pos[1], req.vel[0], req.vel[1],
        req.u_des[0], req.u_des[1], npos, k, p.c_r, p.l_r))
