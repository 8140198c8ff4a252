"""Swarm parameters, delayed position history, neighbor queries and the
ring-state desired controller."""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

SAFETY_MARGIN = 2.1  # D_s = 2.1 r: agent diameter plus 5%


@dataclass(frozen=True)
class SwarmParams:
    N: int = 20
    alpha: float = 0.001
    beta: float = 1.0
    v0: float = 0.12
    t_d: float = 2.5
    r: float = 0.15
    l_r: float = 1.0
    c_r: float = 1.0
    a_max: float = 0.6

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("alpha", "beta", "v0", "t_d", "r", "l_r", "c_r", "a_max"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value!r}")
            object.__setattr__(self, name, value)
        if self.v0 <= 0:
            raise ValueError("v0 must be positive")
        if self.a_max <= 0:
            raise ValueError("a_max must be positive")

    @property
    def D_s(self):
        """Safety distance used by CBC and ORCA."""
        return SAFETY_MARGIN * self.r

    @property
    def v_max(self):
        return 2.0 * self.v0


@dataclass
class NeighborView:
    """Non-delayed states of the agents within sensing range, ascending index."""

    indices: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(zip(self.positions, self.velocities))

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        pos = np.array([p for p, _ in pairs], dtype=float).reshape(-1, 2)
        vel = np.array([v for _, v in pairs], dtype=float).reshape(-1, 2)
        return cls(np.arange(len(pairs)), pos, vel)


@njit(cache=True)
def _gather_neighbors(i, pos, vel, l_r, out_pos, out_vel, out_idx):
    """Copy neighbors of agent `i` into the scratch arrays; returns the count."""
    k = 0
    xi = pos[i, 0]
    yi = pos[i, 1]
    for j in range(pos.shape[0]):
        if j == i:
            continue
        dx = xi - pos[j, 0]
        dy = yi - pos[j, 1]
        if math.sqrt(dx * dx + dy * dy) <= l_r:
            out_pos[k, 0] = pos[j, 0]
            out_pos[k, 1] = pos[j, 1]
            out_vel[k, 0] = vel[j, 0]
            out_vel[k, 1] = vel[j, 1]
            out_idx[k] = j
            k += 1
    return k


@njit(cache=True)
def _desired_control(px, py, vx, vy, dix, diy, dsx, dsy, n, alpha, beta, v0):
    """u_des for one agent.

    (dix, diy) is the agent's own delayed position and (dsx, dsy) the sum of
    all delayed positions, so the attraction sum over j != i is
    ``(ds - di) - (n - 1) * p``.
    """
    s = beta * (v0 * v0 - (vx * vx + vy * vy))
    ux = s * vx
    uy = s * vy
    if n > 1:
        g = alpha / (n - 1)
        ux += g * ((dsx - dix) - (n - 1) * px)
        uy += g * ((dsy - diy) - (n - 1) * py)
    return ux, uy


def neighbor_set(self_index, positions, velocities, l_r):
    """Agents j != i with |r_i - r_j| <= l_r, in ascending index order."""
    pos = np.ascontiguousarray(positions, dtype=float).reshape(-1, 2)
    vel = np.ascontiguousarray(velocities, dtype=float).reshape(-1, 2)
    if pos.shape != vel.shape:
        raise ValueError("positions and velocities must have equal length")
    n = len(pos)
    if not 0 <= self_index < n:
        raise IndexError(self_index)
    out_pos = np.empty((n, 2))
    out_vel = np.empty((n, 2))
    out_idx = np.empty(n, dtype=np.int64)
    k = _gather_neighbors(self_index, pos, vel, float(l_r), out_pos, out_vel, out_idx)
    return NeighborView(out_idx[:k].copy(), out_pos[:k].copy(), out_vel[:k].copy())


def desired_control(self_index, positions, velocities, delayed_positions, params):
    """Ring-state input for one agent: speed regulation toward v0 plus
    all-to-all attraction to the other agents' delayed positions."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    vel = np.asarray(velocities, dtype=float).reshape(-1, 2)
    delayed = np.asarray(delayed_positions, dtype=float).reshape(-1, 2)
    n = len(pos)
    ds = delayed.sum(axis=0)
    i = self_index
    return np.array(_desired_control(
        pos[i, 0], pos[i, 1], vel[i, 0], vel[i, 1],
        delayed[i, 0], delayed[i, 1], ds[0], ds[1],
        n, params.alpha, params.beta, params.v0,
    ))


def delay_steps(t_d, dt):
    """Integer lag used for the delay lookup, round(t_d / dt)."""
    return int(math.floor(t_d / dt + 0.5))


def delay_capacity(t_d, dt):
    return int(math.ceil(t_d / dt)) + 1


@njit(cache=True)
def _push_and_query(buf, count, current, lag):
    """Store `current` as snapshot number `count` and return the snapshot
    `lag` steps older (clamped to the oldest one still available)."""
    cap = buf.shape[0]
    buf[count % cap] = current
    back = lag if lag <= count else count
    if back > cap - 1:
        back = cap - 1
    return buf[(count - back) % cap]


class DelayBuffer:
    """Ring buffer of per-agent position snapshots.

    Snapshot queries use the nearest whole step, round(t_d / dt); before
    the buffer has seen that many steps the oldest snapshot is returned.
    """

    def __init__(self, n_agents, t_d, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.t_d = float(t_d)
        self.dt = float(dt)
        self.lag = delay_steps(t_d, dt)
        self.capacity = delay_capacity(t_d, dt)
        self.snapshots = np.zeros((self.capacity, n_agents, 2))
        self.count = 0

    @property
    def head(self):
        return (self.count - 1) % self.capacity

    def push(self, positions):
        out = _push_and_query(self.snapshots, self.count,
                              np.asarray(positions, dtype=float), self.lag)
        self.count += 1
        return out.copy()


def record_and_query_delay(buffer, current_positions):
    """Push the current snapshot and return positions lagged by t_d."""
    return buffer.push(current_positions)
