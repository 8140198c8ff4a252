"""Fixed-step simulation of the delayed-attraction swarm.

Per step every agent computes its desired input from delayed all-to-all
positions, passes it through the selected avoidance strategy using the
current states of its neighbors, and the result is capped at a_max. All
inputs come from the same pre-step state; velocities and then positions are
advanced with forward Euler, after which colliding pairs are respawned at
the lower-left corner of the swarm.
"""
import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .cbc import _avoid_cbc
from .core import (SwarmParams, _desired_control, _gather_neighbors, _push_and_query,
                   delay_capacity, delay_steps)
from .field import STRATEGIES, _avoid_gyro, _avoid_potential
from .metrics import _ring_metrics, ring_quality
from .orca import _avoid_orca
from .vecgeo import _clip

DT_CAP = 0.015
MIN_SPACING = 0.1
MAX_EVENTS = 100_000

# slots of the diagnostics vector filled by the compiled loop
D_INFEASIBLE, D_BRAKE, D_BREACH, D_CLAMPED, D_MAX_U, D_MIN_DIST, D_SATURATED, \
    D_COLLISIONS, D_EVENTS, D_BAD_STEP = range(10)
N_DIAG = 10


class SimulationError(RuntimeError):
    """The state became non-finite; indicates a numerical bug, not an outcome."""


@dataclass
class SimConfig:
    params: SwarmParams = field(default_factory=SwarmParams)
    strategy: str = "none"
    seed: int = 0
    t_total: float = 12000.0
    t_measure: float = 2000.0
    dt_cap: float = DT_CAP
    record_stride: int = 10
    snapshot_times: tuple = ()
    collisions: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        # normalized so equal configs hash equally regardless of int/float input
        self.t_total = float(self.t_total)
        self.t_measure = float(self.t_measure)
        self.dt_cap = float(self.dt_cap)
        self.collisions = bool(self.collisions)
        if not 0 <= self.t_measure <= self.t_total:
            raise ValueError("need 0 <= t_measure <= t_total")
        if self.dt_cap <= 0:
            raise ValueError("dt_cap must be positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        self.seed = int(self.seed)
        self.record_stride = int(self.record_stride)
        self.snapshot_times = tuple(float(t) for t in self.snapshot_times)

    @property
    def dt(self):
        return compute_dt(self.params.r, self.params.v0, self.dt_cap)


@dataclass(frozen=True)
class CollisionEvent:
    time: float
    i: int
    j: int


@dataclass
class MetricsSeries:
    t: np.ndarray
    fatness: np.ndarray
    tangentness: np.ndarray
    mean_fatness: float
    mean_tangentness: float
    lam: float
    collisions: int
    events: list
    diagnostics: dict
    dt: float
    final_positions: np.ndarray = None
    final_velocities: np.ndarray = None
    respawns: np.ndarray = None
    snapshots: np.ndarray = None
    snapshot_times: np.ndarray = None

    def summary(self):
        return {
            "lambda": self.lam,
            "mean_fatness": self.mean_fatness,
            "mean_tangentness": self.mean_tangentness,
            "collisions": self.collisions,
            "dt": self.dt,
            "samples": int(len(self.t)),
            "diagnostics": self.diagnostics,
        }


def compute_dt(r, v0, dt_cap=DT_CAP):
    """Step so no agent moving at 2 v0 travels more than half its body length."""
    if v0 <= 0:
        raise ValueError("v0 must be positive")
    if r <= 0:
        return dt_cap
    return min(r / (2.0 * v0), dt_cap)


def spiral_lattice(n):
    """First `n` points of the integer lattice visited in a square spiral
    from the origin: (0,0), (1,0), (1,1), (0,1), (-1,1), (-1,0), ..."""
    pts = np.zeros((n, 2))
    x = y = 0
    dx, dy = 1, 0
    run = 1
    k = 1
    while k < n:
        for _ in range(2):
            for _ in range(run):
                if k >= n:
                    break
                x += dx
                y += dy
                pts[k] = (x, y)
                k += 1
            dx, dy = -dy, dx
        run += 1
    return pts


def init_spiral(params, seed):
    """Agents on a spiral grid at speed v0 with random headings.

    Grid spacing is max(5 r, l_r) (at least MIN_SPACING). Headings are drawn
    from a counter-based Philox stream keyed by `seed`, so equal seeds give
    identical states.
    """
    spacing = max(5.0 * params.r, params.l_r, MIN_SPACING)
    pos = spiral_lattice(params.N) * spacing
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    heading = rng.uniform(0.0, 2.0 * math.pi, size=params.N)
    vel = params.v0 * np.column_stack((np.cos(heading), np.sin(heading)))
    return pos, vel


@njit(cache=True)
def _respawn(pos, vel, respawns, r, t, events, diag):
    """Relocate colliding pairs; returns the number of pairs respawned."""
    n = pos.shape[0]
    sx = math.inf
    sy = math.inf
    for i in range(n):
        sx = min(sx, pos[i, 0])
        sy = min(sy, pos[i, 1])
    two_r = 2.0 * r
    moved = np.zeros(n, dtype=np.bool_)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if moved[i] or moved[j]:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            if math.sqrt(dx * dx + dy * dy) < two_r:
                off_i = (4.0 + 8.0 * k) * r
                off_j = (8.0 + 8.0 * k) * r
                pos[i, 0] = sx - off_i
                pos[i, 1] = sy - off_i
                pos[j, 0] = sx - off_j
                pos[j, 1] = sy - off_j
                vel[i, 0] = 0.0
                vel[i, 1] = 0.0
                vel[j, 0] = 0.0
                vel[j, 1] = 0.0
                respawns[i] += 1
                respawns[j] += 1
                moved[i] = True
                moved[j] = True
                ne = int(diag[8])
                if ne < events.shape[0]:
                    events[ne, 0] = t
                    events[ne, 1] = i
                    events[ne, 2] = j
                    diag[8] += 1
                diag[7] += 1
                k += 1
    return k


@njit(cache=True)
def _min_pair_distance(pos):
    n = pos.shape[0]
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if d < best:
                best = d
    return best


@njit(cache=True)
def _simulate(pos, vel, respawns, strategy, alpha, beta, v0, c_r, l_r, a_max, r, D_s,
              dt, n_steps, lag, cap, collisions_on, sample_start, stride,
              snap_steps, snapshots, t_out, phi_out, tau_out, events, diag):
    n = pos.shape[0]
    buf = np.zeros((cap, n, 2))
    U = np.zeros((n, 2))
    npos = np.zeros((max(n, 1), 2))
    nvel = np.zeros((max(n, 1), 2))
    nidx = np.zeros(max(n, 1), dtype=np.int64)
    A = np.zeros((max(n, 1), 2))
    b = np.zeros(max(n, 1))
    L = np.zeros((max(n, 1), 2))
    n_snap = snap_steps.shape[0]
    snap_k = 0
    sample_k = 0
    diag[5] = math.inf
    for s in range(n_steps + 1):
        # record state after s completed steps
        while snap_k < n_snap and snap_steps[snap_k] == s:
            for i in range(n):
                snapshots[snap_k, i, 0] = pos[i, 0]
                snapshots[snap_k, i, 1] = pos[i, 1]
                snapshots[snap_k, i, 2] = vel[i, 0]
                snapshots[snap_k, i, 3] = vel[i, 1]
            snap_k += 1
        if s >= sample_start and (s - sample_start) % stride == 0:
            phi, tau = _ring_metrics(pos, vel)
            t_out[sample_k] = s * dt
            phi_out[sample_k] = phi
            tau_out[sample_k] = tau
            sample_k += 1
        if s == n_steps:
            break

        delayed = _push_and_query(buf, s, pos, lag)
        dsx = 0.0
        dsy = 0.0
        for i in range(n):
            dsx += delayed[i, 0]
            dsy += delayed[i, 1]
        for i in range(n):
            px = pos[i, 0]
            py = pos[i, 1]
            vx = vel[i, 0]
            vy = vel[i, 1]
            ux, uy = _desired_control(px, py, vx, vy, delayed[i, 0], delayed[i, 1],
                                      dsx, dsy, n, alpha, beta, v0)
            if strategy != 0:
                k = _gather_neighbors(i, pos, vel, l_r, npos, nvel, nidx)
                if strategy == 1:
                    ux, uy = _avoid_potential(px, py, i, ux, uy, npos, k, c_r, l_r)
                elif strategy == 2:
                    ux, uy = _avoid_gyro(px, py, vx, vy, ux, uy, npos, k, c_r, l_r)
                elif strategy == 3:
                    ux, uy, infeasible, breached, clamped = _avoid_cbc(
                        px, py, vx, vy, ux, uy, npos, nvel, k, c_r, a_max, D_s, A, b)
                    if infeasible:
                        diag[0] += 1
                    if breached:
                        diag[2] += 1
                    if infeasible or breached:
                        diag[1] += 1
                    diag[3] += clamped
                else:
                    ux, uy, infeasible = _avoid_orca(px, py, vx, vy, i, ux, uy, npos, nvel, k,
                                                     D_s, c_r, v0, dt, A, L)
                    if infeasible:
                        diag[0] += 1
            if ux * ux + uy * uy > a_max * a_max:
                diag[6] += 1
            ux, uy = _clip(ux, uy, a_max)
            mag = math.sqrt(ux * ux + uy * uy)
            if mag > diag[4]:
                diag[4] = mag
            U[i, 0] = ux
            U[i, 1] = uy
        ok = True
        for i in range(n):
            vel[i, 0] += dt * U[i, 0]
            vel[i, 1] += dt * U[i, 1]
            pos[i, 0] += dt * vel[i, 0]
            pos[i, 1] += dt * vel[i, 1]
            if not (math.isfinite(pos[i, 0]) and math.isfinite(pos[i, 1])
                    and math.isfinite(vel[i, 0]) and math.isfinite(vel[i, 1])):
                ok = False
        if not ok:
            diag[9] = s + 1
            return False
        if n > 1:
            dmin = _min_pair_distance(pos)
            if dmin < diag[5]:
                diag[5] = dmin
        if collisions_on and r > 0.0:
            _respawn(pos, vel, respawns, r, (s + 1) * dt, events, diag)
    return True


def _step_index(t, dt):
    return int(math.floor(t / dt + 0.5))


def run(config, initial_state=None):
    """Simulate one swarm and return its metric series.

    `initial_state` optionally overrides the spiral start with a
    ``(positions, velocities)`` pair. Metrics are sampled every
    ``record_stride`` steps during the final ``t_measure`` seconds.
    """
    p = config.params
    dt = config.dt
    if initial_state is None:
        pos, vel = init_spiral(p, config.seed)
    else:
        pos = np.array(initial_state[0], dtype=float).reshape(-1, 2)
        vel = np.array(initial_state[1], dtype=float).reshape(-1, 2)
        if pos.shape != (p.N, 2) or vel.shape != (p.N, 2):
            raise ValueError("initial state does not match N")
    pos = np.ascontiguousarray(pos)
    vel = np.ascontiguousarray(vel)
    respawns = np.zeros(p.N, dtype=np.int64)

    n_steps = _step_index(config.t_total, dt)
    sample_start = max(n_steps - _step_index(config.t_measure, dt), 0)
    stride = int(config.record_stride)
    n_samples = (n_steps - sample_start) // stride + 1
    snap_steps = np.array(sorted(min(_step_index(t, dt), n_steps) for t in config.snapshot_times),
                          dtype=np.int64)
    snapshots = np.zeros((len(snap_steps), p.N, 4))
    t_out = np.zeros(n_samples)
    phi_out = np.zeros(n_samples)
    tau_out = np.zeros(n_samples)
    events = np.zeros((MAX_EVENTS, 3))
    diag = np.zeros(N_DIAG)

    ok = _simulate(pos, vel, respawns, STRATEGIES.index(config.strategy),
                   p.alpha, p.beta, p.v0, p.c_r, p.l_r, p.a_max, p.r, p.D_s,
                   dt, n_steps, delay_steps(p.t_d, dt), delay_capacity(p.t_d, dt),
                   bool(config.collisions), sample_start, stride,
                   snap_steps, snapshots, t_out, phi_out, tau_out, events, diag)
    if not ok:
        raise SimulationError(f"non-finite state at step {int(diag[D_BAD_STEP])}")

    mean_phi = float(np.mean(phi_out))
    mean_tau = float(np.mean(tau_out))
    n_ev = int(diag[D_EVENTS])
    ev = [CollisionEvent(float(e[0]), int(e[1]), int(e[2])) for e in events[:n_ev]]
    diagnostics = {
        "infeasible": int(diag[D_INFEASIBLE]),
        "brake": int(diag[D_BRAKE]),
        "barrier_breach": int(diag[D_BREACH]),
        "clamped_rows": int(diag[D_CLAMPED]),
        "clip_saturated": int(diag[D_SATURATED]),
        "max_u_act": float(diag[D_MAX_U]),
        "min_pair_distance": float(diag[D_MIN_DIST]) if p.N > 1 else None,
    }
    return MetricsSeries(
        t=t_out, fatness=phi_out, tangentness=tau_out,
        mean_fatness=mean_phi, mean_tangentness=mean_tau,
        lam=ring_quality(mean_phi, mean_tau),
        collisions=int(diag[D_COLLISIONS]), events=ev, diagnostics=diagnostics, dt=dt,
        final_positions=pos, final_velocities=vel, respawns=respawns,
        snapshots=snapshots, snapshot_times=snap_steps * dt,
    )


def detect_and_respawn(positions, velocities, r, t, respawns=None):
    """Respawn every pair closer than 2r; returns (pos, vel, respawns, events).

    r_safe is the lower-left corner of the bounding box before any move; the
    k-th pair respawned in this call goes to r_safe - (4+8k)(r, r) and
    r_safe - (8+8k)(r, r) with zero velocity. An agent already moved this
    call is skipped and its other pair is re-checked next step.
    """
    pos = np.array(positions, dtype=float).reshape(-1, 2)
    vel = np.array(velocities, dtype=float).reshape(-1, 2)
    n = len(pos)
    counts = np.zeros(n, dtype=np.int64) if respawns is None else np.array(respawns, dtype=np.int64)
    if r <= 0:
        return pos, vel, counts, []
    events = np.zeros((n, 3))
    diag = np.zeros(N_DIAG)
    _respawn(pos, vel, counts, float(r), float(t), events, diag)
    ev = [CollisionEvent(float(e[0]), int(e[1]), int(e[2])) for e in events[:int(diag[D_EVENTS])]]
    return pos, vel, counts, ev


def write_metrics(series, path, summary_path=None):
    """Metric samples as CSV (t, fatness, tangentness) plus a JSON summary."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "fatness", "tangentness"])
        for row in zip(series.t, series.fatness, series.tangentness):
            w.writerow([repr(float(x)) for x in row])
    if summary_path is not None:
        with open(summary_path, "w") as fh:
            json.dump(series.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_trajectory(series, path):
    """One row per (snapshot time, agent): time, index, x, y, vx, vy."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "index", "x", "y", "vx", "vy"])
        for t, snap in zip(series.snapshot_times, series.snapshots):
            for i, (x, y, vx, vy) in enumerate(snap):
                w.writerow([repr(float(t)), i] + [repr(float(v)) for v in (x, y, vx, vy)])
