"""Control barrier certificate safety filter.

Each neighbor contributes one half-plane constraint on the agent's input,
obtained by requiring dB/dt <= 1 / (c_r B) for the pairwise barrier B = 1/h
while assuming the neighbor keeps a constant velocity. The minimally
invasive input is the closest point to u_des inside those half-planes and
the box |u|_inf <= a_max. When no such input exists, or a neighbor is
already inside the safety distance, the agent brakes with u = -v.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

B_CLAMP = 1e12
_FEAS_TOL = 1e-9


@dataclass
class BarrierPair:
    dp: np.ndarray
    dv: np.ndarray
    h: float
    B: float
    breached: bool


@dataclass
class LinearConstraint:
    """a . u <= b"""

    a: np.ndarray
    b: float
    clamped: bool = False


@dataclass
class QPProblem:
    target: np.ndarray
    constraints: list
    box: float


class QPInfeasible(Exception):
    pass


@njit(cache=True)
def _barrier_h(dpx, dpy, dvx, dvy, a_max, D_s):
    """Returns (|dp|, h, breached); h is NaN inside the safety distance."""
    d = math.sqrt(dpx * dpx + dpy * dpy)
    breached = d <= D_s
    if d < D_s or d == 0.0:
        return d, math.nan, breached
    h = (dpx * dvx + dpy * dvy) / d + math.sqrt(4.0 * a_max * (d - D_s))
    return d, h, breached


@njit(cache=True)
def _cbc_row(dpx, dpy, dvx, dvy, d, h, c_r, a_max, D_s):
    """Coefficients of a . u_i <= b; returns (ax, ay, b, clamped)."""
    pv = dpx * dvx + dpy * dvy
    vv = dvx * dvx + dvy * dvy
    root = math.sqrt(4.0 * a_max * (d - D_s))
    if root > 0.0:
        last = 2.0 * a_max * (pv / d) / root
    elif pv == 0.0:
        last = 0.0
    else:
        last = math.copysign(math.inf, pv)
    b = h * h * h / c_r + vv / d - pv * pv / (d * d * d) + last
    clamped = False
    if b > B_CLAMP:
        b = B_CLAMP
        clamped = True
    elif b < -B_CLAMP:
        b = -B_CLAMP
        clamped = True
    return -dpx / d, -dpy / d, b, clamped


@njit(cache=True)
def _row(A, b, m, box, idx):
    if idx < m:
        return A[idx, 0], A[idx, 1], b[idx]
    q = idx - m
    if q == 0:
        return 1.0, 0.0, box
    if q == 1:
        return -1.0, 0.0, box
    if q == 2:
        return 0.0, 1.0, box
    return 0.0, -1.0, box


@njit(cache=True)
def _feasible(x, y, A, b, m, box):
    total = m + 4
    for idx in range(total):
        ax, ay, bb = _row(A, b, m, box, idx)
        if ax * x + ay * y > bb + _FEAS_TOL * (1.0 + abs(bb)):
            return False
    return True


@njit(cache=True)
def _solve_qp(tx, ty, A, b, m, box):
    """Closest point to (tx, ty) satisfying A[:m] u <= b[:m] and the box.

    Two unknowns make active-set enumeration exact: the optimum is either
    the target itself, its projection onto one constraint line, or the
    intersection of two constraint lines. Returns (ok, x, y).
    """
    for idx in range(m):
        if A[idx, 0] == 0.0 and A[idx, 1] == 0.0 and b[idx] < 0.0:
            return False, 0.0, 0.0
    if _feasible(tx, ty, A, b, m, box):
        return True, tx, ty
    total = m + 4
    best = math.inf
    bx = 0.0
    by = 0.0
    found = False
    for i in range(total):
        ax, ay, bi = _row(A, b, m, box, i)
        nn = ax * ax + ay * ay
        if nn == 0.0:
            continue
        s = (ax * tx + ay * ty - bi) / nn
        x = tx - s * ax
        y = ty - s * ay
        f = (x - tx) ** 2 + (y - ty) ** 2
        if f < best and _feasible(x, y, A, b, m, box):
            best = f
            bx = x
            by = y
            found = True
    for i in range(total):
        ax, ay, bi = _row(A, b, m, box, i)
        if ax == 0.0 and ay == 0.0:
            continue
        for j in range(i + 1, total):
            cx, cy, bj = _row(A, b, m, box, j)
            det = ax * cy - ay * cx
            scale = math.sqrt((ax * ax + ay * ay) * (cx * cx + cy * cy))
            if abs(det) <= 1e-14 * scale:
                continue
            x = (bi * cy - ay * bj) / det
            y = (ax * bj - bi * cx) / det
            f = (x - tx) ** 2 + (y - ty) ** 2
            if f < best and _feasible(x, y, A, b, m, box):
                best = f
                bx = x
                by = y
                found = True
    return found, bx, by


@njit(cache=True)
def _avoid_cbc(px, py, vx, vy, ux, uy, npos, nvel, k, c_r, a_max, D_s, A, b):
    """Returns (ux, uy, infeasible, breached, clamped_rows)."""
    clamped_rows = 0
    for m in range(k):
        dpx = px - npos[m, 0]
        dpy = py - npos[m, 1]
        dvx = vx - nvel[m, 0]
        dvy = vy - nvel[m, 1]
        d, h, breached = _barrier_h(dpx, dpy, dvx, dvy, a_max, D_s)
        if breached:
            return -vx, -vy, False, True, clamped_rows
        ax, ay, bb, clamped = _cbc_row(dpx, dpy, dvx, dvy, d, h, c_r, a_max, D_s)
        A[m, 0] = ax
        A[m, 1] = ay
        b[m] = bb
        if clamped:
            clamped_rows += 1
    ok, x, y = _solve_qp(ux, uy, A, b, k, a_max)
    if not ok:
        return -vx, -vy, True, False, clamped_rows
    return x, y, False, False, clamped_rows


def barrier_terms(pos_i, vel_i, pos_j, vel_j, a_max, D_s):
    """Relative state and barrier value for the pair (i, j).

    ``h = dp.dv/|dp| + sqrt(4 a_max (|dp| - D_s))`` and ``B = 1/h``. A pair at
    or inside the safety distance is flagged ``breached``; h is still
    reported on the boundary itself.
    """
    dp = np.asarray(pos_i, dtype=float) - np.asarray(pos_j, dtype=float)
    dv = np.asarray(vel_i, dtype=float) - np.asarray(vel_j, dtype=float)
    _, h, breached = _barrier_h(dp[0], dp[1], dv[0], dv[1], float(a_max), float(D_s))
    B = 1.0 / h if h != 0.0 else math.inf
    return BarrierPair(dp, dv, float(h), float(B), bool(breached))


def cbc_constraint(pair, c_r, a_max, D_s):
    """Linearize the barrier condition into ``a . u_i <= b``."""
    if c_r <= 0:
        raise ValueError("c_r must be positive")
    if not math.isfinite(pair.h):
        raise ValueError("barrier undefined inside the safety distance")
    dp, dv = pair.dp, pair.dv
    d = math.hypot(dp[0], dp[1])
    ax, ay, b, clamped = _cbc_row(dp[0], dp[1], dv[0], dv[1], d, pair.h,
                                  float(c_r), float(a_max), float(D_s))
    return LinearConstraint(np.array([ax, ay]), float(b), bool(clamped))


def solve_qp(problem):
    """Minimize |u - target|^2 over the constraints and the infinity-norm box.

    Raises QPInfeasible when the feasible polygon is empty.
    """
    cons = problem.constraints
    A = np.array([c.a for c in cons], dtype=float).reshape(-1, 2)
    b = np.array([c.b for c in cons], dtype=float)
    t = np.asarray(problem.target, dtype=float)
    ok, x, y = _solve_qp(t[0], t[1], A, b, len(cons), float(problem.box))
    if not ok:
        raise QPInfeasible("constraint polygon is empty")
    return np.array([x, y])


def avoid_cbc(req, D_s=None, diagnostics=None):
    """CBC filter for one agent; falls back to braking (-v) on failure."""
    p = req.params
    D_s = p.D_s if D_s is None else D_s
    npos, nvel, k = req.arrays()
    A = np.empty((max(k, 1), 2))
    b = np.empty(max(k, 1))
    ux, uy, infeasible, breached, clamped = _avoid_cbc(
        req.pos[0], req.pos[1], req.vel[0], req.vel[1],
        req.u_des[0], req.u_des[1], npos, nvel, k, p.c_r, p.a_max, D_s, A, b)
    if diagnostics is not None:
        diagnostics["infeasible"] = diagnostics.get("infeasible", 0) + int(infeasible)
        diagnostics["breach"] = diagnostics.get("breach", 0) + int(breached)
        diagnostics["brake"] = diagnostics.get("brake", 0) + int(infeasible or breached)
        diagnostics["clamped"] = diagnostics.get("clamped", 0) + clamped
    return np.array([ux, uy])


def cbc_min_sensing_radius(c_r, a_max, v_max, D_s):
    """Smallest sensing radius for which the CBC filter guarantees safety."""
    return D_s + (np.cbrt(4.0 * c_r * a_max) + 2.0 * v_max) ** 2 / (4.0 * a_max)
