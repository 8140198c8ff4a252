"""Optimal reciprocal collision avoidance.

Each neighbor j contributes a half-plane of permitted velocities for agent i,
built from the truncated velocity obstacle over a horizon of c_r seconds with
each agent taking half of the required correction. The safe velocity is the
point of the speed disc |v| <= v0 intersected with those half-planes that is
closest to the preferred velocity v + dt * u_des, found by incremental 2D
linear programming. If the intersection is empty the velocity minimizing the
largest plane violation is used instead.

Half-planes are stored internally as (point, direction) lines with the
permitted side on the left of the direction; the public ``HalfPlane`` carries
the outward normal, which is the direction rotated a quarter turn CCW.
"""
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

_PARALLEL_EPS = 1e-12
_TIE_TOL = 1e-12


@dataclass
class HalfPlane:
    """Permitted set {v : (v - point) . normal >= 0}."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)
        n = np.asarray(self.normal, dtype=float)
        self.normal = n / math.hypot(n[0], n[1])

    def violation(self, v):
        return float(np.dot(self.point - np.asarray(v, dtype=float), self.normal))


@dataclass
class VelocityQuery:
    v_pref: np.ndarray
    planes: list
    speed_cap: float


@njit(cache=True)
def _orca_line(pix, piy, vix, viy, pjx, pjy, vjx, vjy, index, R, tau, dt):
    """ORCA line for agent i induced by j: returns (px, py, dx, dy)."""
    rpx = pjx - pix
    rpy = pjy - piy
    rvx = vix - vjx
    rvy = viy - vjy
    dist_sq = rpx * rpx + rpy * rpy
    r_sq = R * R
    if dist_sq > r_sq:
        inv_tau = 1.0 / tau
        wx = rvx - inv_tau * rpx
        wy = rvy - inv_tau * rpy
        w_sq = wx * wx + wy * wy
        dot1 = wx * rpx + wy * rpy
        if dot1 < 0.0 and dot1 * dot1 > r_sq * w_sq:
            # closest boundary point lies on the cut-off circle
            w_len = math.sqrt(w_sq)
            uwx = wx / w_len
            uwy = wy / w_len
            dx = uwy
            dy = -uwx
            s = R * inv_tau - w_len
            ux = s * uwx
            uy = s * uwy
        else:
            leg = math.sqrt(dist_sq - r_sq)
            if rpx * wy - rpy * wx > 0.0:
                dx = (rpx * leg - rpy * R) / dist_sq
                dy = (rpx * R + rpy * leg) / dist_sq
            else:
                dx = -(rpx * leg + rpy * R) / dist_sq
                dy = -(-rpx * R + rpy * leg) / dist_sq
            dot2 = rvx * dx + rvy * dy
            ux = dot2 * dx - rvx
            uy = dot2 * dy - rvy
    else:
        # already overlapping: separate within one time step
        inv_dt = 1.0 / dt
        wx = rvx - inv_dt * rpx
        wy = rvy - inv_dt * rpy
        w_len = math.sqrt(wx * wx + wy * wy)
        if w_len > 0.0:
            uwx = wx / w_len
            uwy = wy / w_len
        else:
            uwx = 1.0 if index % 2 == 0 else -1.0
            uwy = 0.0
        dx = uwy
        dy = -uwx
        s = R * inv_dt - w_len
        ux = s * uwx
        uy = s * uwy
    return vix + 0.5 * ux, viy + 0.5 * uy, dx, dy


@njit(cache=True)
def _lp1(P, D, line, radius, optx, opty):
    """Optimize along line `line` subject to lines [0, line) and the disc."""
    px = P[line, 0]
    py = P[line, 1]
    dx = D[line, 0]
    dy = D[line, 1]
    dot = px * dx + py * dy
    disc = dot * dot + radius * radius - (px * px + py * py)
    if disc < 0.0:
        return False, 0.0, 0.0
    sq = math.sqrt(disc)
    t_left = -dot - sq
    t_right = -dot + sq
    for i in range(line):
        denom = dx * D[i, 1] - dy * D[i, 0]
        numer = D[i, 0] * (py - P[i, 1]) - D[i, 1] * (px - P[i, 0])
        if abs(denom) <= _PARALLEL_EPS:
            if numer < 0.0:
                return False, 0.0, 0.0
            continue
        t = numer / denom
        if denom >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, 0.0, 0.0
    t = dx * (optx - px) + dy * (opty - py)
    if t < t_left:
        t = t_left
    elif t > t_right:
        t = t_right
    return True, px + t * dx, py + t * dy


@njit(cache=True)
def _lp2(P, D, m, radius, optx, opty):
    """Closest point to opt in the disc and all m half-planes.

    Returns (ok, x, y); on failure (x, y) is the last feasible optimum.
    """
    n_opt = math.sqrt(optx * optx + opty * opty)
    if n_opt > radius:
        rx = optx * radius / n_opt
        ry = opty * radius / n_opt
    else:
        rx = optx
        ry = opty
    for i in range(m):
        if D[i, 0] * (P[i, 1] - ry) - D[i, 1] * (P[i, 0] - rx) > 0.0:
            ok, x, y = _lp1(P, D, i, radius, optx, opty)
            if not ok:
                return False, rx, ry
            rx = x
            ry = y
    return True, rx, ry


@njit(cache=True)
def _max_violation(P, D, m, x, y):
    worst = -math.inf
    for k in range(m):
        # normal = (-dy, dx)
        g = (P[k, 0] - x) * (-D[k, 1]) + (P[k, 1] - y) * D[k, 0]
        if g > worst:
            worst = g
    return worst


@njit(cache=True)
def _consider(P, D, m, radius, prefx, prefy, x, y, best, bx, by):
    if x * x + y * y > radius * radius * (1.0 + 1e-12):
        return best, bx, by
    f = _max_violation(P, D, m, x, y)
    if f < best - _TIE_TOL:
        return f, x, y
    if f <= best + _TIE_TOL:
        if (x - prefx) ** 2 + (y - prefy) ** 2 < (bx - prefx) ** 2 + (by - prefy) ** 2:
            return min(f, best), x, y
    return best, bx, by


@njit(cache=True)
def _fallback(P, D, m, radius, prefx, prefy):
    """Velocity in the closed disc minimizing the largest plane violation.

    The objective is convex and piecewise linear, so its minimum over the
    disc sits at a disc point maximizing one plane's normal component, on an
    equal-violation line of two planes where it meets the circle, or at a
    point where three planes' violations coincide.
    """
    best = math.inf
    bx = 0.0
    by = 0.0
    for k in range(m):
        nx = -D[k, 1]
        ny = D[k, 0]
        best, bx, by = _consider(P, D, m, radius, prefx, prefy,
                                 radius * nx, radius * ny, best, bx, by)
    for k in range(m):
        nkx = -D[k, 1]
        nky = D[k, 0]
        ek = P[k, 0] * nkx + P[k, 1] * nky
        for l in range(k + 1, m):
            nlx = -D[l, 1]
            nly = D[l, 0]
            # v . c = e is the equal-violation line
            cx = nlx - nkx
            cy = nly - nky
            cc = cx * cx + cy * cy
            if cc <= _PARALLEL_EPS:
                continue
            e = P[l, 0] * nlx + P[l, 1] * nly - ek
            # foot of the perpendicular from the origin, then along the line
            fx = e * cx / cc
            fy = e * cy / cc
            tx = -cy / math.sqrt(cc)
            ty = cx / math.sqrt(cc)
            rem = radius * radius - (fx * fx + fy * fy)
            if rem >= 0.0:
                s = math.sqrt(rem)
                best, bx, by = _consider(P, D, m, radius, prefx, prefy,
                                         fx + s * tx, fy + s * ty, best, bx, by)
                best, bx, by = _consider(P, D, m, radius, prefx, prefy,
                                         fx - s * tx, fy - s * ty, best, bx, by)
                # tie-break candidate for opposing parallel planes
                s = (prefx - fx) * tx + (prefy - fy) * ty
                best, bx, by = _consider(P, D, m, radius, prefx, prefy,
                                         fx + s * tx, fy + s * ty, best, bx, by)
            for q in range(l + 1, m):
                nqx = -D[q, 1]
                nqy = D[q, 0]
                c2x = nqx - nkx
                c2y = nqy - nky
                e2 = P[q, 0] * nqx + P[q, 1] * nqy - ek
                det = cx * c2y - cy * c2x
                if abs(det) <= _PARALLEL_EPS:
                    continue
                x = (e * c2y - cy * e2) / det
                y = (cx * e2 - e * c2x) / det
                best, bx, by = _consider(P, D, m, radius, prefx, prefy,
                                         x, y, best, bx, by)
    return bx, by


@njit(cache=True)
def _safe_velocity(P, D, m, radius, prefx, prefy):
    """Returns (x, y, infeasible)."""
    ok, x, y = _lp2(P, D, m, radius, prefx, prefy)
    if ok:
        return x, y, False
    x, y = _fallback(P, D, m, radius, prefx, prefy)
    return x, y, True


@njit(cache=True)
def _avoid_orca(px, py, vx, vy, index, ux, uy, npos, nvel, k, R, tau, v0, dt, P, D):
    """Returns (ux, uy, infeasible)."""
    for m in range(k):
        lx, ly, dx, dy = _orca_line(px, py, vx, vy, npos[m, 0], npos[m, 1],
                                    nvel[m, 0], nvel[m, 1], index, R, tau, dt)
        P[m, 0] = lx
        P[m, 1] = ly
        D[m, 0] = dx
        D[m, 1] = dy
    prefx = vx + dt * ux
    prefy = vy + dt * uy
    sx, sy, infeasible = _safe_velocity(P, D, k, v0, prefx, prefy)
    return (sx - vx) / dt, (sy - vy) / dt, infeasible


def _lines(planes):
    m = len(planes)
    P = np.empty((max(m, 1), 2))
    D = np.empty((max(m, 1), 2))
    for k, hp in enumerate(planes):
        P[k] = hp.point
        D[k] = (hp.normal[1], -hp.normal[0])
    return P, D, m


def orca_halfplane(pos_i, vel_i, pos_j, vel_j, D_s, c_r, dt, index=0):
    """Velocities permitted to agent i when sharing avoidance of j equally.

    `c_r` is the planning horizon in seconds and `D_s` the combined radius.
    Overlapping pairs get a plane that separates them within one step.
    """
    if c_r <= 0 or D_s <= 0:
        raise ValueError("horizon and safety distance must be positive")
    px, py, dx, dy = _orca_line(
        float(pos_i[0]), float(pos_i[1]), float(vel_i[0]), float(vel_i[1]),
        float(pos_j[0]), float(pos_j[1]), float(vel_j[0]), float(vel_j[1]),
        index, float(D_s), float(c_r), float(dt))
    return HalfPlane(np.array([px, py]), np.array([-dy, dx]))


def solve_velocity_lp(query):
    """Closest velocity to `v_pref` inside the speed disc and every plane.

    Planes are inserted in list order; an empty intersection falls back to
    :func:`fallback_safest`.
    """
    if query.speed_cap <= 0:
        raise ValueError("speed_cap must be positive")
    P, D, m = _lines(query.planes)
    v = np.asarray(query.v_pref, dtype=float)
    x, y, _ = _safe_velocity(P, D, m, float(query.speed_cap), v[0], v[1])
    return np.array([x, y])


def fallback_safest(query):
    """Velocity in the speed disc minimizing the worst plane violation."""
    P, D, m = _lines(query.planes)
    v = np.asarray(query.v_pref, dtype=float)
    if m == 0:
        x, y = v
        n = math.hypot(x, y)
        cap = query.speed_cap
        return v * cap / n if n > cap else v.copy()
    x, y = _fallback(P, D, m, float(query.speed_cap), v[0], v[1])
    return np.array([x, y])


def avoid_orca(req, D_s=None, diagnostics=None):
    """Acceleration that reaches the ORCA-safe velocity in one step."""
    p = req.params
    D_s = p.D_s if D_s is None else D_s
    npos, nvel, k = req.arrays()
    P = np.empty((max(k, 1), 2))
    D = np.empty((max(k, 1), 2))
    ux, uy, infeasible = _avoid_orca(
        req.pos[0], req.pos[1], req.vel[0], req.vel[1], req.index,
        req.u_des[0], req.u_des[1], npos, nvel, k, D_s, p.c_r, p.v0,
        float(req.dt), P, D)
    if diagnostics is not None:
        diagnostics["infeasible"] = diagnostics.get("infeasible", 0) + int(infeasible)
    return np.array([ux, uy])
