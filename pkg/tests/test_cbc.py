import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from oracles import qp_grid_oracle, random_feasible_qp
from ringswarm.cbc import (B_CLAMP, LinearConstraint, QPInfeasible, QPProblem, avoid_cbc,
                           barrier_terms, cbc_constraint, cbc_min_sensing_radius, solve_qp)
from ringswarm.core import SwarmParams
from ringswarm.field import AvoidanceRequest

A_MAX, D_S = 0.6, 0.315


def barrier(dp, dv, a_max=A_MAX, D_s=D_S):
    d = np.linalg.norm(dp)
    return 1.0 / (dp @ dv / d + math.sqrt(4 * a_max * (d - D_s)))


def test_barrier_hand_example():
    pair = barrier_terms((3, 0), (-1, 0), (0, 0), (0, 0), A_MAX, D_S)
    assert pair.h == pytest.approx(-1 + math.sqrt(6.444), rel=1e-14)
    assert pair.h == pytest.approx(1.5385, abs=1e-4)
    assert pair.B == pytest.approx(0.6500, abs=1e-4)
    assert not pair.breached


def test_barrier_stationary_pair_is_safe():
    pair = barrier_terms((3, 0), (0, 0), (0, 0), (0, 0), A_MAX, D_S)
    assert pair.h == pytest.approx(math.sqrt(4 * A_MAX * (3 - D_S)))
    assert pair.h > 0


def test_barrier_on_boundary():
    pair = barrier_terms((D_S, 0), (0.2, 0), (0, 0), (0, 0), A_MAX, D_S)
    assert pair.h == pytest.approx(0.2)
    assert pair.breached
    inside = barrier_terms((0.1, 0), (0, 0), (0, 0), (0, 0), A_MAX, D_S)
    assert inside.breached and math.isnan(inside.h)


def test_constraint_stationary_pair_admits_zero():
    pair = barrier_terms((1, 0.5), (0, 0), (0, 0), (0, 0), A_MAX, D_S)
    con = cbc_constraint(pair, 2.0, A_MAX, D_S)
    assert con.b == pytest.approx(pair.h ** 3 / 2.0)
    assert con.b >= 0


def test_constraint_separating_pair_is_inactive():
    pair = barrier_terms((5, 0), (1, 0), (0, 0), (0, 0), A_MAX, D_S)
    con = cbc_constraint(pair, 1.0, A_MAX, D_S)
    worst = A_MAX * np.abs(con.a).sum()  # max of a.u over the box
    assert con.b > 10 * worst


def test_constraint_symbolic_derivation():
    px, py, vx, vy, ux, uy, t = sp.symbols("px py vx vy ux uy t", real=True)
    a, Ds, c = sp.symbols("a D_s c", positive=True)
    # relative motion with the neighbor holding its velocity
    dp = sp.Matrix([px + vx * t + ux * t ** 2 / 2, py + vy * t + uy * t ** 2 / 2])
    dv = sp.Matrix([vx + ux * t, vy + uy * t])
    d = sp.sqrt(dp.dot(dp))
    h = dp.dot(dv) / d + sp.sqrt(4 * a * (d - Ds))
    hdot = sp.diff(h, t).subs(t, 0)
    h0 = h.subs(t, 0)
    # hdot >= -h^3/c  <=>  -(d hdot / du) . u <= h^3/c + (hdot at u = 0)
    coeff = [sp.diff(hdot, ux), sp.diff(hdot, uy)]
    rest = hdot.subs({ux: 0, uy: 0})
    f = sp.lambdify((px, py, vx, vy, a, Ds, c), (-coeff[0], -coeff[1], h0 ** 3 / c + rest))
    rng = np.random.default_rng(7)
    for _ in range(50):
        dpv = rng.uniform(-3, 3, 2)
        if np.linalg.norm(dpv) < 0.5:
            continue
        dvv = rng.normal(size=2)
        cr = 10 ** rng.uniform(-3, 3)
        ax, ay, b = f(*dpv, *dvv, A_MAX, D_S, cr)
        con = cbc_constraint(barrier_terms(dpv, dvv, (0, 0), (0, 0), A_MAX, D_S), cr, A_MAX, D_S)
        np.testing.assert_allclose(con.a, [ax, ay], rtol=1e-12, atol=1e-14)
        assert con.b == pytest.approx(b, rel=1e-10, abs=1e-12)


def test_constraint_matches_finite_difference_of_barrier():
    rng = np.random.default_rng(11)
    h_step = 1e-6
    for _ in range(100):
        dp = rng.uniform(-3, 3, 2)
        if np.linalg.norm(dp) < 0.6:
            dp = dp / np.linalg.norm(dp) * 0.6
        dv = rng.normal(scale=0.3, size=2)
        u = rng.uniform(-A_MAX, A_MAX, 2)
        c_r = 10 ** rng.uniform(-2, 2)
        pair = barrier_terms(dp, dv, (0, 0), (0, 0), A_MAX, D_S)
        con = cbc_constraint(pair, c_r, A_MAX, D_S)

        def B_at(s):
            return barrier(dp + s * dv + 0.5 * s * s * u, dv + s * u)

        fd = (B_at(h_step) - B_at(-h_step)) / (2 * h_step)
        hdot = -(con.a @ u) + con.b - pair.h ** 3 / c_r
        predicted = -hdot / pair.h ** 2
        assert abs(fd - predicted) <= 1e-4 * abs(predicted) + 1e-9


def test_cautiousness_enters_only_through_cubic_term():
    pair = barrier_terms((1.2, -0.4), (-0.2, 0.1), (0, 0), (0, 0), A_MAX, D_S)
    b1 = cbc_constraint(pair, 1.0, A_MAX, D_S).b
    b_inf = cbc_constraint(pair, 1e300, A_MAX, D_S).b
    assert b1 - b_inf == pytest.approx(pair.h ** 3, rel=1e-12)


def test_constraint_clamps_near_barrier():
    dp = np.array([np.nextafter(D_S, 1.0), 0.0])
    pair = barrier_terms(dp, (-1e5, 0.0), (0, 0), (0, 0), A_MAX, D_S)
    con = cbc_constraint(pair, 1.0, A_MAX, D_S)
    assert con.clamped and con.b == -B_CLAMP


def test_qp_examples():
    np.testing.assert_array_equal(solve_qp(QPProblem((0.1, 0.2), [], 0.6)), [0.1, 0.2])
    out = solve_qp(QPProblem((0.5, 0.3), [LinearConstraint((1, 0), 0)], 1))
    np.testing.assert_allclose(out, [0, 0.3], atol=1e-15)
    with pytest.raises(QPInfeasible):
        solve_qp(QPProblem((0, 0), [LinearConstraint((1, 0), -2), LinearConstraint((-1, 0), -2)], 5))


def test_qp_box_projection():
    np.testing.assert_allclose(solve_qp(QPProblem((2.0, -3.0), [], 0.6)), [0.6, -0.6])


def test_qp_degenerate_rows():
    assert np.allclose(solve_qp(QPProblem((0.1, 0), [LinearConstraint((0, 0), 1)], 1)), [0.1, 0])
    with pytest.raises(QPInfeasible):
        solve_qp(QPProblem((0.1, 0), [LinearConstraint((0, 0), -1)], 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_qp_matches_grid_oracle(seed, m):
    rng = np.random.default_rng(seed)
    box = 0.3
    target, A, b = random_feasible_qp(rng, m, box)
    u = solve_qp(QPProblem(target, [LinearConstraint(a, bb) for a, bb in zip(A, b)], box))
    g = qp_grid_oracle(target, A, b, box, step=2e-3)
    assert np.all(A @ u <= b + 1e-9 * (1 + np.abs(b)))
    assert np.max(np.abs(u)) <= box + 1e-12
    assert np.linalg.norm(u - target) <= np.linalg.norm(g - target) + 1e-12
    assert np.linalg.norm(u - g) <= 2e-3


def test_qp_infeasible_polygon():
    # three half-planes whose intersection is empty inside the box
    cons = [LinearConstraint((1, 1), -0.5), LinearConstraint((-1, 0), -0.2),
            LinearConstraint((0, -1), -0.2)]
    with pytest.raises(QPInfeasible):
        solve_qp(QPProblem((0, 0), cons, 1.0))


def req(u, pos, vel, nbrs, c_r=1.0, l_r=2.0):
    return AvoidanceRequest(u, pos, vel, nbrs, SwarmParams(r=0.15, c_r=c_r, l_r=l_r, a_max=A_MAX))


def test_avoid_cbc_no_neighbors_passes_through():
    np.testing.assert_array_equal(avoid_cbc(req((0.01, -0.02), (0, 0), (0.1, 0), [])),
                                  [0.01, -0.02])


def test_avoid_cbc_brakes_when_infeasible():
    diag = {}
    out = avoid_cbc(req((0.0, 0.0), (0, 0), (0.05, 0.0), [((0.4, 0.0), (-1.0, 0.0))]),
                    diagnostics=diag)
    np.testing.assert_array_equal(out, [-0.05, 0.0])
    assert diag["infeasible"] == 1 and diag["brake"] == 1


def test_avoid_cbc_brakes_inside_safety_distance():
    diag = {}
    out = avoid_cbc(req((0.1, 0.0), (0, 0), (0.1, 0.2), [((0.3, 0.0), (0.0, 0.0))]),
                    diagnostics=diag)
    np.testing.assert_array_equal(out, [-0.1, -0.2])
    assert diag["breach"] == 1 and diag["infeasible"] == 0


def test_avoid_cbc_distant_slow_neighbor_is_inactive():
    nbrs = [((1.8, 0.3), (-0.01, 0.0))]
    r = req((0.0012, -0.0004), (0, 0), (0.12, 0), nbrs)
    pair = barrier_terms((0, 0), (0.12, 0), *nbrs[0], A_MAX, D_S)
    con = cbc_constraint(pair, 1.0, A_MAX, D_S)
    assert con.b > A_MAX * np.abs(con.a).sum()
    np.testing.assert_array_equal(avoid_cbc(r), [0.0012, -0.0004])


def test_avoid_cbc_head_on_is_corrected_to_equality():
    nbrs = [((1.0, 0.0), (-0.12, 0.0))]
    u_des = np.array([0.05, 0.0])
    r = req(u_des, (0, 0), (0.12, 0), nbrs, c_r=100.0)
    pair = barrier_terms((0, 0), (0.12, 0), *nbrs[0], A_MAX, D_S)
    con = cbc_constraint(pair, 100.0, A_MAX, D_S)
    assert con.a @ u_des > con.b  # desired input violates the constraint
    out = avoid_cbc(r)
    assert con.a @ out == pytest.approx(con.b, abs=1e-12)
    assert out[0] < 0  # braking along the line of approach


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_avoid_cbc_minimally_invasive(seed):
    rng = np.random.default_rng(seed)
    pos = np.zeros(2)
    vel = rng.normal(scale=0.1, size=2)
    nbrs = [(rng.uniform(-2, 2, 2), rng.normal(scale=0.1, size=2)) for _ in range(rng.integers(1, 5))]
    nbrs = [(p, v) for p, v in nbrs if np.linalg.norm(p) > 0.5]
    u = rng.uniform(-0.3, 0.3, 2)
    cons = [cbc_constraint(barrier_terms(pos, vel, p, v, A_MAX, D_S), 1.0, A_MAX, D_S)
            for p, v in nbrs]
    if all(c.a @ u <= c.b for c in cons):
        np.testing.assert_array_equal(avoid_cbc(req(u, pos, vel, nbrs)), u)


def test_min_sensing_radius():
    assert cbc_min_sensing_radius(1.0, 0.6, 0.24, 0.315) == pytest.approx(1.694, abs=1e-3)
    expected = 0.315 + (np.cbrt(2.4) + 0.48) ** 2 / 2.4
    assert cbc_min_sensing_radius(1.0, 0.6, 0.24, 0.315) == pytest.approx(expected, rel=1e-15)
    assert cbc_min_sensing_radius(1e-18, 0.6, 0.24, 0.315) == pytest.approx(
        0.315 + 0.24 ** 2 / 0.6, rel=1e-5)
    vals = [cbc_min_sensing_radius(c, 0.6, 0.24, 0.315) for c in np.logspace(-5, 5, 50)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
