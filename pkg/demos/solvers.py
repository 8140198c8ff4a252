"""
The two small optimizers behind CBC and ORCA
============================================

CBC turns each neighbor into a linear constraint on the acceleration and
finds the admissible input closest to the desired one inside a box. ORCA
turns each neighbor into a half-plane of velocities and finds the
admissible velocity closest to the preferred one inside a disc; when no
such velocity exists it minimizes the worst violation instead.
"""
import numpy as np

from ringswarm.cbc import LinearConstraint, QPProblem, barrier_terms, cbc_constraint, solve_qp
from ringswarm.orca import HalfPlane, VelocityQuery, fallback_safest, orca_halfplane, solve_velocity_lp

# a neighbor 1 m ahead closing at 0.24 m/s
pair = barrier_terms((0, 0), (0.12, 0), (1, 0), (-0.12, 0), 0.6, 0.315)
row = cbc_constraint(pair, 1.0, 0.6, 0.315)
print(f"barrier h = {pair.h:.4f}, constraint a = {row.a.round(4)}, b = {row.b:.4f}")
u = solve_qp(QPProblem(np.array([0.01, 0.0]), [row], 0.6))
print(f"desired (0.01, 0) becomes {u.round(5)}")

# the velocity half-plane for the same encounter with a 10 s horizon
plane = orca_halfplane((0, 0), (0.12, 0), (1, 0), (-0.12, 0), 0.315, 10.0, 0.015)
print(f"ORCA plane through {plane.point.round(4)} with normal {plane.normal.round(4)}")
v = solve_velocity_lp(VelocityQuery((0.12, 0), [plane], 0.12))
print(f"preferred (0.12, 0) becomes {v.round(5)}")

# two contradictory planes: the fallback splits the difference
planes = [HalfPlane((0.05, 0), (1, 0)), HalfPlane((-0.05, 0), (-1, 0))]
print("fallback:", fallback_safest(VelocityQuery((0.03, 0.02), planes, 0.12)))
