"""
Two agents on a collision course
================================

Two agents of radius 0.15 fly head-on at the set-point speed. We run the
same encounter with each avoidance strategy and report the closest
approach. The safety distance is D_s = 2.1 r = 0.315; the pair is
destroyed (and respawned) if they get closer than 2r = 0.3.
"""
from ringswarm import SimConfig, SwarmParams, run
from ringswarm.cbc import cbc_min_sensing_radius

v0 = 0.12
head_on = ([(-1.5, 0.0), (1.5, 0.0)], [(v0, 0.0), (-v0, 0.0)])

# CBC needs a sensing radius large enough to brake in time
l_r = cbc_min_sensing_radius(1.0, 0.6, 2 * v0, 0.315)
print(f"CBC sensing radius bound at c_r=1: {l_r:.3f}")

for strategy, c_r in [("none", 0.0), ("potential", 0.5), ("gyro", 0.5),
                      ("cbc", 1.0), ("orca", 2.0)]:
    p = SwarmParams(N=2, r=0.15, l_r=max(l_r, 1.0), c_r=c_r)
    s = run(SimConfig(p, strategy, seed=0, t_total=100.0, t_measure=0.0),
            initial_state=head_on)
    print(f"{strategy:>9}: closest approach {s.diagnostics['min_pair_distance']:.4f}, "
          f"collisions {s.collisions}")
