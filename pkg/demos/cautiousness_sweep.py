"""
Tuning cautiousness
===================

Each strategy has one knob c_r. Too little and agents collide, too much
and they never settle into a ring. A sweep runs every (r, l_r, c_r) cell
over several seeds, then keeps the best c_r per (r, l_r) and averages over
l_r to see how ring quality depends on agent size.

The horizons here are far shorter than a real study so the script finishes
in well under a minute.
"""
from ringswarm import SimConfig, SwarmParams, SweepSpec, average_over_lr, flatten_best_cr, run_sweep
from ringswarm.sweep import axis_grid

base = SimConfig(SwarmParams(N=10), strategy="orca", seed=0, t_total=2500.0, t_measure=500.0)
spec = SweepSpec(base, {"r": [0.02, 0.15], "l_r": [0.5, 1.0],
                        "c_r": axis_grid(0.1, 10.0, 4, "log")}, seeds=[0, 1])
result = run_sweep(spec, workers=2, checkpoint="sweep_checkpoint.jsonl")
result.write("sweep_out")

for row in flatten_best_cr(result):
    print(f"r={row['r']:<5} l_r={row['l_r']:<4} best lambda {row['best_lambda']:.3f} "
          f"at c_r={row['best_c_r']:.3g}")
for row in average_over_lr(flatten_best_cr(result)):
    print(f"r={row['r']:<5} lambda averaged over l_r: {row['mean_lambda']:.3f}")
