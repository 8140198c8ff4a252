"""Delayed-attraction ring swarm simulator with four collision avoidance
strategies, ring-quality metrics and a parameter sweep harness."""
from .core import DelayBuffer, NeighborView, SwarmParams, desired_control, neighbor_set
from .engine import (MetricsSeries, SimConfig, SimulationError, compute_dt,
                     detect_and_respawn, init_spiral, run)
from .metrics import metrics_step, ring_quality
from .sweep import (SweepSpec, average_over_lr, flatten_best_cr, load_spec, run_sweep,
                    scaling_study)

__version__ = "0.1.0"
