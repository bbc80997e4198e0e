"""Grid dynamic programming for the collective savings problem."""

from .bellman import BellmanProblem, Interpolant, SmoothReward, golden_max, make_grid, value_iteration
from .nsf import PolicyTable, SolverConfig, solve_nsf, stationary_tail
from .oracles import (
    brock_mirman_path,
    brock_mirman_policy,
    brock_mirman_steady_state,
    log_savings_rates,
    log_savings_rates_recursive,
    log_tail_recursive,
)
from .simulate import ReplanReport, TrajectoryRecord, euler_residual, replan_check, simulate_path
