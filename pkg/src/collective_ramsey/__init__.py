"""Collective consumption-saving with heterogeneous discounting and time-varying Pareto weights."""

from .prefs_tech import LtcfParams, Technology, ltcf_marginal, ltcf_utility, tcf_individual, technology_eval
from .weights import (
    DiscountProfile,
    discount_sequences,
    effective_mu,
    effective_weights,
    mu,
    update_weights,
    weights_at,
)
from .sharing import (
    SharingOutcome,
    aggregate_utility,
    nonstationary_utility,
    reduced_utility_uhat,
    sharing_rule,
    static_oracle,
    tcf_aggregate,
)
from .solver import PolicyTable, SolverConfig, TrajectoryRecord, euler_residual, replan_check, simulate_path, solve_nsf
from .axioms import AxiomVerdict, TemporalPayment, check_axioms, impatience_gap, marginal_impatience_profile, mrs, pure_rate
from .constweights import (
    ConstWeightConfig,
    LpSolution,
    continuation_lp,
    dictator_solve,
    egalitarian_solve,
    inconsistency_witness,
    sharing_ratio_condition,
)

__version__ = "0.1.0"
