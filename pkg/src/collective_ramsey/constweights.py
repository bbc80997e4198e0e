"""Benchmark regime with constant Pareto weights.

With weights frozen at ``theta_bar`` the planner's aggregate problem is
stationary only under special discounting assumptions. This module solves
the averaged-discount (egalitarian) problem, the continuation-utility linear
program whose solutions are vertices of a box (one agent's discount factor
governs), the associated single-discount dynamic programs, and builds a
re-planning witness showing that a constant-weight plan is not carried out
by the planner's future selves.

Agent indices passed to and returned from this module are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.optimize import linprog

from .errors import InteriorityError, SolverError
from .prefs_tech import LtcfParams, ltcf_marginal, ltcf_marginal_inverse, utility_unchecked
from .sharing import sharing_rule
from .solver.bellman import BellmanProblem, Interpolant, SmoothReward, value_iteration
from .solver.nsf import SolverConfig, _raw_reward, solve_nsf
from .solver.simulate import compare_paths, simulate_path
from .weights import as_weights, weights_at

DEFAULT_HORIZON = 60


@dataclass(frozen=True)
class ConstWeightConfig:
    """Constant weights, continuation-utility bounds and the shared solver settings.

    ``z_bounds`` gives the upper end of each agent's interval ``[0, z_m]``;
    ``None`` derives it from each agent's own stationary problem
    (:func:`default_z_bounds`).
    """

    theta_bar: np.ndarray
    solver: SolverConfig
    z_bounds: np.ndarray | None = None

    def __post_init__(self):
        theta = as_weights(self.theta_bar)
        if theta.size != self.solver.n:
            raise ValueError(f"theta_bar has {theta.size} entries but there are {self.solver.n} agents")
        object.__setattr__(self, "theta_bar", theta)
        if self.z_bounds is not None:
            z = np.asarray(self.z_bounds, dtype=float)
            if z.shape != theta.shape or np.any(~(z > 0)):
                raise ValueError(f"z_bounds must be {theta.size} positive numbers, got {self.z_bounds}")
            object.__setattr__(self, "z_bounds", z)

    @property
    def n(self) -> int:
        return self.solver.n

    @property
    def delta(self) -> np.ndarray:
        return self.solver.discount.delta

    @property
    def average_discount(self) -> float:
        return float(self.theta_bar @ self.delta)


@dataclass
class StationarySolution:
    """Solution of a stationary Bellman equation on the solver grid."""

    grid: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    discount: float
    history: list
    problem: BellmanProblem = field(repr=False)
    reward: object = field(repr=False)
    interp: str = "cubic"
    transfer: float = 0.0

    def next_capital(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        _, y = self.problem.maximize(k, self.reward, Interpolant(self.grid, self.values, self.interp), self.discount)
        return y

    def capital_path(self, k0: float, T: int) -> np.ndarray:
        k = np.empty(T + 1)
        k[0] = k0
        for t in range(T):
            k[t + 1] = self.next_capital(k[t])[0]
        return k

    def contraction_ratios(self, floor: float = 1e-8) -> np.ndarray:
        """Ratios of successive sup-norm changes while both exceed ``floor``."""
        h = np.asarray(self.history)
        ok = (h[:-1] > floor) & (h[1:] > floor)
        return h[1:][ok] / h[:-1][ok]


def _stationary(cfg: SolverConfig, reward, discount: float, howard: int, transfer: float = 0.0,
                reward_key=None) -> StationarySolution:
    problem = cfg.problem()
    v, pol, hist = value_iteration(problem, reward, discount, kind=cfg.interp, tol=cfg.tolerance,
                                   howard=howard, reward_key=reward_key)
    return StationarySolution(problem.grid, v, pol, discount, hist, problem, reward, cfg.interp, transfer)


def _aggregate_reward(cfg: ConstWeightConfig, transfer: float = 0.0):
    base = _raw_reward(cfg.theta_bar, cfg.solver.prefs, cfg.solver.group_prefs.lower_bound)
    if transfer == 0.0:
        return base
    return SmoothReward(lambda c: base(c) + transfer, base.grad)


def egalitarian_solve(cfg: ConstWeightConfig, howard: int = 0) -> StationarySolution:
    """Stationary problem with reward ``U(., theta_bar)`` and the weight-averaged discount factor.

    Plain value iteration by default so that :meth:`StationarySolution.contraction_ratios`
    measures the Bellman contraction itself.
    """
    return _stationary(cfg.solver, _aggregate_reward(cfg), cfg.average_discount, howard)


def _check_agent(i: int, n: int):
    if not 1 <= i <= n:
        raise ValueError(f"agent index must be in 1..{n}, got {i}")


def dictator_solve(i: int, cfg: ConstWeightConfig, include_transfer: bool = False,
                   z_star=None, howard: int = 30) -> StationarySolution:
    """Stationary problem with reward ``U(., theta_bar)`` discounted at agent ``i``'s factor.

    The lump-sum transfer ``sum_{j<i} theta_bar^j delta^j z^j`` owed to the
    more patient agents is stored on the result. With ``include_transfer``
    it is also added to every period's reward; being a constant it shifts
    the values but leaves the policy alone.
    """
    _check_agent(i, cfg.n)
    transfer = 0.0
    if include_transfer or z_star is not None:
        z = continuation_lp(cfg, i).z_star if z_star is None else np.asarray(z_star, dtype=float)
        transfer = float(np.sum((cfg.theta_bar * cfg.delta * z)[: i - 1]))
    reward = _aggregate_reward(cfg, transfer if include_transfer else 0.0)
    sol = _stationary(cfg.solver, reward, float(cfg.delta[i - 1]), howard)
    sol.transfer = transfer
    return sol


def default_z_bounds(solver: SolverConfig, howard: int = 30) -> np.ndarray:
    """Per-agent utility ranges ``J_i(k_max) - J_i(k_min)``.

    ``J_i`` is the value of agent ``i`` owning the whole economy with its own
    utility and discount factor. Measured from the poorest grid state so the
    bound is positive even when utility levels are negative.
    """
    p = solver.prefs
    reward = SmoothReward(partial(utility_unchecked, p=p), partial(ltcf_marginal, p=p))
    out = np.empty(solver.n)
    for idx, delta in enumerate(solver.discount.delta):
        problem = BellmanProblem(solver.grid(), solver.tech.output, p.lower_bound, solver.threads)
        v, _, _ = value_iteration(problem, reward, float(delta), kind=solver.interp,
                                  tol=solver.tolerance, howard=howard)
        out[idx] = v[-1] - v[0]
    return out


@dataclass(frozen=True)
class LpSolution:
    """Optimal continuation utilities for a pivot agent.

    ``active_agents`` lists (1-based) agents with positive continuation
    utility. ``degenerate`` marks a flat direction among the more patient
    agents, resolved by the all-zero tie-break.
    """

    pivot: int
    z_star: np.ndarray
    objective: float
    coefficients: np.ndarray
    active_agents: tuple
    dictatorial: bool
    degenerate: bool


def lp_coefficients(theta_bar, delta, i: int) -> np.ndarray:
    """``theta_bar^j (delta^j - delta^i)`` for agents ``j < i``, zero for the rest."""
    theta_bar = np.asarray(theta_bar, dtype=float)
    delta = np.asarray(delta, dtype=float)
    c = theta_bar * (delta - delta[i - 1])
    c[i - 1 :] = 0.0
    return c


def continuation_lp(cfg: ConstWeightConfig, i: int) -> LpSolution:
    """Maximise ``sum_{j<i} theta_bar^j (delta^j - delta^i) z^j`` over the box ``[0, z_m]``.

    Solved with a general LP solver and cross-checked against the vertex
    picked by the coefficient signs. Zero coefficients are resolved to
    ``z = 0``.
    """
    _check_agent(i, cfg.n)
    z_m = cfg.z_bounds if cfg.z_bounds is not None else default_z_bounds(cfg.solver)
    coef = lp_coefficients(cfg.theta_bar, cfg.delta, i)
    res = linprog(-coef, bounds=list(zip(np.zeros(cfg.n), z_m)), method="highs")
    if res.status != 0:
        raise SolverError(f"continuation LP failed: {res.message}")
    z = np.where(coef > 0, res.x, 0.0)
    vertex = np.where(coef > 0, z_m, 0.0)
    if np.max(np.abs(z - vertex)) > 1e-9 * max(1.0, float(np.max(z_m))):
        raise SolverError(f"LP solution {z} disagrees with the sign-pattern vertex {vertex}")
    z = vertex
    degenerate = bool(np.any(coef[: i - 1] == 0.0))
    active = tuple(int(j) + 1 for j in np.flatnonzero(z > 0))
    return LpSolution(i, z, float(coef @ z), coef, active, not degenerate, degenerate)


def sharing_ratio_condition(t, i: int, j: int, theta_bar, d, x_bar_i, p: LtcfParams) -> float:
    """Agent ``j``'s consumption implied by agent ``i``'s under constant weights.

    Solves ``theta^j delta_j^t u'(x^j) = theta^i delta_i^t u'(x^i)`` through
    the closed-form inverse of ``u'``; meant for a more patient ``j < i``.
    Raises :class:`InteriorityError` when the solution leaves the domain.
    """
    theta_bar = np.asarray(theta_bar, dtype=float)
    n = theta_bar.size
    _check_agent(i, n)
    _check_agent(j, n)
    log_ratio = (np.log(theta_bar[i - 1]) - np.log(theta_bar[j - 1])
                 + t * (d.log_delta[i - 1] - d.log_delta[j - 1]))
    m = np.exp(log_ratio) * ltcf_marginal(x_bar_i, p)
    x_j = float(ltcf_marginal_inverse(m, p))
    if not (x_j > p.lower_bound and x_j >= 0.0):
        raise InteriorityError(f"agent {j} would need {x_j:.6g}, outside the admissible range", [j - 1])
    return x_j


@dataclass(frozen=True)
class WitnessReport:
    """Comparison of a constant-weight plan with its re-plan from ``t_prime``.

    ``divergence`` is the larger of the capital and individual-consumption
    gaps; ``first_disagreement`` is the first period where either exceeds
    ``tol``.
    """

    recipe: str
    pivot: int | None
    t_prime: int
    divergence: float
    k_divergence: float
    share_divergence: float
    first_disagreement: int | None
    original_k: np.ndarray
    replanned_k: np.ndarray


def _constant_weight_shares(x, theta_bar, d, p, start: int):
    # weights that keep theta_bar^j delta_j^t u'(x^j) equal across agents, clock started at `start`
    rows = [sharing_rule(x[s], weights_at(theta_bar, d, start + s), p).shares for s in range(x.size)]
    return np.vstack(rows)


def inconsistency_witness(cfg: ConstWeightConfig, k0: float | None = None, t_prime: int = 10,
                          T: int = DEFAULT_HORIZON, pivot: int | None = None, recipe: str = "pivot",
                          tol: float = 1e-6) -> WitnessReport:
    """Plan under constant weights at date 0, re-plan at ``t_prime``, report the gap.

    ``recipe='pivot'``: aggregates follow agent ``pivot``'s discounting (default
    the least patient) and individual consumption satisfies the sharing-ratio
    condition with the clock at date 0. The re-planner faces the same
    stationary aggregate problem but restarts the clock, so each agent's
    consumption is re-based.

    ``recipe='commitment'``: the date-0 plan is the efficient plan from
    weights ``theta_bar``; the re-planner again applies ``theta_bar`` at
    ``t_prime`` instead of the weights the date-0 plan has moved to.
    """
    solver = cfg.solver
    d = solver.discount
    p = solver.prefs
    k0 = 0.1 * solver.tech.k_max if k0 is None else k0
    if not 0 < t_prime < T:
        raise ValueError(f"need 0 < t_prime < T, got {t_prime}, {T}")

    if recipe == "pivot":
        pivot = cfg.n if pivot is None else pivot
        sol = dictator_solve(pivot, cfg)
        k = sol.capital_path(k0, T + 1)
        x = solver.tech.output(k[:-1]) - k[1:]
        shares = _constant_weight_shares(x, cfg.theta_bar, d, p, 0)
        k_re = sol.capital_path(float(k[t_prime]), T + 1 - t_prime)
        x_re = solver.tech.output(k_re[:-1]) - k_re[1:]
        shares_re = _constant_weight_shares(x_re, cfg.theta_bar, d, p, 0)
        k_orig = k[t_prime:]
        share_gap = np.max(np.abs(shares[t_prime:] - shares_re), axis=1)
    elif recipe == "commitment":
        pivot = None
        base = solver.replace(theta0=cfg.theta_bar, T=T)
        traj = simulate_path(k0, solve_nsf(base), base)
        re_cfg = base.replace(T=T - t_prime)
        again = simulate_path(float(traj.k[t_prime]), solve_nsf(re_cfg), re_cfg)
        k_orig, k_re = traj.k[t_prime:], again.k
        share_gap = np.max(np.abs(traj.shares[t_prime:] - again.shares), axis=1)
    else:
        raise ValueError(f"unknown recipe {recipe!r}")

    k_rep = compare_paths(k_orig, k_re, t_prime, tol)
    # capital paths carry one more entry (the final choice) than consumption paths
    gap = np.abs(k_orig - k_re)
    gap[: share_gap.size] = np.maximum(gap[: share_gap.size], share_gap)
    over = np.flatnonzero(gap > tol)
    first = int(t_prime + over[0]) if over.size else None
    share_div = float(np.max(share_gap))
    return WitnessReport(recipe, pivot, t_prime, max(k_rep.divergence, share_div), k_rep.divergence,
                         share_div, first, k_orig, k_re)


@dataclass(frozen=True)
class PivotRow:
    pivot: int
    lp: LpSolution
    witness: WitnessReport


def pivot_sweep(cfg: ConstWeightConfig, k0: float | None = None, t_prime: int = 10,
                T: int = DEFAULT_HORIZON) -> list[PivotRow]:
    """LP solution and re-planning witness for every choice of pivot agent."""
    if cfg.z_bounds is None:
        cfg = ConstWeightConfig(cfg.theta_bar, cfg.solver, default_z_bounds(cfg.solver))
    return [
        PivotRow(i, continuation_lp(cfg, i), inconsistency_witness(cfg, k0, t_prime, T, pivot=i))
        for i in range(1, cfg.n + 1)
    ]


__all__ = [
    "ConstWeightConfig",
    "LpSolution",
    "PivotRow",
    "StationarySolution",
    "WitnessReport",
    "continuation_lp",
    "default_z_bounds",
    "dictator_solve",
    "egalitarian_solve",
    "inconsistency_witness",
    "lp_coefficients",
    "pivot_sweep",
    "sharing_ratio_condition",
]
