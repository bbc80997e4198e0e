"""Backward induction for the nonstationary collective savings problem.

The effective formulation maximises ``sum_t betahat_t * Uhat(x_t)``; in
current-value form the period-t Bellman equation is

    V_t(k) = max_y Uhat(f(k) - y) + muhat_t * V_{t+1}(y),

with ``muhat_t = betahat_{t+1} / betahat_t``. The raw formulation uses the
weighted aggregate ``U(., theta_t)`` and ``mu_t`` instead; both give the same
policies. The infinite horizon is truncated at ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np
from scipy.special import xlogy

from ..errors import SolverError
from ..prefs_tech import LOG, LtcfParams, Technology, ltcf_marginal, utility_unchecked
from ..sharing import aggregate_marginal, aggregate_utility
from ..weights import DiscountProfile, as_weights, discount_sequences, weights_path
from .bellman import BellmanProblem, Interpolant, SmoothReward, make_grid, value_iteration

TAIL_MODES = ("dictator", "zero")
FORMULATIONS = ("effective", "raw")


@dataclass(frozen=True)
class SolverConfig:
    prefs: LtcfParams
    tech: Technology
    discount: DiscountProfile
    theta0: np.ndarray
    grid_size: int = 512
    k_min: float | None = None
    T: int = 100
    tail_mode: str = "dictator"
    tolerance: float = 1e-10
    interp: str = "cubic"
    spacing: str = "log"
    threads: int = 1

    def __post_init__(self):
        theta0 = as_weights(self.theta0)
        if theta0.size != self.discount.n:
            raise ValueError(f"theta0 has {theta0.size} entries but there are {self.discount.n} agents")
        object.__setattr__(self, "theta0", theta0)
        if self.discount.gamma != self.prefs.gamma:
            object.__setattr__(self, "discount", self.discount.with_gamma(self.prefs.gamma))
        if self.grid_size < 64:
            raise ValueError(f"grid_size must be at least 64, got {self.grid_size}")
        if self.T < 10:
            raise ValueError(f"horizon T must be at least 10, got {self.T}")
        if self.tail_mode not in TAIL_MODES:
            raise ValueError(f"tail_mode must be one of {TAIL_MODES}, got {self.tail_mode!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.k_min is not None and not 0 < self.k_min < self.tech.k_max:
            raise ValueError(f"k_min must lie in (0, k_max={self.tech.k_max}), got {self.k_min}")

    @property
    def n(self) -> int:
        return self.discount.n

    @property
    def k_lo(self) -> float:
        return self.k_min if self.k_min is not None else 1e-3 * self.tech.k_max

    @property
    def group_prefs(self) -> LtcfParams:
        """Preferences of the weight-free group utility (shift ``phi * n``)."""
        return self.prefs.shifted(self.n)

    def grid(self) -> np.ndarray:
        return make_grid(self.k_lo, self.tech.k_max, self.grid_size, self.spacing)

    def problem(self) -> BellmanProblem:
        return BellmanProblem(self.grid(), self.tech.output, self.group_prefs.lower_bound, self.threads)

    def replace(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class PolicyTable:
    """Per-period value samples and savings choices on the capital grid.

    Row ``t`` of ``values`` is the current-value function ``V_t`` (period-t
    units); :attr:`values_period0` rescales to period-0 units. ``ratios[t]``
    is the discount factor applied to ``V_{t+1}`` in period ``t``; for the
    dictator tail ``ratios[T]`` is the most patient agent's factor and the
    period-T continuation is the stationary value itself.
    """

    config: SolverConfig
    formulation: str
    grid: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    ratios: np.ndarray
    beta_scale: np.ndarray
    problem: BellmanProblem = field(repr=False)
    rewards: list = field(repr=False)

    @property
    def T(self) -> int:
        return self.values.shape[0] - 1

    @property
    def consumption(self) -> np.ndarray:
        return self.config.tech.output(self.grid)[None, :] - self.policy

    @property
    def values_period0(self) -> np.ndarray:
        return self.beta_scale[:, None] * self.values

    def continuation(self, t: int) -> Interpolant:
        return Interpolant(self.grid, self.values[min(t + 1, self.T)], self.config.interp)

    def next_capital(self, t: int, k):
        """Optimal next-period capital at arbitrary ``k``, re-optimised off the grid."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        if t == self.T and self.config.tail_mode == "zero":
            return np.zeros_like(k)
        _, y = self.problem.maximize(k, self.rewards[t], self.continuation(t), self.ratios[t])
        return y


def _uhat_reward(prefs: LtcfParams):
    return SmoothReward(partial(utility_unchecked, p=prefs), partial(ltcf_marginal, p=prefs))


def _raw_reward(theta, prefs: LtcfParams, c_floor: float):
    def reward(c):
        c = np.asarray(c, dtype=float)
        ok = c > c_floor
        with np.errstate(divide="ignore", invalid="ignore"):
            val = aggregate_utility(np.where(ok, c, c_floor + 1.0), theta, prefs)
        return np.where(ok, val, -np.inf)

    def grad(c):
        c = np.asarray(c, dtype=float)
        ok = c > c_floor
        with np.errstate(divide="ignore", invalid="ignore"):
            val = aggregate_marginal(np.where(ok, c, c_floor + 1.0), theta, prefs)
        return np.where(ok, val, np.inf)

    return SmoothReward(reward, grad)


def stationary_tail(config: SolverConfig, problem: BellmanProblem | None = None):
    """Stationary value and policy when the most patient agent holds all weight.

    This is the limit of the effective problem as the weights converge to
    the first vertex: reward ``Uhat`` and discount ``delta^1``.
    """
    problem = problem or config.problem()
    v, pol, _ = value_iteration(
        problem, _uhat_reward(config.group_prefs), float(config.discount.delta[0]),
        kind=config.interp, tol=config.tolerance, reward_key=("uhat", config.group_prefs),
    )
    return v, pol


def _raw_tail(v_inf, theta, prefs: LtcfParams, discount: float):
    """Tail value of the raw problem with weights frozen at ``theta``.

    ``U(x, theta) = C (Uhat(x) + g) - g`` with ``C = (sum theta^(1/gamma))^gamma``
    (``Uhat(x) + sum theta log theta`` in the log case), so summing at
    ``discount`` maps the ``Uhat`` tail value affinely.
    """
    if prefs.mode == LOG:
        return v_inf + np.sum(xlogy(theta, theta)) / (1.0 - discount)
    g = prefs.gamma / (1.0 - prefs.gamma)
    conc = np.power(np.power(theta, 1.0 / prefs.gamma).sum(), prefs.gamma)
    return conc * v_inf + g * (conc - 1.0) / (1.0 - discount)


def solve_nsf(config: SolverConfig, formulation: str = "effective", tail=None) -> PolicyTable:
    """Solve the truncated nonstationary problem by backward induction.

    ``formulation='effective'`` uses ``(Uhat, muhat_t)``, ``'raw'`` uses
    ``(U(., theta_t), mu_t)``. ``tail`` optionally supplies a precomputed
    :func:`stationary_tail` result so repeated solves can share it.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"formulation must be one of {FORMULATIONS}")
    T = config.T
    problem = config.problem()
    grid = problem.grid
    out = config.tech.output(grid)
    seq = discount_sequences(config.theta0, config.discount, T=T + 1)
    thetas = weights_path(config.theta0, config.discount, T)
    gp = config.group_prefs

    if formulation == "effective":
        rewards = [_uhat_reward(gp)] * (T + 1)
        ratios = np.append(seq.mu_hat[:T], config.discount.delta[0])
        keys = [("uhat", gp)] * (T + 1)
        scale = seq.beta_hat[: T + 1]
    else:
        rewards = [_raw_reward(th, config.prefs, gp.lower_bound) for th in thetas]
        ratios = np.append(seq.mu[:T], config.discount.delta[0])
        keys = [None] * (T + 1)
        scale = seq.beta[: T + 1]

    values = np.empty((T + 1, grid.size))
    policy = np.empty((T + 1, grid.size))
    if config.tail_mode == "dictator":
        v_inf, pol_inf = tail if tail is not None else stationary_tail(config, problem)
        if formulation == "raw":
            v_inf = _raw_tail(v_inf, thetas[T], config.prefs, float(config.discount.delta[0]))
        values[T], policy[T] = v_inf, pol_inf
    else:
        with np.errstate(divide="ignore"):
            values[T] = rewards[T](out)
        policy[T] = 0.0
        if not np.all(np.isfinite(values[T])):
            raise SolverError("terminal consumption of all output is infeasible at some grid node")

    for t in range(T - 1, -1, -1):
        rows = problem.reward_matrix(rewards[t], key=keys[t])
        cont = Interpolant(grid, values[t + 1], config.interp)
        values[t], policy[t] = problem.maximize(grid, rewards[t], cont, ratios[t], rows)
        if not np.all(np.isfinite(values[t])):
            raise SolverError(f"non-finite value at period {t}")

    return PolicyTable(config, formulation, grid, values, policy, ratios, scale, problem, rewards)


__all__ = ["PolicyTable", "SolverConfig", "solve_nsf", "stationary_tail"]
