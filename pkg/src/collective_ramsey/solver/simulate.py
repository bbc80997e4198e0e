"""Optimal paths, Euler residuals and the re-planning consistency check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PathError
from ..prefs_tech import ltcf_marginal
from ..sharing import sharing_rule
from ..weights import discount_sequences, weights_path
from .nsf import PolicyTable, SolverConfig, solve_nsf


@dataclass
class TrajectoryRecord:
    """A simulated path for ``t = 0..T``.

    ``k[t]`` is capital at the start of period ``t`` and ``k_next[t]`` the
    capital carried into ``t + 1``; ``euler[t]`` is NaN where the residual is
    undefined (the last period, or a boundary choice).
    """

    k: np.ndarray
    k_next: np.ndarray
    x: np.ndarray
    theta: np.ndarray
    shares: np.ndarray
    beta: np.ndarray
    beta_hat: np.ndarray
    mu: np.ndarray
    mu_hat: np.ndarray
    euler: np.ndarray

    @property
    def T(self) -> int:
        return self.k.size - 1

    def feasibility_gap(self, tech) -> float:
        return float(np.max(np.abs(self.x + self.k_next - tech.output(self.k))))


def build_record(k, k_next, config: SolverConfig) -> TrajectoryRecord:
    """Assemble a trajectory from a capital path under the config's primitives."""
    k = np.asarray(k, dtype=float)
    k_next = np.asarray(k_next, dtype=float)
    T = k.size - 1
    x = config.tech.output(k) - k_next
    theta = weights_path(config.theta0, config.discount, T)
    shares = np.vstack([sharing_rule(x[t], theta[t], config.prefs).shares for t in range(T + 1)])
    seq = discount_sequences(config.theta0, config.discount, T=T + 1)
    rec = TrajectoryRecord(
        k=k, k_next=k_next, x=x, theta=theta, shares=shares,
        beta=seq.beta[: T + 1], beta_hat=seq.beta_hat[: T + 1],
        mu=seq.mu[: T + 1], mu_hat=seq.mu_hat[: T + 1],
        euler=np.full(T + 1, np.nan),
    )
    rec.euler = euler_residual(rec, config)
    return rec


def simulate_path(k0: float, policy: PolicyTable, config: SolverConfig | None = None) -> TrajectoryRecord:
    """Iterate the optimal policy from ``k0`` for ``t = 0..T``.

    Next-period capital is re-optimised at the exact state each period
    rather than read off the grid. Raises :class:`PathError` if the path
    leaves ``[k_min, k_max]`` before the terminal period.
    """
    config = config or policy.config
    k_lo, k_hi = policy.grid[0], policy.grid[-1]
    if not 0 < k0 <= config.tech.k_max:
        raise PathError(f"initial capital {k0} outside (0, k_max={config.tech.k_max}]")
    if not k_lo <= k0 <= k_hi:
        raise PathError(f"initial capital {k0} outside the grid [{k_lo}, {k_hi}]")
    T = policy.T
    k = np.empty(T + 1)
    k_next = np.empty(T + 1)
    k[0] = k0
    for t in range(T + 1):
        y = float(policy.next_capital(t, k[t])[0])
        k_next[t] = y
        if t < T:
            if not k_lo <= y <= k_hi:
                raise PathError(f"capital path left the grid at t={t + 1}: k={y:.6g}")
            k[t + 1] = y
    return build_record(k, k_next, config)


def euler_residual(traj: TrajectoryRecord, config: SolverConfig) -> np.ndarray:
    """Normalised Euler residuals of the effective formulation.

    ``R_t = 1 - betahat_{t+1} Uhat'(x_{t+1}) f'(k_{t+1}) / (betahat_t Uhat'(x_t))``
    for ``t = 0..T-1``; entry ``T`` and any period with a non-interior
    choice are NaN.
    """
    gp = config.group_prefs
    T = traj.T
    res = np.full(T + 1, np.nan)
    x = traj.x
    interior = (x > gp.lower_bound) & (traj.k_next > 0)
    ok = interior[:-1] & interior[1:]
    if not np.any(ok):
        return res
    idx = np.flatnonzero(ok)
    mu_hat = traj.mu_hat[idx]
    up_now = ltcf_marginal(x[idx], gp)
    up_next = ltcf_marginal(x[idx + 1], gp)
    fprime = config.tech.marginal(traj.k[idx + 1])
    res[idx] = 1.0 - mu_hat * up_next * fprime / up_now
    return res


@dataclass(frozen=True)
class ReplanReport:
    t_prime: int
    divergence: float
    first_disagreement: int | None
    original: np.ndarray
    replanned: np.ndarray


def compare_paths(original, replanned, t_prime: int, tol: float) -> ReplanReport:
    diff = np.abs(np.asarray(original) - np.asarray(replanned))
    worst = float(np.max(diff)) if diff.size else 0.0
    over = np.flatnonzero(diff > tol)
    first = int(t_prime + over[0]) if over.size else None
    return ReplanReport(t_prime, worst, first, np.asarray(original), np.asarray(replanned))


def replan_check(traj: TrajectoryRecord, t_prime: int, config: SolverConfig, tol: float = 1e-6,
                 tail=None) -> ReplanReport:
    """Re-solve from ``(k_{t'}, theta_{t'})`` with ``t'`` as the new origin.

    The re-plan keeps the original terminal date, so its horizon is
    ``T - t'``. Reports the largest gap between the re-planned capital path
    and the original path over the common periods.
    """
    T = traj.T
    if not 0 < t_prime < T / 2:
        raise ValueError(f"t_prime must satisfy 0 < t' < T/2, got {t_prime} with T={T}")
    cfg = config.replace(theta0=traj.theta[t_prime] / traj.theta[t_prime].sum(), T=T - t_prime)
    table = solve_nsf(cfg, tail=tail)
    again = simulate_path(float(traj.k[t_prime]), table, cfg)
    return compare_paths(traj.k[t_prime:], again.k, t_prime, tol)
