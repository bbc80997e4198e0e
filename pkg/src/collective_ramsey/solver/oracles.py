"""Closed-form benchmarks for log utility with Cobb-Douglas output."""

from __future__ import annotations

import numpy as np

from ..prefs_tech import Technology
from ..weights import DiscountProfile, as_weights, beta_closed


def brock_mirman_policy(k, tech: Technology, delta: float):
    """Optimal next-period capital ``a * delta * f(k)`` for a single log agent."""
    return tech.a * delta * tech.output(np.asarray(k, dtype=float))


def brock_mirman_steady_state(tech: Technology, delta: float) -> float:
    """Fixed point of the Brock-Mirman policy, ``(a delta A)^(1/(1-a))``."""
    return float((tech.a * delta * tech.A) ** (1.0 / (1.0 - tech.a)))


def brock_mirman_path(k0: float, tech: Technology, delta: float, T: int) -> tuple[np.ndarray, np.ndarray]:
    """Capital and consumption for ``t = 0..T`` under the closed-form policy."""
    k = np.empty(T + 2)
    k[0] = k0
    for t in range(T + 1):
        k[t + 1] = brock_mirman_policy(k[t], tech, delta)
    x = tech.output(k[:-1]) - k[1:]
    return k, x


def log_savings_rates(theta0, d: DiscountProfile, a: float, T: int) -> np.ndarray:
    """Savings rates ``k_{t+1} / f(k_t)`` for heterogeneous log agents, ``t = 0..T``.

    ``sigma_t = D_{t+1} / (beta_t + D_{t+1})`` where ``D_{t+1}`` is the
    discounted value of all future capital income,
    ``sum_i theta0^i a (delta^i)^(t+1) / (1 - a delta^i)``.
    """
    theta0 = as_weights(theta0)
    t = np.arange(T + 1)
    ad = a * d.delta
    tail = (a * np.power(d.delta, (t + 1)[:, None]) / (1.0 - ad)) @ theta0
    beta = beta_closed(theta0, d, t)
    return tail / (beta + tail)


def log_tail_recursive(theta0, d: DiscountProfile, a: float, T: int, horizon: int = 4000) -> np.ndarray:
    """``D_t`` for ``t = 1..T+1`` from the backward recursion ``D_t = a (beta_t + D_{t+1})``.

    Started at ``D = 0`` a long way beyond ``T``; an independent check on the
    geometric sums in :func:`log_savings_rates`.
    """
    theta0 = as_weights(theta0)
    last = T + 1 + horizon
    beta = beta_closed(theta0, d, np.arange(last + 1))
    D = np.zeros(last + 2)
    for s in range(last, 0, -1):
        D[s] = a * (beta[s] + D[s + 1])
    return D[1 : T + 2]


def log_savings_rates_recursive(theta0, d: DiscountProfile, a: float, T: int, horizon: int = 4000) -> np.ndarray:
    """Same rates as :func:`log_savings_rates`, built from :func:`log_tail_recursive`."""
    D = log_tail_recursive(theta0, d, a, T, horizon)
    beta = beta_closed(theta0, d, np.arange(T + 1))
    return D / (beta + D)


__all__ = [
    "brock_mirman_path",
    "brock_mirman_policy",
    "brock_mirman_steady_state",
    "log_savings_rates",
    "log_savings_rates_recursive",
    "log_tail_recursive",
]
