"""Static allocation of aggregate consumption among agents with common LTCF utility.

Given aggregate consumption ``x`` and weights ``theta``, the planner solves

    max  sum_i theta^i u(s^i)   s.t.  sum_i s^i = x.

Under LTCF the optimum is linear in ``x`` (:func:`sharing_rule`); the value
of the program is the aggregate utility ``U(x, theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import BracketError, DomainError, InteriorityError
from .prefs_tech import (
    EXP,
    LOG,
    LtcfParams,
    ltcf_marginal_inverse,
    ltcf_utility,
    tcf_individual,
)
from .weights import DiscountProfile, effective_weights, weights_at


@dataclass(frozen=True)
class SharingOutcome:
    """Individual consumptions, the resource shadow price and the rule coefficients."""

    shares: np.ndarray
    lam: float
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray

    @property
    def total(self) -> float:
        return float(self.shares.sum())


def _theta(theta):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or np.any(theta < 0) or not theta.sum() > 0:
        raise ValueError(f"weights must be a nonnegative, nonzero vector, got {theta}")
    return theta


def rule_coefficients(theta, p: LtcfParams):
    """Slopes ``a`` and intercepts ``b`` of the optimal linear sharing rule."""
    theta = _theta(theta)
    n = theta.size
    if p.mode == EXP:
        if np.any(theta <= 0):
            raise ValueError("the exponential limit needs strictly positive weights")
        lt = np.log(theta)
        return np.full(n, 1.0 / n), (lt - lt.mean()) / p.eta
    a = effective_weights(theta, p.gamma)
    b = (p.gamma * p.phi / p.eta) * (a * n - 1.0)
    return a, b


def _check_interior(shares, theta, p: LtcfParams, x):
    lo = p.lower_bound
    bad = shares < lo
    if p.mode != EXP:
        bad |= (theta > 0) & ~(p.base(shares) > 0)
    if np.any(bad):
        agents = np.flatnonzero(bad)
        names = ", ".join(f"agent {i + 1} gets {shares[i]:.6g}" for i in agents)
        raise InteriorityError(
            f"sharing of x={x:.6g} is not interior (bound {lo:.6g}): {names}", agents
        )


def _shadow_price(x, theta, p: LtcfParams):
    n = theta.size
    if p.mode == EXP:
        return p.eta * np.exp(np.log(theta).mean() - p.eta * x / n)
    big = p.shifted(n).base(x)
    if p.mode == LOG:
        return theta.sum() * p.eta / big
    return (np.power(theta, 1.0 / p.gamma).sum()) ** p.gamma * p.eta * big ** (-p.gamma)


def sharing_rule(x, theta, p: LtcfParams) -> SharingOutcome:
    """Closed-form Pareto-optimal shares ``s^i = a^i x + b^i``.

    Raises :class:`InteriorityError` naming every agent whose share falls
    outside the utility domain instead of clamping it.
    """
    theta = _theta(theta)
    if not x > 0:
        raise DomainError(f"aggregate consumption must be positive, got {x}")
    a, b = rule_coefficients(theta, p)
    shares = a * x + b
    _check_interior(shares, theta, p, x)
    return SharingOutcome(shares, float(_shadow_price(x, theta, p)), a, b)


def static_oracle(x, theta, p: LtcfParams, tol: float = 1e-12, max_iter: int = 400) -> SharingOutcome:
    """Solve the allocation program by bisection on the shadow price.

    For a trial price ``lam`` each agent consumes where ``theta^i u'(s) = lam``;
    total demand falls in ``lam``, so bisection (in log price) finds the price
    that exhausts ``x``. Independent of the closed-form rule.
    """
    theta = _theta(theta)
    if np.any(theta <= 0):
        raise ValueError("the oracle needs strictly positive weights")
    if not x > 0:
        raise DomainError(f"aggregate consumption must be positive, got {x}")

    def demand(loglam):
        return ltcf_marginal_inverse(np.exp(loglam) / theta, p)

    def gap(loglam):
        return demand(loglam).sum() - x

    # equal split gives a price inside the bracket whenever it is interior
    x0 = max(x / theta.size, p.lower_bound + 1e-12)
    centre = float(np.log(np.max(theta) * float(_bracket_marginal(x0, p))))
    lo, hi, step = centre - 1.0, centre + 1.0, 1.0
    for _ in range(200):
        if gap(lo) >= 0:
            break
        step *= 2.0
        lo -= step
    for _ in range(200):
        if gap(hi) <= 0:
            break
        step *= 2.0
        hi += step
    if not (gap(lo) >= 0 >= gap(hi)):
        raise BracketError(f"cannot bracket shadow price: log-lambda in [{lo}, {hi}]")

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) <= tol * max(1.0, x) or hi - lo < 1e-15:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    loglam = 0.5 * (lo + hi)
    shares = demand(loglam)
    _check_interior(shares, theta, p, x)
    n = theta.size
    a = effective_weights(theta, p.gamma) if p.mode != EXP else np.full(n, 1.0 / n)
    return SharingOutcome(shares, float(np.exp(loglam)), a, shares - a * x)


def _bracket_marginal(x, p: LtcfParams):
    # marginal utility kept finite at the domain bound
    if p.mode == EXP:
        return p.eta * np.exp(-p.eta * x)
    gamma = 1.0 if p.mode == LOG else p.gamma
    return p.eta * max(float(p.base(x)), 1e-300) ** (-gamma)


def allocation_value(shares, theta, p: LtcfParams) -> float:
    """``sum_i theta^i u(s^i)`` with the convention ``0 * (-inf) = 0``."""
    u = np.asarray(ltcf_utility(shares, p))
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(np.where(theta > 0, theta * u, 0.0)))


def aggregate_utility(x, theta, p: LtcfParams):
    """Value ``U(x, theta)`` of the allocation program.

    Homogeneous of degree one in ``theta``: for weights summing to ``w``,
    ``U = g * ((sum theta^(1/gamma))^gamma * B^(1-gamma) - w)`` with
    ``B = phi n + (eta/gamma) x``. Accepts array ``x``.
    """
    theta = _theta(theta)
    n = theta.size
    w = theta.sum()
    q = p.shifted(n) if p.mode != EXP else p
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs >= q.lower_bound)):
        raise DomainError(f"aggregate consumption {np.min(xs)} below bound {q.lower_bound}")
    if p.mode == EXP:
        m = np.log(theta).mean()
        val = w - n * np.exp(m - p.eta * xs / n)
    elif p.mode == LOG:
        with np.errstate(divide="ignore"):
            val = np.sum(xlogy(theta, theta / w)) + w * np.log(q.base(xs))
    else:
        g = p.gamma / (1.0 - p.gamma)
        scale = np.power(theta, 1.0 / p.gamma).sum() ** p.gamma
        with np.errstate(divide="ignore"):
            val = g * (scale * np.power(q.base(xs), 1.0 - p.gamma) - w)
    return val if np.ndim(x) else float(val)


def aggregate_marginal(x, theta, p: LtcfParams):
    """``dU/dx``, equal to the shadow price of the allocation program."""
    theta = _theta(theta)
    return _shadow_price(np.asarray(x, dtype=float), theta, p)


def reduced_utility_uhat(x, p: LtcfParams, n: int):
    """Weight-free group utility: LTCF with shift ``phi * n``."""
    return ltcf_utility(x, p.shifted(n))


def nonstationary_utility(x, t, theta0, d: DiscountProfile, p: LtcfParams):
    """``U_t(x) = U(x, theta_t)`` with ``theta_t`` the closed-form weights at ``t``."""
    return aggregate_utility(x, weights_at(theta0, d, t), p)


def tcf_aggregate(x, theta, p: LtcfParams, n: int | None = None):
    """Aggregate TCF index and its split across agents.

    Returns ``(alpha_hat, alpha)`` where ``alpha_hat`` depends on ``x`` only
    and ``alpha^i = a^i(theta) * alpha_hat``.
    """
    theta = _theta(theta)
    n = theta.size if n is None else n
    q = p.shifted(n) if p.mode != EXP else p
    alpha_hat = float(tcf_individual(x, q)) * (n if p.mode == EXP else 1)
    a, _ = rule_coefficients(theta, p)
    return alpha_hat, a * alpha_hat


__all__ = [
    "SharingOutcome",
    "aggregate_marginal",
    "aggregate_utility",
    "allocation_value",
    "nonstationary_utility",
    "reduced_utility_uhat",
    "rule_coefficients",
    "sharing_rule",
    "static_oracle",
    "tcf_aggregate",
]
