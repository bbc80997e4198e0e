"""Stationarity, time invariance and time consistency of collective time preferences.

Preferences over temporal payments ``(amount, date)`` evaluated at date
``t`` are represented by ``betahat_date / betahat_t * Uhat(amount)``. The
checks below work on that representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .prefs_tech import LOG, POWER, LtcfParams, ltcf_inverse, ltcf_utility
from .sharing import aggregate_marginal
from .weights import DiscountProfile, as_weights, effective_mu, mu

# relative size below which two utility levels count as equal
EQUAL_TOL = 1e-12
# relative size above which a difference is a genuine violation
STRICT_TOL = 1e-10


@dataclass(frozen=True)
class TemporalPayment:
    amount: float
    date: int

    def __post_init__(self):
        if self.date < 0 or int(self.date) != self.date:
            raise ValueError(f"payment date must be a nonnegative integer, got {self.date}")


@dataclass(frozen=True)
class AxiomVerdict:
    """Outcome of :func:`check_axioms`.

    ``witness`` is ``(b, c, t, t', tau, tau')``. When ``feasible`` is false no
    amount ``c`` makes the period-t indifference hold and the three verdicts
    are ``None``. ``ambiguous`` flags a difference between the equality and
    violation thresholds; such a difference is not taken as a violation.
    """

    stationarity: bool | None
    time_invariance: bool | None
    time_consistency: bool | None
    witness: tuple
    feasible: bool = True
    ambiguous: bool = False
    detail: str = ""

    @property
    def triple(self):
        return (self.stationarity, self.time_invariance, self.time_consistency)


def _profile(d: DiscountProfile, gamma) -> DiscountProfile:
    return d if gamma is None or gamma == d.gamma else d.with_gamma(gamma)


def log_beta_hat(theta0, d: DiscountProfile, t):
    """``log betahat_t`` evaluated without forming the (possibly tiny) factor itself."""
    theta0 = as_weights(theta0, normalize=True)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        la = np.log(theta0) / d.gamma
    la = la - logsumexp(la)
    inner = logsumexp(la + t[..., None] * (d.log_delta / d.gamma), axis=-1)
    return d.gamma * inner


def impatience_gap(theta0, d: DiscountProfile, gamma, t, t_prime, tau, tau_prime) -> float:
    """``betahat_{t+tau}/betahat_{t+tau'} - betahat_{t'+tau}/betahat_{t'+tau'}``.

    Nonnegative for ``t <= t'`` and ``tau <= tau'``; zero when either delay
    difference vanishes or every agent discounts alike. The second difference
    of ``log betahat`` is assembled from nonnegative terms, so the sign is
    exact and tiny gaps keep their relative accuracy.
    """
    if not (0 <= t <= t_prime and 0 <= tau <= tau_prime):
        raise ValueError(f"need 0 <= t <= t' and 0 <= tau <= tau', got t={t}, t'={t_prime}, tau={tau}, tau'={tau_prime}")
    d = _profile(d, gamma)
    if t == t_prime or tau == tau_prime or not d.heterogeneous:
        return 0.0
    g = d.gamma
    theta0 = as_weights(theta0, normalize=True)
    n_top = int(np.sum(d.delta == d.delta[0]))
    with np.errstate(divide="ignore"):
        la = np.log(theta0) / g
    # weights and factors of the less patient agents relative to the most patient group
    log_c = la[n_top:] - logsumexp(la[:n_top])
    log_r = (d.log_delta[n_top:] - d.log_delta[0]) / g
    keep = np.isfinite(log_c)
    log_c, log_r = log_c[keep], log_r[keep]
    if log_c.size == 0:
        return 0.0
    dt, dtau = t_prime - t, tau_prime - tau
    s0 = t + tau

    def excess(s):
        return float(np.exp(logsumexp(log_c + s * log_r)))

    c_s = np.exp(log_c + s0 * log_r)
    drop_t = -np.expm1(dt * log_r)
    drop_tau = -np.expm1(dtau * log_r)
    num = float(np.sum(c_s * drop_t * drop_tau))
    # pairwise part: c_i c_j r_i^s r_j^s (r_j^dt - r_i^dt)(r_j^dtau - r_i^dtau) over i < j
    rt, rtau = np.exp(dt * log_r), np.exp(dtau * log_r)
    pair = np.outer(c_s, c_s) * np.subtract.outer(rt, rt) * np.subtract.outer(rtau, rtau)
    num += float(np.sum(np.triu(pair, 1)))
    e_b, e_c, e_d = excess(t + tau_prime), excess(t_prime + tau), excess(t_prime + tau_prime)
    # v = (E_C - E_D) / (1 + E_D), computed from nonnegative terms
    v = float(np.sum(np.exp(log_c + (t_prime + tau) * log_r) * drop_tau)) / (1.0 + e_d)
    second = math.log1p(num / ((1.0 + e_b) * (1.0 + e_d) * (1.0 + v)))
    lb = log_beta_hat(theta0, d, [t_prime + tau, t_prime + tau_prime])
    late = lb[0] - lb[1]
    # early - late = gamma * second; exp(A) - exp(B) = exp(B) * expm1(A - B)
    return math.exp(late) * math.expm1(g * second)


def _rel(x, y):
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def check_axioms(b, c=None, t=0, t_prime=1, tau=0, tau_prime=1, *, theta0, d: DiscountProfile,
                 gamma=None, p: LtcfParams) -> AxiomVerdict:
    """Test the three axioms on one indifference pair.

    ``c`` is chosen (or, if given, verified) so that at date ``t`` the payment
    ``(b, t + tau)`` is indifferent to ``(c, t + tau')``. Then

    * stationarity asks whether the same pair shifted to ``t' + tau`` and
      ``t' + tau'`` is still indifferent when evaluated at ``t``;
    * time invariance asks the same of the shifted pair evaluated at ``t'``;
    * time consistency asks whether the original pair is still indifferent
      when evaluated at ``t'``.

    Utility uses the group preferences (shift ``phi * n``).
    """
    if not (0 <= t <= t_prime and 0 <= tau <= tau_prime):
        raise ValueError("need 0 <= t <= t' and 0 <= tau <= tau'")
    d = _profile(d, p.gamma if gamma is None else gamma)
    gp = p.shifted(d.n)
    witness_base = (float(b), None, t, t_prime, tau, tau_prime)
    ub = float(ltcf_utility(b, gp))
    lb = log_beta_hat(theta0, d, [t, t_prime, t + tau, t + tau_prime, t_prime + tau, t_prime + tau_prime])
    l_t, l_tp, l_a, l_b, l_c, l_d = lb

    target = ub * math.exp(l_a - l_b)
    c_solved = float(ltcf_inverse(target, gp))
    if not math.isfinite(c_solved):
        return AxiomVerdict(None, None, None, witness_base, feasible=False,
                            detail=f"no amount has utility {target:.6g}; indifference infeasible")
    if c is None:
        c = c_solved
    elif _rel(float(ltcf_utility(c, gp)), target) > STRICT_TOL:
        raise ValueError(f"c={c} is not indifferent to b={b} at date {t}; expected {c_solved}")
    uc = float(ltcf_utility(c, gp))
    witness = (float(b), float(c), t, t_prime, tau, tau_prime)

    def value(log_date, log_eval, u):
        return math.exp(log_date - log_eval) * u

    tests = {
        "stationarity": (value(l_c, l_t, ub), value(l_d, l_t, uc)),
        "time_invariance": (value(l_c, l_tp, ub), value(l_d, l_tp, uc)),
        "time_consistency": (value(l_a, l_tp, ub), value(l_b, l_tp, uc)),
    }
    verdict = {}
    ambiguous = False
    for name, (x, y) in tests.items():
        r = _rel(x, y)
        if r > STRICT_TOL:
            verdict[name] = False
        else:
            verdict[name] = True
            ambiguous |= r > EQUAL_TOL
    return AxiomVerdict(witness=witness, ambiguous=ambiguous, **verdict)


def indifference_amounts(p: LtcfParams, n: int, count: int = 3) -> list:
    """Amounts ``b`` for which the indifference in :func:`check_axioms` is solvable.

    Later payments need a larger utility in absolute value. With
    ``gamma > 1`` utility is bounded above, so amounts are chosen with
    negative utility; otherwise with positive utility.
    """
    q = p.shifted(n)
    targets = np.linspace(0.25, 0.75, count) if q.mode == POWER and q.gamma > 1 else np.linspace(1.5, 3.0, count)
    slope = q.eta if q.mode == LOG else q.eta / q.gamma
    amounts = (targets - q.phi) / slope
    floor = max(q.lower_bound, 0.0)
    if np.any(amounts <= floor):
        # the shift alone puts every amount on one side; with a bounded utility
        # stay near the floor, where the most room is left below the bound
        bounded = q.mode == POWER and q.gamma > 1
        amounts = floor + (np.linspace(0.01, 0.1, count) if bounded else np.linspace(0.5, 2.0, count))
    return [float(b) for b in amounts]


def mrs(x_t, x_next, theta_t, theta_next, p: LtcfParams, d: DiscountProfile) -> float:
    """Marginal rate of substitution between consumption at ``t`` and ``t + 1``.

    ``U_x(x_t, theta_t) / (mu(theta_t) U_x(x_{t+1}, theta_{t+1}))``, the
    discount ratio ``beta_{t+1} / beta_t`` being ``mu(theta_t)``.
    """
    theta_t = as_weights(theta_t, normalize=True)
    theta_next = as_weights(theta_next, normalize=True)
    num = aggregate_marginal(x_t, theta_t, p)
    den = mu(theta_t, d) * aggregate_marginal(x_next, theta_next, p)
    return float(num / den)


def pure_rate(theta, d: DiscountProfile, gamma=None) -> float:
    """One-period rate of time preference ``1 / muhat(theta) - 1``."""
    d = _profile(d, gamma)
    return float(1.0 / effective_mu(as_weights(theta, normalize=True), d) - 1.0)


@dataclass(frozen=True)
class ImpatienceProfile:
    """One-period rates ``rho_t`` for ``t = 0..T`` and their distance to the limit.

    ``excess[t] = rho_t - limit`` is computed directly rather than by
    subtraction, and ``log_excess`` stays finite after ``excess`` underflows,
    so the ordering is resolvable far into the horizon.
    """

    rates: np.ndarray
    excess: np.ndarray
    log_excess: np.ndarray
    limit: float


def marginal_impatience_profile(theta0, d: DiscountProfile, gamma=None, T: int = 100) -> ImpatienceProfile:
    """Rates of time preference along the weight path, with the limit ``1/delta^1 - 1``."""
    if T < 2:
        raise ValueError("T must be at least 2")
    d = _profile(d, gamma)
    theta0 = as_weights(theta0, normalize=True)
    g = d.gamma
    t = np.arange(T + 1, dtype=float)
    top = d.delta[0]
    limit = 1.0 / top - 1.0
    n_top = int(np.sum(d.delta == top))
    if n_top == d.n:
        rates = np.full(T + 1, limit)
        return ImpatienceProfile(rates, np.zeros(T + 1), np.full(T + 1, -np.inf), limit)

    # effective weights of theta_t in log space
    with np.errstate(divide="ignore"):
        la = (np.log(theta0)[None, :] + t[:, None] * d.log_delta[None, :]) / g
    la = la - logsumexp(la, axis=1, keepdims=True)
    # e_t = sum_{i: delta^i < delta^1} a^i (1 - (delta^i/delta^1)^(1/g)), so muhat = delta^1 (1 - e)^g
    shortfall = -np.expm1((d.log_delta[n_top:] - d.log_delta[0]) / g)
    log_e = logsumexp(la[:, n_top:] + np.log(shortfall)[None, :], axis=1)
    e = np.exp(log_e)
    log1m = np.log1p(-e)
    mu_hat = top * np.exp(g * log1m)
    # rho - limit = (delta^1 - muhat) / (muhat delta^1)
    gap = -np.expm1(g * log1m)
    small = e < 1e-8
    log_gap = np.where(small, math.log(g) + log_e + np.log1p((g - 1.0) * e / 2.0),
                       np.log(np.where(small, 1.0, gap)))
    log_excess = log_gap - np.log(mu_hat)
    excess = np.exp(log_excess)
    return ImpatienceProfile(limit + excess, excess, log_excess, limit)


__all__ = [
    "AxiomVerdict",
    "ImpatienceProfile",
    "TemporalPayment",
    "check_axioms",
    "impatience_gap",
    "indifference_amounts",
    "log_beta_hat",
    "marginal_impatience_profile",
    "mrs",
    "pure_rate",
]
