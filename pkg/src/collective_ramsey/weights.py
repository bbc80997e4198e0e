"""Pareto-weight dynamics on the simplex and the implied discount sequences."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

log = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12
UNDERFLOW = 1e-300


def as_weights(theta, normalize: bool = False) -> np.ndarray:
    """Validate ``theta`` as a point of the simplex and return it as an array.

    With ``normalize=True`` any nonnegative, not-all-zero vector is rescaled
    to sum to one.
    """
    theta = np.array(theta, dtype=float, ndmin=1)
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError("weights must be a nonempty 1-d sequence")
    if np.any(~np.isfinite(theta)) or np.any(theta < 0):
        raise ValueError(f"weights must be finite and nonnegative, got {theta}")
    total = theta.sum()
    if total <= 0:
        raise ValueError("weights must not be all zero")
    if normalize:
        return theta / total
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got sum {total!r}")
    return theta


@dataclass(frozen=True)
class DiscountProfile:
    """Individual discount factors, most patient first.

    Ties are accepted (they describe a homogeneous group); the order must be
    nonincreasing and every factor must lie in (0, 1). ``gamma`` is the
    utility curvature used for the effective quantities.
    """

    delta: np.ndarray
    gamma: float = 1.0
    log_delta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = np.array(self.delta, dtype=float, ndmin=1)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("delta must be a nonempty 1-d sequence")
        if np.any(~((d > 0) & (d < 1))):
            raise ValueError(f"discount factors must lie in (0, 1), got {d}")
        if np.any(np.diff(d) > 0):
            raise ValueError(f"discount factors must be ordered most patient first, got {d}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        d.setflags(write=False)
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "log_delta", np.log(d))

    @property
    def n(self) -> int:
        return self.delta.size

    @property
    def heterogeneous(self) -> bool:
        return bool(self.delta[0] > self.delta[-1])

    @property
    def delta_hat(self) -> np.ndarray:
        """Effective individual discount factors ``delta^(1/gamma)``."""
        return self.delta ** (1.0 / self.gamma)

    def with_gamma(self, gamma: float) -> "DiscountProfile":
        return DiscountProfile(self.delta, gamma)


def update_weights(theta, d: DiscountProfile) -> np.ndarray:
    """One step of the weight transition ``theta^i delta^i / sum_j theta^j delta^j``."""
    theta = np.asarray(theta, dtype=float)
    w = theta * d.delta
    total = w.sum()
    if not total > 0:
        raise ValueError("cannot update an all-zero weight vector")
    return w / total


def _log_weights(theta0, d: DiscountProfile, t):
    theta0 = np.asarray(theta0, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        logw = np.log(theta0) + t[..., None] * d.log_delta
    return logw - logsumexp(logw, axis=-1, keepdims=True)


def weights_at(theta0, d: DiscountProfile, t, full: bool = False):
    """Closed-form weights after ``t`` updates.

    Computed in log space, so ``t`` in the thousands is fine. ``t`` may be an
    array, giving one row per period. Entries that fall below 1e-300 are set
    to zero; with ``full=True`` the boolean mask of such entries is returned
    as well.
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    theta = np.exp(_log_weights(theta0, d, t))
    clamped = (theta < UNDERFLOW) & (np.asarray(theta0) > 0)
    if np.any(clamped):
        log.debug("clamped %d underflowing weights to zero", int(clamped.sum()))
        theta = np.where(clamped, 0.0, theta)
        theta = theta / theta.sum(axis=-1, keepdims=True)
    return (theta, clamped) if full else theta


def weights_path(theta0, d: DiscountProfile, T: int) -> np.ndarray:
    """Weights for periods ``0..T`` as a ``(T+1, n)`` array."""
    return weights_at(theta0, d, np.arange(T + 1))


def mu(theta, d: DiscountProfile):
    """Aggregate discount factor, the theta-weighted mean of ``delta``."""
    return np.asarray(theta, dtype=float) @ d.delta


def effective_weights(theta0, gamma: float) -> np.ndarray:
    """``theta^(1/gamma)`` renormalised; zero entries stay zero."""
    theta0 = np.asarray(theta0, dtype=float)
    if gamma == 1.0:
        return theta0 / theta0.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        lw = np.log(theta0) / gamma
    return np.exp(lw - logsumexp(lw, axis=-1, keepdims=True))


def effective_mu(theta, d: DiscountProfile):
    """Effective aggregate discount factor, the power mean of ``delta``.

    ``[sum_i a^i (delta^i)^(1/gamma)]^gamma`` with ``a`` the effective weights
    of ``theta``; coincides with :func:`mu` in the log case.
    """
    if d.gamma == 1.0:
        return mu(theta, d)
    a = effective_weights(theta, d.gamma)
    return (a @ d.delta_hat) ** d.gamma


@dataclass(frozen=True)
class DiscountSequence:
    """Discount factors ``beta_0..beta_T`` and the per-period ratios behind them.

    ``mu[t]`` and ``mu_hat[t]`` are the aggregate and effective factors at
    ``theta_t`` for ``t = 0..T``, so ``beta[t+1] = mu[t] * beta[t]``.
    """

    beta: np.ndarray
    beta_hat: np.ndarray
    mu: np.ndarray
    mu_hat: np.ndarray


def beta_closed(theta0, d: DiscountProfile, t):
    """``sum_i theta0^i (delta^i)^t``; exactly 1 at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    val = np.power(d.delta, t[..., None]) @ np.asarray(theta0, dtype=float)
    return np.where(t == 0, 1.0, val)


def beta_hat_closed(theta0, d: DiscountProfile, t):
    """``(sum_i thetahat0^i (deltahat^i)^t)^gamma`` with effective weights and factors."""
    t = np.asarray(t, dtype=float)
    a = effective_weights(theta0, d.gamma)
    inner = np.power(d.delta_hat, t[..., None]) @ a
    return np.where(t == 0, 1.0, inner**d.gamma)


def discount_sequences(theta0, d: DiscountProfile, gamma: float | None = None, T: int = 1) -> DiscountSequence:
    """Closed-form ``beta``/``beta_hat`` for ``t = 0..T`` plus the per-period ratios."""
    if T < 1:
        raise ValueError("horizon T must be at least 1")
    if gamma is not None and gamma != d.gamma:
        d = d.with_gamma(gamma)
    t = np.arange(T + 1)
    theta = weights_at(theta0, d, t)
    return DiscountSequence(
        beta=beta_closed(theta0, d, t),
        beta_hat=beta_hat_closed(theta0, d, t),
        mu=mu(theta, d),
        mu_hat=effective_mu(theta, d),
    )
