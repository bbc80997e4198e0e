"""LTCF instantaneous utility and Cobb-Douglas technology.

The LTCF family is

    u(x) = g * ((phi + (eta/gamma) x)^(1-gamma) - 1),   g = gamma / (1 - gamma)

with the log limit ``log(phi + eta x)`` at gamma = 1 and the exponential limit
``1 - exp(-eta x)`` as gamma -> inf (phi = 1). All evaluators accept scalars
or numpy arrays and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

POWER = "power"
LOG = "log"
EXP = "exp"


@dataclass(frozen=True)
class LtcfParams:
    """Curvature ``gamma``, scale ``eta`` and shift ``phi`` of an LTCF utility.

    ``gamma = 1`` selects the log mode and ``gamma = math.inf`` the
    exponential mode (which requires ``phi = 1``).
    """

    gamma: float
    eta: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not (0 < self.eta < math.inf):
            raise DomainError(f"eta must lie in (0, inf), got {self.eta}")
        if not math.isfinite(self.phi):
            raise DomainError(f"phi must be finite, got {self.phi}")
        if math.isinf(self.gamma) and self.phi != 1.0:
            raise DomainError("the exponential limit requires phi = 1")

    @property
    def mode(self) -> str:
        if math.isinf(self.gamma):
            return EXP
        if self.gamma == 1.0:
            return LOG
        return POWER

    @property
    def lower_bound(self) -> float:
        """Smallest admissible consumption (Stone-Geary bound when phi < 0)."""
        if self.mode == EXP or self.phi >= 0:
            return 0.0
        slope = self.eta if self.mode == LOG else self.eta / self.gamma
        return -self.phi / slope

    def shifted(self, n: int) -> "LtcfParams":
        """Parameters of the group-level utility, i.e. shift ``phi * n``."""
        if self.mode == EXP:
            raise DomainError("the exponential limit has no group-level LTCF form")
        return replace(self, phi=self.phi * n)

    def base(self, x):
        """The affine term ``phi + (eta/gamma) x`` (``phi + eta x`` in log mode)."""
        x = np.asarray(x, dtype=float)
        if self.mode == LOG:
            return self.phi + self.eta * x
        return self.phi + (self.eta / self.gamma) * x


def _check_domain(x, p: LtcfParams):
    x = np.asarray(x, dtype=float)
    lo = p.lower_bound
    bad = ~(x >= lo)
    if np.any(bad):
        raise DomainError(
            f"consumption {np.min(x)} below admissible bound {lo} "
            f"(gamma={p.gamma}, eta={p.eta}, phi={p.phi})"
        )
    return x


def _out(values, like):
    return values if np.ndim(like) else float(values)


def utility_unchecked(x, p: LtcfParams):
    """Vectorised utility without domain policing; values below the bound give -inf.

    Used inside the solvers, where infeasible choices simply carry -inf.
    """
    x = np.asarray(x, dtype=float)
    if p.mode == EXP:
        return np.where(x >= 0, -np.expm1(-p.eta * x), -np.inf)
    b = p.base(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        if p.mode == LOG:
            val = np.log(np.where(b > 0, b, 0.0))
        else:
            g = p.gamma / (1.0 - p.gamma)
            val = g * (np.power(np.maximum(b, 0.0), 1.0 - p.gamma) - 1.0)
    return np.where(x >= p.lower_bound, val, -np.inf)


def ltcf_utility(x, p: LtcfParams):
    """Evaluate the LTCF utility.

    Returns ``-inf`` when the affine base is zero and ``1 - gamma < 0`` (or in
    log mode); raises :class:`DomainError` below the admissible bound.
    """
    x = _check_domain(x, p)
    return _out(utility_unchecked(x, p), x)


def ltcf_marginal(x, p: LtcfParams):
    """First derivative ``eta * base^(-gamma)``; ``+inf`` where the base vanishes."""
    x = _check_domain(x, p)
    if p.mode == EXP:
        return _out(p.eta * np.exp(-p.eta * x), x)
    b = p.base(x)
    gamma = 1.0 if p.mode == LOG else p.gamma
    with np.errstate(divide="ignore"):
        val = np.where(b > 0, p.eta * np.power(np.where(b > 0, b, 1.0), -gamma), np.inf)
    return _out(val, x)


def ltcf_second(x, p: LtcfParams):
    """Second derivative ``-eta^2 * base^(-gamma-1)``."""
    x = _check_domain(x, p)
    if p.mode == EXP:
        return _out(-p.eta**2 * np.exp(-p.eta * x), x)
    b = p.base(x)
    gamma = 1.0 if p.mode == LOG else p.gamma
    with np.errstate(divide="ignore"):
        val = np.where(b > 0, -p.eta**2 * np.power(np.where(b > 0, b, 1.0), -gamma - 1.0), -np.inf)
    return _out(val, x)


def ltcf_marginal_inverse(m, p: LtcfParams):
    """Consumption at which marginal utility equals ``m > 0``.

    The result may fall below the admissible bound (e.g. negative when
    ``phi > 0``); callers decide whether that is acceptable.
    """
    m = np.asarray(m, dtype=float)
    if p.mode == EXP:
        return _out(-np.log(m / p.eta) / p.eta, m)
    if p.mode == LOG:
        return _out(1.0 / m - p.phi / p.eta, m)
    base = np.power(m / p.eta, -1.0 / p.gamma)
    return _out((p.gamma / p.eta) * (base - p.phi), m)


def ltcf_inverse(v, p: LtcfParams):
    """Consumption with utility ``v``; ``nan`` where ``v`` is outside the range."""
    v = np.asarray(v, dtype=float)
    if p.mode == EXP:
        with np.errstate(invalid="ignore", divide="ignore"):
            x = -np.log1p(-v) / p.eta
        return _out(np.where(v < 1.0, x, np.nan), v)
    if p.mode == LOG:
        b = np.exp(v)
        return _out((b - p.phi) / p.eta, v)
    g = p.gamma / (1.0 - p.gamma)
    inner = v / g + 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(inner > 0, np.power(inner, 1.0 / (1.0 - p.gamma)), np.nan)
    return _out((p.gamma / p.eta) * (b - p.phi), v)


def tcf_individual(x, p: LtcfParams):
    """Tolerance for consumption fluctuations ``-u'/u''``, affine in ``x``."""
    x = _check_domain(x, p)
    if p.mode == EXP:
        return _out(np.full_like(x, 1.0 / p.eta), x)
    return _out(p.base(x) / p.eta, x)


@dataclass(frozen=True)
class Technology:
    """Cobb-Douglas ``f(k) = A k^a`` with ``0 < a < 1``."""

    A: float = 1.0
    a: float = 0.36

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError(f"productivity A must be positive, got {self.A}")
        if not 0 < self.a < 1:
            raise DomainError(f"elasticity a must lie in (0, 1), got {self.a}")

    @property
    def k_max(self) -> float:
        """Maximum sustainable capital, the positive fixed point of ``f``."""
        return self.A ** (1.0 / (1.0 - self.a))

    def output(self, k):
        return self.A * np.power(k, self.a)

    def marginal(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore"):
            return self.a * self.A * np.power(k, self.a - 1.0)


def technology_eval(k, tech: Technology):
    """Return ``(f(k), f'(k), k_max)``; ``f'(0) = +inf``."""
    karr = np.asarray(k, dtype=float)
    if np.any(~(karr >= 0)):
        raise DomainError(f"capital must be nonnegative, got {np.min(karr)}")
    return _out(tech.output(karr), karr), _out(tech.marginal(karr), karr), tech.k_max
