"""Grid Bellman maximisation shared by the nonstationary and stationary solvers.

For each state ``k`` we maximise

    reward(f(k) - y) + discount * V(y)

over next-period capital ``y`` on ``[k_min, min(f(k) - c_floor, k_max)]``,
first on the grid nodes and then by golden-section search between the
neighbours of the best node. ``V`` is interpolated from grid samples.

Golden section stalls at roughly the square root of machine precision in
``y`` because the objective is flat at its peak. When the reward carries a
``grad`` the result is polished by bisection on the first-order condition.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import SolverError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GOLDEN_ITERS = 80
# fixed work partition: results do not depend on the number of threads
CHUNK = 256

POLISH_ITERS = 40

Reward = Callable[[np.ndarray], np.ndarray]


class SmoothReward:
    """Reward function bundled with its derivative in consumption."""

    def __init__(self, value: Reward, grad: Reward):
        self.value = value
        self.grad = grad

    def __call__(self, c):
        return self.value(c)


def make_grid(k_min: float, k_max: float, size: int, spacing: str = "log") -> np.ndarray:
    """Capital grid on ``[k_min, k_max]``, geometric by default."""
    if not 0 < k_min < k_max:
        raise ValueError(f"need 0 < k_min < k_max, got {k_min}, {k_max}")
    if spacing == "log":
        grid = np.geomspace(k_min, k_max, size)
    elif spacing == "uniform":
        grid = np.linspace(k_min, k_max, size)
    else:
        raise ValueError(f"unknown grid spacing {spacing!r}")
    grid[0], grid[-1] = k_min, k_max
    return grid


class Interpolant:
    """Interpolated value function: ``'cubic'`` spline or ``'linear'``."""

    def __init__(self, grid: np.ndarray, values: np.ndarray, kind: str = "cubic"):
        if not np.all(np.isfinite(values)):
            raise SolverError("value samples must be finite to interpolate")
        self.grid = grid
        self.values = values
        self.kind = kind
        if kind == "cubic":
            self._spline = CubicSpline(grid, values)
        elif kind != "linear":
            raise ValueError(f"unknown interpolation {kind!r}")

    def __call__(self, y):
        if self.kind == "cubic":
            return self._spline(y)
        return np.interp(y, self.grid, self.values)

    def derivative(self, y):
        if self.kind == "cubic":
            return self._spline(y, 1)
        idx = np.clip(np.searchsorted(self.grid, y) - 1, 0, self.grid.size - 2)
        return (self.values[idx + 1] - self.values[idx]) / (self.grid[idx + 1] - self.grid[idx])


@dataclass
class BellmanProblem:
    """Grid, technology output on the grid and the consumption floor.

    ``c_floor`` is the consumption at which the reward becomes ``-inf`` (or
    undefined); choices leaving less than that are excluded.
    """

    grid: np.ndarray
    output: Callable[[np.ndarray], np.ndarray]
    c_floor: float = 0.0
    threads: int = 1
    _reward_cache: dict = field(default_factory=dict, repr=False)

    @property
    def k_min(self) -> float:
        return float(self.grid[0])

    @property
    def k_max(self) -> float:
        return float(self.grid[-1])

    def y_cap(self, out):
        return np.minimum(out - self.c_floor, self.k_max)

    def reward_matrix(self, reward: Reward, key=None):
        """Reward of every (grid state, grid choice) pair; ``-inf`` where infeasible."""
        if key is not None and key in self._reward_cache:
            return self._reward_cache[key]
        out = self.output(self.grid)
        cons = out[:, None] - self.grid[None, :]
        feasible = self.grid[None, :] <= self.y_cap(out)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(feasible, reward(np.where(feasible, cons, 1.0)), -np.inf)
        r = np.where(np.isnan(r), -np.inf, r)
        if key is not None:
            self._reward_cache[key] = r
        return r

    def _map_chunks(self, fn, n):
        bounds = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
        if self.threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda b: fn(*b), bounds))
        else:
            parts = [fn(*b) for b in bounds]
        return tuple(np.concatenate(p) for p in zip(*parts))

    def maximize(self, states, reward: Reward, cont: Interpolant, discount: float,
                 reward_rows=None):
        """Maximise the Bellman objective at each capital level in ``states``.

        Returns ``(values, choices)``. ``reward_rows`` may supply the
        precomputed grid reward matrix when ``states`` is the grid itself.
        """
        states = np.asarray(states, dtype=float)
        out_all = self.output(states)
        node_cont = discount * cont.values

        def work(lo, hi):
            out = out_all[lo:hi]
            cap = self.y_cap(out)
            if np.any(cap < self.k_min):
                bad = states[lo:hi][cap < self.k_min]
                raise SolverError(
                    f"empty feasible set at capital {bad[0]:.6g}: every choice above "
                    f"k_min={self.k_min:.6g} forces consumption below {self.c_floor:.6g}"
                )
            if reward_rows is not None:
                r = reward_rows[lo:hi]
            else:
                cons = out[:, None] - self.grid[None, :]
                feas = self.grid[None, :] <= cap[:, None]
                with np.errstate(divide="ignore", invalid="ignore"):
                    r = np.where(feas, reward(np.where(feas, cons, 1.0)), -np.inf)
                r = np.where(np.isnan(r), -np.inf, r)
            obj = r + node_cont[None, :]
            j = np.argmax(obj, axis=1)
            rows = np.arange(hi - lo)
            best_node = obj[rows, j]
            last = self.grid.size - 1
            a = self.grid[np.maximum(j - 1, 0)]
            b = np.minimum(self.grid[np.minimum(j + 1, last)], cap)
            # the reward is -inf exactly at the cap; stay strictly inside
            b = np.where(b >= cap, cap - 1e-12 * np.maximum(cap, 1.0), b)
            b = np.maximum(b, a)

            def f(y):
                with np.errstate(divide="ignore", invalid="ignore"):
                    val = reward(out - y) + discount * cont(y)
                return np.where(np.isnan(val), -np.inf, val)

            grad = getattr(reward, "grad", None)
            # with a polish to follow, golden section only has to land in its bracket
            y, val = golden_max(f, a, b, rtol=1e-9 if grad is not None else 1e-15)
            if grad is not None:
                y, val = self._polish(f, grad, cont, discount, out, y, val, a, b)
            better = val >= best_node
            return np.where(better, val, best_node), np.where(better, y, self.grid[j])

        return self._map_chunks(work, states.size)


    @staticmethod
    def _polish(f, grad, cont, discount, out, y, val, a, b):
        def slope(z):
            with np.errstate(divide="ignore", invalid="ignore"):
                return -grad(out - z) + discount * cont.derivative(z)

        # shrink to a bracket around the golden point where the slope changes sign
        w = np.maximum(1e-6 * np.abs(y), 1e-8)
        lo = np.maximum(y - w, a)
        hi = np.minimum(y + w, b)
        ok = (slope(lo) > 0) & (slope(hi) < 0)
        if not np.any(ok):
            return y, val
        for _ in range(POLISH_ITERS):
            mid = 0.5 * (lo + hi)
            up = slope(mid) > 0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
        z = np.where(ok, 0.5 * (lo + hi), y)
        fz = f(z)
        # accept unless the value is materially worse (differences here sit at roundoff)
        keep = ok & (fz >= val - 1e-13 * np.maximum(1.0, np.abs(val)))
        return np.where(keep, z, y), np.where(keep, np.maximum(fz, val), val)


def golden_max(f, a, b, iters: int = GOLDEN_ITERS, rtol: float = 1e-15):
    """Vectorised golden-section search for the maximum of unimodal ``f`` on ``[a, b]``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + GOLDEN * (b - a))
        c_new = np.where(left, b - GOLDEN * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        # one fresh evaluation per lane
        fresh = f(np.where(left, c, d))
        fc = np.where(left, fresh, fc_new)
        fd = np.where(left, fd_new, fresh)
        if np.all(b - a <= rtol * np.maximum(1.0, np.abs(b))):
            break
    y = 0.5 * (a + b)
    cand = np.stack([a, y, b])
    vals = np.stack([f(a), f(y), f(b)])
    k = np.argmax(vals, axis=0)
    idx = np.arange(y.size)
    return cand[k, idx], vals[k, idx]


def value_iteration(problem: BellmanProblem, reward: Reward, discount: float, *,
                    kind: str = "cubic", tol: float = 1e-10, max_iter: int = 5000,
                    howard: int = 30, v0=None, reward_key=None):
    """Solve the stationary Bellman equation on the grid.

    Iterates until the sup-norm change of a full maximisation step is at most
    ``tol * (1 - discount)``. ``howard > 0`` inserts that many policy
    evaluation sweeps after each maximisation (modified policy iteration);
    ``howard = 0`` is plain value iteration. Returns
    ``(values, policy, history)`` with the sup-norm changes per step.
    """
    grid = problem.grid
    rows = problem.reward_matrix(reward, key=reward_key)
    out = problem.output(grid)
    v = np.zeros_like(grid) if v0 is None else np.array(v0, dtype=float)
    history = []
    for _ in range(max_iter):
        v_new, pol = problem.maximize(grid, reward, Interpolant(grid, v, kind), discount, rows)
        if not np.all(np.isfinite(v_new)):
            raise SolverError("value iteration produced non-finite values")
        diff = float(np.max(np.abs(v_new - v)))
        history.append(diff)
        v = v_new
        if diff <= tol * (1.0 - discount):
            return v, pol, history
        if howard:
            with np.errstate(divide="ignore"):
                r_pol = reward(out - pol)
            for _ in range(howard):
                v = r_pol + discount * Interpolant(grid, v, kind)(pol)
    raise SolverError(
        f"value iteration did not converge in {max_iter} steps (last change {history[-1]:.3e})"
    )
