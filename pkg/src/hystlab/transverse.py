"""Free-boundary problem for the heat equation with a relay source on (0, 1).

    u_t = u_xx + F,   F = h1 where xi = 1 and h_m1 where xi = -1,   u_x = 0 at x = 0, 1.

The configuration ``xi`` is piecewise constant with discontinuity points
``b_1(t) < ... < b_k(t)``; ``xi_left`` is its value left of ``b_1``.  A point
moves only when ``u`` reaches a threshold on one of its sides: ``beta`` on the
``xi = 1`` side, ``alpha`` on the ``xi = -1`` side.  The point then follows the
running maximum of the threshold root in that direction.

The solution is found as a fixed point of ``R``: solve the heat equation with
the forcing frozen along a trial curve ``b0``, read off the curve ``b`` from
the result, repeat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import NoConvergence, TransversalityLost, ValidationError


@dataclass(frozen=True)
class TransverseProblem:
    phi: Callable[[np.ndarray], np.ndarray]
    b_bar: tuple[float, ...]
    alpha: float
    beta: float
    h1: float
    h_m1: float
    T: float
    xi_left: int = -1
    cells: int = 2000
    steps: int = 400
    tol_slope: float = 1e-6
    topology: str = "continue"

    def __post_init__(self) -> None:
        b = tuple(float(p) for p in np.atleast_1d(self.b_bar))
        object.__setattr__(self, "b_bar", b)
        if not self.alpha < self.beta:
            raise ValidationError("need alpha < beta")
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if self.xi_left not in (-1, 1):
            raise ValidationError("xi_left must be 1 or -1")
        if self.cells < 4 or self.steps < 1:
            raise ValidationError("need at least 4 cells and 1 step")
        if any(not 0.0 < p < 1.0 for p in b) or any(q <= p for p, q in zip(b, b[1:])):
            raise ValidationError("discontinuity points must be increasing inside (0, 1)")
        if self.topology not in ("continue", "raise"):
            raise ValidationError("topology must be 'continue' or 'raise'")
        self.check_consistency()

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) / self.cells

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)

    def xi0(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flips = np.searchsorted(np.asarray(self.b_bar), x, side="left")
        return self.xi_left * np.where(flips % 2 == 0, 1, -1)

    def check_consistency(self, tol: float = 1e-12, samples: int = 4001) -> None:
        """``phi < beta`` where ``xi = 1`` and ``phi > alpha`` where ``xi = -1``; a touch at a
        discontinuity point needs a nonzero slope there."""
        x = (np.arange(samples) + 0.5) / samples
        phi = np.asarray(self.phi(x), dtype=float)
        xi = self.xi0(x)
        near = np.min(np.abs(x[:, None] - np.asarray(self.b_bar)[None, :]), axis=1) < 2.0 / samples
        bad = ((xi == 1) & (phi >= self.beta + tol)) | ((xi == -1) & (phi <= self.alpha - tol))
        bad &= ~near
        if bad.any():
            raise ValidationError(f"initial data inconsistent with the configuration near x={x[bad][0]:.4g}")
        for p in self.b_bar:
            for thr in (self.alpha, self.beta):
                if abs(float(self.phi(np.array([p]))[0]) - thr) <= tol:
                    d = 1e-6
                    slope = (self.phi(np.array([p + d]))[0] - self.phi(np.array([p - d]))[0]) / (2 * d)
                    if abs(slope) <= self.tol_slope:
                        raise ValidationError(f"data touch the threshold at b={p} with zero slope")

    def with_T(self, T: float) -> "TransverseProblem":
        steps = max(1, int(round(self.steps * T / self.T)))
        return TransverseProblem(self.phi, self.b_bar, self.alpha, self.beta, self.h1, self.h_m1, T,
                                 self.xi_left, self.cells, steps, self.tol_slope, self.topology)


@dataclass
class BoundaryCurve:
    """Discontinuity points per time step; ``nan`` once a point has disappeared."""

    times: np.ndarray
    b: np.ndarray  # (steps + 1, points)
    a: np.ndarray  # threshold root per point where the point is driven, else nan
    xi_left: np.ndarray  # (steps + 1,)
    events: list = field(default_factory=list)

    @classmethod
    def constant(cls, problem: TransverseProblem) -> "BoundaryCurve":
        t = problem.times
        b = np.tile(np.asarray(problem.b_bar), (t.size, 1))
        return cls(t, b, np.full_like(b, np.nan), np.full(t.size, problem.xi_left))

    @classmethod
    def from_function(cls, problem: TransverseProblem, fun) -> "BoundaryCurve":
        t = problem.times
        b = np.array([np.atleast_1d(fun(s)) for s in t], dtype=float).reshape(t.size, -1)
        return cls(t, b, np.full_like(b, np.nan), np.full(t.size, problem.xi_left))

    def distance(self, other: "BoundaryCurve") -> float:
        """Sup-norm distance; a point that exists in only one curve counts as distance 1."""
        if self.b.shape != other.b.shape:
            return 1.0
        both = np.isfinite(self.b) & np.isfinite(other.b)
        if np.any(np.isfinite(self.b) != np.isfinite(other.b)) or np.any(self.xi_left != other.xi_left):
            return 1.0
        return float(np.max(np.abs(self.b[both] - other.b[both]), initial=0.0))

    def blend(self, other: "BoundaryCurve", lam: float) -> "BoundaryCurve":
        return BoundaryCurve(self.times, (1.0 - lam) * self.b + lam * other.b, other.a.copy(),
                             other.xi_left.copy(), list(other.events))


@dataclass
class HeatSolution:
    x: np.ndarray
    times: np.ndarray
    u: np.ndarray  # (steps + 1, cells)

    def at(self, x, t: float) -> np.ndarray:
        """Linear interpolation in x and t; constant beyond the outer cell centres."""
        k = int(np.clip(np.searchsorted(self.times, t) - 1, 0, self.times.size - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        prof = (1.0 - w) * self.u[k] + w * self.u[k + 1]
        return np.interp(x, self.x, prof)

    def slope(self) -> np.ndarray:
        h = self.x[1] - self.x[0]
        return np.diff(self.u, axis=1) / h


def _neumann_bands(m: int) -> np.ndarray:
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[2, :-1] = 1.0
    ab[1, :] = -2.0
    ab[1, 0] = ab[1, -1] = -1.0
    return ab * m * m


def _apply(ab: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = ab[1] * u
    out[:-1] += ab[0, 1:] * u[1:]
    out[1:] += ab[2, :-1] * u[:-1]
    return out


def cell_configuration(points, xi_left: int, cells: int) -> np.ndarray:
    """Cell averages of xi for the discontinuity points (nan entries ignored)."""
    edges_l = np.arange(cells) / cells
    xi = np.ones(cells)
    sign = -2.0
    for p in sorted(p for p in np.atleast_1d(points) if np.isfinite(p)):
        right_of = np.clip((edges_l + 1.0 / cells - p) * cells, 0.0, 1.0)
        xi += sign * right_of
        sign = -sign
    return xi_left * xi


def heat_solve_forced(problem: TransverseProblem, b0: BoundaryCurve) -> HeatSolution:
    """Crank-Nicolson on cell centres with the forcing frozen along ``b0``."""
    m = problem.cells
    x = problem.x
    t = problem.times
    if b0.times.shape != t.shape:
        raise ValidationError("trial curve must live on the problem's time grid")
    ab = _neumann_bands(m)
    mean, jump = 0.5 * (problem.h1 + problem.h_m1), 0.5 * (problem.h1 - problem.h_m1)

    def forcing(k):
        return mean + jump * cell_configuration(b0.b[k], int(b0.xi_left[k]), m)

    u = np.empty((t.size, m))
    u[0] = problem.phi(x)
    f_prev = forcing(0)
    for k in range(1, t.size):
        dt = t[k] - t[k - 1]
        lhs = -0.5 * dt * ab
        lhs[1] += 1.0
        f_next = forcing(k)
        rhs = u[k - 1] + 0.5 * dt * _apply(ab, u[k - 1]) + 0.5 * dt * (f_prev + f_next)
        u[k] = solve_banded((1, 1), lhs, rhs)
        f_prev = f_next
    if not np.all(np.isfinite(u)):
        raise NoConvergence("heat solver produced non-finite values")
    return HeatSolution(x, t, u)


def _march(xs: np.ndarray, w: np.ndarray, start: float, direction: int, limit: float):
    """First root of ``w`` (sampled at ``xs``) going from ``start`` towards ``limit``.

    Returns ``(root, slope)``, ``(None, None)`` when ``w < 0`` at ``start`` and
    ``(limit, None)`` when ``w`` stays non-negative all the way.
    """
    w_start = float(np.interp(start, xs, w))
    if w_start < 0.0:
        return None, None
    if direction > 0:
        idx = np.flatnonzero((xs > start) & (xs < limit))
    else:
        idx = np.flatnonzero((xs < start) & (xs > limit))[::-1]
    prev_x, prev_w = start, w_start
    for i in idx:
        if w[i] < 0.0:
            root = prev_x + (xs[i] - prev_x) * prev_w / (prev_w - w[i])
            slope = (w[i] - prev_w) / (xs[i] - prev_x)
            return float(root), float(slope)
        prev_x, prev_w = xs[i], w[i]
    end_w = float(np.interp(limit, xs, w))
    if end_w < 0.0:
        root = prev_x + (limit - prev_x) * prev_w / (prev_w - end_w)
        return float(root), float((end_w - prev_w) / (limit - prev_x))
    return float(limit), None


def boundary_from_solution(problem: TransverseProblem, sol: HeatSolution) -> BoundaryCurve:
    """Discontinuity points read off ``u`` by the running-maximum law with topology changes."""
    xs = sol.x
    t = sol.times
    k0 = len(problem.b_bar)
    b = np.full((t.size, k0), np.nan)
    a = np.full((t.size, k0), np.nan)
    xi_left = np.empty(t.size, dtype=int)
    live = list(range(k0))
    pos = np.array(problem.b_bar, dtype=float)
    left = problem.xi_left
    b[0] = pos
    xi_left[0] = left
    events = []

    def lost(msg):
        raise TransversalityLost(msg)

    for n in range(1, t.size):
        u = sol.u[n]
        new = pos.copy()
        for j, p in enumerate(live):
            xi_right = left * (-1) ** (j + 1)
            lo = pos[live[j - 1]] if j > 0 else 0.0
            hi = pos[live[j + 1]] if j + 1 < len(live) else 1.0
            # beta on the xi = 1 side pushes the point into that side; alpha on the other side
            for w, direction in ((u - problem.beta, xi_right), (problem.alpha - u, -xi_right)):
                limit = hi if direction > 0 else lo
                root, slope = _march(xs, w, pos[p], direction, limit)
                if root is None:
                    continue
                if slope is not None and abs(slope) < problem.tol_slope:
                    lost(f"|u_x| = {abs(slope):.3g} at the threshold root x={root:.6g}, t={t[n]:.6g}")
                a[n, p] = root
                new[p] = max(new[p], root) if direction > 0 else min(new[p], root)
        pos = new
        # topology changes: points meeting each other or the ends of the interval
        changed = True
        while changed:
            changed = False
            for j in range(len(live) - 1):
                p, q = live[j], live[j + 1]
                if pos[p] >= pos[q]:
                    if problem.topology == "raise":
                        lost(f"points {p} and {q} merge at t={t[n]:.6g}")
                    events.append(("merge", float(t[n]), p, q, float(0.5 * (pos[p] + pos[q]))))
                    live = live[:j] + live[j + 2:]
                    changed = True
                    break
            if live and pos[live[0]] <= 0.0:
                if problem.topology == "raise":
                    lost(f"point {live[0]} leaves (0, 1) at t={t[n]:.6g}")
                events.append(("absorb", float(t[n]), live[0], 0.0))
                live = live[1:]
                left = -left
                changed = True
            if live and pos[live[-1]] >= 1.0:
                if problem.topology == "raise":
                    lost(f"point {live[-1]} leaves (0, 1) at t={t[n]:.6g}")
                events.append(("absorb", float(t[n]), live[-1], 1.0))
                live = live[:-1]
                changed = True
        for p in live:
            b[n, p] = pos[p]
        xi_left[n] = left
    return BoundaryCurve(t.copy(), b, a, xi_left, events)


def boundary_map(problem: TransverseProblem, b0: BoundaryCurve) -> tuple[BoundaryCurve, HeatSolution]:
    """One application of R together with the heat solution it came from."""
    sol = heat_solve_forced(problem, b0)
    return boundary_from_solution(problem, sol), sol


@dataclass
class FixedPointResult:
    u: HeatSolution
    curve: BoundaryCurve
    iterations: int
    residual: float
    T: float
    damping: float
    problem: TransverseProblem
    log: list[dict] = field(default_factory=list)


def fixed_point_solve(problem: TransverseProblem, tol_fp: float = 1e-6, max_iter: int = 50,
                      b_init: BoundaryCurve | None = None, damping: float = 1.0,
                      min_damping: float = 0.125, max_halvings: int = 4) -> FixedPointResult:
    """Damped Picard iteration ``b <- (1 - lam) b + lam R(b)``.

    When the residual stops decreasing for five iterations the damping is
    halved, down to ``min_damping``; after that the horizon is halved.
    """
    log: list[dict] = []
    total = 0
    prob = problem
    for _ in range(max_halvings + 1):
        lam = damping
        b = b_init if (b_init is not None and prob is problem) else BoundaryCurve.constant(prob)
        best, since = math.inf, 0
        while total < max_iter * (max_halvings + 1):
            Rb, sol = boundary_map(prob, b)
            total += 1
            res = b.distance(Rb)
            slope = np.abs(sol.slope())
            log.append({"iteration": total, "T": prob.T, "damping": lam, "residual": res,
                        "sup_u": float(np.max(np.abs(sol.u))), "sup_ux": float(slope.max())})
            if res <= tol_fp:
                return FixedPointResult(sol, Rb, total, res, prob.T, lam, prob, log)
            if res < best * (1.0 - 1e-3):
                best, since = res, 0
            else:
                since += 1
            if since >= 5 or len([e for e in log if e["T"] == prob.T and e["damping"] == lam]) >= max_iter:
                if lam / 2 >= min_damping:
                    lam /= 2
                    best, since = math.inf, 0
                    continue
                break
            if Rb.b.shape != b.b.shape or np.any(np.isfinite(Rb.b) != np.isfinite(b.b)):
                b = Rb
            else:
                b = b.blend(Rb, lam)
        prob = prob.with_T(prob.T / 2)
    raise NoConvergence(f"no fixed point within tolerance {tol_fp:g} after {total} iterations and "
                        f"{max_halvings} halvings of T")


@dataclass(frozen=True)
class ContinuityProbe:
    etas: np.ndarray
    differences: np.ndarray
    exponent: float


def continuity_probe(problem: TransverseProblem, base: BoundaryCurve,
                     etas: Sequence[float] = (1e-2, 3e-3, 1e-3, 3e-4)) -> ContinuityProbe:
    """Exponent ``s`` in ``|R(b01) - R(b02)| ~ |b01 - b02|^s`` for ramp perturbations of size eta."""
    R0, _ = boundary_map(problem, base)
    ramp = (base.times / base.times[-1])[:, None]
    diffs = []
    for eta in etas:
        moved = BoundaryCurve(base.times, base.b + eta * ramp, base.a, base.xi_left)
        R1, _ = boundary_map(problem, moved)
        diffs.append(R0.distance(R1))
    diffs = np.asarray(diffs)
    etas = np.asarray(etas, dtype=float)
    keep = diffs > 0
    if keep.sum() < 2:
        return ContinuityProbe(etas, diffs, math.inf)
    slope = float(np.polyfit(np.log(etas[keep]), np.log(diffs[keep]), 1)[0])
    return ContinuityProbe(etas, diffs, slope)
