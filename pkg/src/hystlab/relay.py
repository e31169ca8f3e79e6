"""Scalar relay hysteresis driven by piecewise-linear inputs.

* :func:`relay_trace` is the non-ideal relay with branches ``H1`` (on
  ``u <= beta``) and ``H_m1`` (on ``u >= alpha``).  Reaching a threshold
  switches the relay; the instant is the exact root of the linear piece.
* :func:`alt_relay_trace` is the relay with intermediate values.  While the
  input dwells on a threshold the output moves linearly towards the other
  branch at ``ramp_rate``; once the input leaves the threshold an
  unfinished transition completes instantly.
* :func:`completed_relay_admissible` tests whether a sampled output is one
  of the admissible outputs of the set-valued completed relay.

Outputs are right-continuous.  :class:`RelayOutput` stores both one-sided
limits at every sample, so jumps are explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, GridMismatch, InconsistentInitialData, ValidationError

Branch = Callable[[float], float]


def _const(value: float) -> Branch:
    def branch(u):
        return value + 0.0 * np.asarray(u, dtype=float)

    branch.constant = value  # type: ignore[attr-defined]
    return branch


@dataclass(frozen=True)
class RelayParams:
    """Thresholds ``alpha < beta`` and branches; ``alpha=None`` means no lower threshold."""

    alpha: float | None
    beta: float
    branch_hi: Branch
    branch_lo: Branch

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta):
            raise ValidationError("beta must be finite")
        if self.alpha is not None:
            if not self.alpha < self.beta:
                raise ValidationError(f"need alpha < beta, got {self.alpha} >= {self.beta}")
            us = np.linspace(self.alpha, self.beta, 33)
            if np.any(np.asarray(self.branch_hi(us)) == np.asarray(self.branch_lo(us))):
                raise ValidationError("branches must differ on [alpha, beta]")

    @classmethod
    def constant(cls, alpha: float | None, beta: float, h1: float = 1.0, h_m1: float = -1.0) -> "RelayParams":
        return cls(alpha, beta, _const(h1), _const(h_m1))

    def H(self, xi: int, u: float) -> float:
        return float((self.branch_hi if xi > 0 else self.branch_lo)(u))

    def constant_branches(self) -> tuple[float, float] | None:
        hi = getattr(self.branch_hi, "constant", None)
        lo = getattr(self.branch_lo, "constant", None)
        return None if hi is None or lo is None else (hi, lo)


@dataclass(frozen=True)
class RelayState:
    xi: int
    xi0: int
    switched_at: float | None = None


@dataclass(frozen=True)
class Signal:
    """Continuous piecewise-linear function through ``(times[i], values[i])``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValidationError("times and values must be 1-D of equal, non-zero length")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("signal samples must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    def resample(self, times) -> "Signal":
        """The same piecewise-linear function sampled at ``times`` (within the range)."""
        return Signal(times, np.interp(times, self.times, self.values))

    def concat(self, other: "Signal") -> "Signal":
        """Append ``other``; its first sample must coincide with our last one."""
        if other.times[0] != self.times[-1] or other.values[0] != self.values[-1]:
            raise ValidationError("signals do not join continuously")
        return Signal(np.concatenate([self.times, other.times[1:]]),
                      np.concatenate([self.values, other.values[1:]]))


@dataclass(frozen=True)
class RelayOutput:
    """Relay output sampled at ``times``: right limits ``values``, left limits ``left``."""

    times: np.ndarray
    values: np.ndarray
    left: np.ndarray
    xi: np.ndarray
    switches: tuple[tuple[float, int], ...]

    def as_signal(self) -> Signal:
        return Signal(self.times, self.values)


def _check_xi(xi0: int) -> int:
    if xi0 not in (-1, 1):
        raise ValidationError(f"initial configuration must be -1 or +1, got {xi0}")
    return int(xi0)


def relay_init(params: RelayParams, xi0: int, u0: float) -> RelayState:
    """Initial state; ``u0 >= beta`` forces ``xi = -1`` and ``u0 <= alpha`` forces ``xi = +1``."""
    xi0 = _check_xi(xi0)
    if u0 > params.beta and xi0 == 1:
        raise InconsistentInitialData(f"u0={u0} above beta={params.beta} requires xi0=-1")
    if params.alpha is not None and u0 < params.alpha and xi0 == -1:
        raise InconsistentInitialData(f"u0={u0} below alpha={params.alpha} requires xi0=+1")
    if u0 >= params.beta and xi0 == 1:
        return RelayState(xi=-1, xi0=xi0, switched_at=0.0)
    if params.alpha is not None and u0 <= params.alpha and xi0 == -1:
        return RelayState(xi=1, xi0=xi0, switched_at=0.0)
    return RelayState(xi=xi0, xi0=xi0)


def _hit(threshold: float, t0: float, t1: float, u0: float, u1: float, rising: bool) -> float | None:
    """First time in (t0, t1] where the linear piece reaches ``threshold`` from the given side."""
    if rising and u0 < threshold <= u1 or not rising and u0 > threshold >= u1:
        if u1 == threshold:
            return t1
        tau = t0 + (threshold - u0) / (u1 - u0) * (t1 - t0)
        return min(max(tau, t0), t1)
    return None


def relay_trace(params: RelayParams, state0: RelayState, signal: Signal) -> tuple[RelayOutput, RelayState]:
    """Non-ideal relay output ``v(t) = H_xi(t)(u(t))`` along a piecewise-linear input."""
    t, u = signal.times, signal.values
    xi = state0.xi
    first = state0.switched_at
    if u[0] > params.beta and xi == 1 or params.alpha is not None and u[0] < params.alpha and xi == -1:
        raise InconsistentInitialData("state does not match the first input sample")
    # touch-equals-switch on the first sample as well
    switches: list[tuple[float, int]] = []
    v0_left = params.H(xi, u[0])
    if xi == 1 and u[0] >= params.beta or xi == -1 and params.alpha is not None and u[0] <= params.alpha:
        xi = -xi
        switches.append((float(t[0]), xi))
    times, right, left, xis = [t[0]], [params.H(xi, u[0])], [v0_left], [xi]
    for k in range(len(t) - 1):
        t0, t1, u0, u1 = t[k], t[k + 1], u[k], u[k + 1]
        tau = None
        if xi == 1:
            tau = _hit(params.beta, t0, t1, u0, u1, rising=True)
        elif params.alpha is not None:
            tau = _hit(params.alpha, t0, t1, u0, u1, rising=False)
        if tau is not None:
            u_tau = params.beta if xi == 1 else params.alpha
            before = params.H(xi, u_tau)
            xi = -xi
            switches.append((float(tau), xi))
            if tau < t1:
                times.append(tau)
                left.append(before)
                right.append(params.H(xi, u_tau))
                xis.append(xi)
                before = None
            left_t1 = params.H(xi, u1) if before is None else before
        else:
            left_t1 = params.H(xi, u1)
        if xi == 1 and u1 > params.beta or xi == -1 and params.alpha is not None and u1 < params.alpha:
            raise DomainError(f"input left the domain of branch {xi} at t={t1}")
        times.append(t1)
        left.append(left_t1)
        right.append(params.H(xi, u1))
        xis.append(xi)
    if switches and first is None:
        first = switches[0][0]
    out = RelayOutput(np.array(times), np.array(right), np.array(left), np.array(xis), tuple(switches))
    return out, RelayState(xi=xi, xi0=state0.xi0, switched_at=first)


def alt_relay_trace(params: RelayParams, xi0: int, signal: Signal, ramp_rate: float = 1.0) -> RelayOutput:
    """Relay with intermediate values for constant branches ``+1`` / ``-1``.

    On a dwell at ``beta`` the output decreases at ``ramp_rate`` (increases at
    ``alpha``); when the input leaves the threshold with the output strictly
    between the branches, the output jumps to the branch on the far side.
    """
    if params.constant_branches() != (1.0, -1.0):
        raise ValidationError("the Alt relay is defined for constant branches +1 and -1")
    if not ramp_rate > 0:
        raise ValidationError("ramp_rate must be positive")
    xi0 = _check_xi(xi0)
    alpha, beta = params.alpha, params.beta
    t, u = signal.times, signal.values
    if u[0] > beta and xi0 == 1 or alpha is not None and u[0] < alpha and xi0 == -1:
        raise InconsistentInitialData("xi0 does not match the first input sample")

    def at(k: int, level: float | None) -> bool:
        return level is not None and u[k] == level

    def dwell(k: int, level: float | None) -> bool:
        return k + 1 < len(u) and at(k, level) and at(k + 1, level)

    v = float(xi0)
    switches: list[tuple[float, int]] = []
    times, right, left, xis = [], [], [], []

    def emit(tk: float, v_left: float, v_right: float) -> None:
        times.append(tk)
        left.append(v_left)
        right.append(v_right)
        xis.append(1 if v_right > 0 else -1)

    def settle(k: int, v_in: float) -> float:
        """Right limit at sample k given the left limit ``v_in``."""
        if k == len(u) - 1:
            return v_in  # what follows the last sample is unknown
        if v_in > -1 and at(k, beta) and not dwell(k, beta):
            return -1.0
        if v_in < 1 and at(k, alpha) and not dwell(k, alpha):
            return 1.0
        return v_in

    v_r = settle(0, v)
    if v_r != v:
        switches.append((float(t[0]), int(v_r)))
    emit(t[0], v, v_r)
    v = v_r
    for k in range(len(t) - 1):
        t0, t1, u0, u1 = t[k], t[k + 1], u[k], u[k + 1]
        if dwell(k, beta):
            v_end = max(-1.0, v - ramp_rate * (t1 - t0))
        elif dwell(k, alpha):
            v_end = min(1.0, v + ramp_rate * (t1 - t0))
        else:
            v_end = v
            tau = None
            if v > -1 and u1 != beta:
                tau = _hit(beta, t0, t1, u0, u1, rising=True)
            if tau is None and v < 1 and alpha is not None and u1 != alpha:
                tau = _hit(alpha, t0, t1, u0, u1, rising=False)
            if tau is not None and t0 < tau < t1:
                v_end = -1.0 if u1 > u0 else 1.0
                switches.append((float(tau), int(v_end)))
                emit(tau, v, v_end)
        v_r = settle(k + 1, v_end)
        if v_r != v_end:
            switches.append((float(t1), int(v_r)))
        emit(t1, v_end, v_r)
        v = v_r
    return RelayOutput(np.array(times), np.array(right), np.array(left), np.array(xis), tuple(switches))


def completed_relay_admissible(params: RelayParams, xi0: float, signal: Signal, candidate: Signal,
                               tol: float = 1e-12) -> bool:
    """Whether ``candidate`` is an admissible completed-relay output at sampled resolution.

    Checked items: graph membership, the initial value, constancy while the
    input stays strictly between the thresholds, and monotonicity (down at
    ``beta``, up at ``alpha``) on pieces that touch a threshold.
    """
    if params.constant_branches() != (1.0, -1.0):
        raise ValidationError("the completed relay is defined for constant branches +1 and -1")
    if not -1.0 <= xi0 <= 1.0:
        raise ValidationError("xi0 must lie in [-1, 1]")
    if candidate.times.shape != signal.times.shape or np.any(candidate.times != signal.times):
        raise GridMismatch("candidate and input are sampled on different time grids")
    alpha = -math.inf if params.alpha is None else params.alpha
    beta = params.beta
    u, v = signal.values, candidate.values

    for uk, vk in zip(u, v):
        on_hi = abs(vk - 1.0) <= tol and uk <= beta + tol
        on_lo = abs(vk + 1.0) <= tol and uk >= alpha - tol
        between = -1.0 < vk < 1.0 and alpha - tol <= uk <= beta + tol
        if not (on_hi or on_lo or between):
            return False

    u0, v0 = u[0], v[0]
    if alpha + tol < u0 < beta - tol and abs(v0 - xi0) > tol:
        return False
    if abs(u0 - alpha) <= tol and not xi0 - tol <= v0 <= 1.0 + tol:
        return False
    if abs(u0 - beta) <= tol and not -1.0 - tol <= v0 <= xi0 + tol:
        return False

    for k in range(len(u) - 1):
        lo, hi = min(u[k], u[k + 1]), max(u[k], u[k + 1])
        dv = v[k + 1] - v[k]
        may_fall = lo - tol <= beta <= hi + tol
        may_rise = lo - tol <= alpha <= hi + tol
        if dv < -tol and not may_fall or dv > tol and not may_rise:
            return False
    return True
