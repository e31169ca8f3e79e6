"""Lattice heat kernel, the discrete Green function y_n(t) and its profile f.

``y_n(t)`` solves ``dy_n/dt = y_{n+1} - 2 y_n + y_{n-1} + [n == 0]`` with
``y_n(0) = 0``.  It is the time integral of the lattice heat kernel
``p_n(t) = exp(-2t) I_n(2t)``.  Three evaluation routes are provided:

* ``"series"``: summing the lattice equation over ``m > n`` telescopes to
  ``y_n - y_{n+1} = sum_{m>n} p_m``, hence ``y_n = sum_{m>n} (m - n) p_m``.
  Both sums run over positive terms only (two reverse cumulative sums).
* ``"quad"``: adaptive quadrature of ``p_n`` over ``[0, t]``.
* ``"ode"``: direct integration of the lattice system on a truncated window
  with zero-flux ends.

Validated range: ``|n| <= 10_000`` and ``t <= 1e7``; outside it
``heat_kernel`` raises ``OverflowError``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import QuadratureFailure, ToleranceNotMet, ValidationError

TOL_GREEN = 1e-9
N_MAX_VALIDATED = 10_000
T_MAX_VALIDATED = 1e7
SQRT_PI = math.sqrt(math.pi)


def _check_range(n, t) -> None:
    if np.any(np.asarray(t) < 0):
        raise ValidationError("t must be non-negative")
    if np.any(np.abs(n) > N_MAX_VALIDATED) or np.any(np.asarray(t) > T_MAX_VALIDATED):
        raise OverflowError(f"(n, t) outside the validated range |n| <= {N_MAX_VALIDATED}, t <= {T_MAX_VALIDATED:g}")


def heat_kernel(n, t):
    """p_n(t), the lattice heat kernel started from a unit mass at node 0."""
    _check_range(n, t)
    return special.ive(np.abs(n), 2.0 * np.asarray(t, dtype=float))


def _kernel_cutoff(n_max: int, t: float) -> int:
    # p_m is negligible beyond ~14 standard deviations (variance 2t)
    return int(n_max) + int(20.0 * math.sqrt(t)) + 40


def _green_series_all(n_max: int, t: float) -> np.ndarray:
    """y_0(t) .. y_{n_max}(t) from the tail sums of the heat kernel."""
    m = np.arange(_kernel_cutoff(n_max, t) + 2)
    p = special.ive(m, 2.0 * t)
    tail = np.cumsum(p[::-1])[::-1]  # tail[k] = sum_{m >= k} p_m
    tail_gt = tail[1:]  # sum_{m > n} p_m for n = 0, 1, ...
    y = np.cumsum(tail_gt[::-1])[::-1]  # sum_{j >= n} sum_{m > j} p_m
    return y[: n_max + 1]


def _green_quad(n: int, t: float) -> float:
    if t == 0.0:
        return 0.0
    # s = r^2 removes the sqrt-type behaviour of p_n at large s
    def integrand(r):
        return 2.0 * r * special.ive(abs(n), 2.0 * r * r)

    val, err = integrate.quad(integrand, 0.0, math.sqrt(t), epsabs=1e-13, epsrel=1e-13, limit=500)
    if err > TOL_GREEN:
        raise QuadratureFailure(f"quadrature error {err:.3g} for y_{n}({t})")
    return val


def _ode_window(n: int, t: float) -> int:
    return int(max(4.0 * math.sqrt(t) + 50, abs(n) + 50))


def green_y_ode(n: int, t: float, half_width: int | None = None) -> float:
    """y_n(t) by integrating the lattice system on ``|k| <= half_width``."""
    if t == 0.0:
        return 0.0
    W = half_width or _ode_window(n, t)
    size = W + 1  # even symmetry: nodes 0..W, y_{-1} = y_1

    def rhs(_, y):
        d = np.empty_like(y)
        d[0] = 2.0 * (y[1] - y[0]) + 1.0
        d[1:-1] = y[2:] - 2.0 * y[1:-1] + y[:-2]
        d[-1] = y[-2] - y[-1]
        return d

    sol = integrate.solve_ivp(rhs, (0.0, t), np.zeros(size), method="DOP853", rtol=1e-12, atol=1e-13)
    if not sol.success:
        raise ToleranceNotMet(sol.message)
    k = abs(n)
    return float(sol.y[k, -1]) if k <= W else 0.0


def green_y(n, t, method: str = "series", check: bool = False, tol: float = TOL_GREEN):
    """Discrete Green function y_n(t); vectorized over ``n`` for ``method='series'``.

    With ``check=True`` the value is re-derived through the ODE route and
    :class:`ToleranceNotMet` is raised when the two disagree by more than
    ``10 * tol``.
    """
    t = float(t)
    _check_range(n, t)
    n_arr = np.abs(np.atleast_1d(np.asarray(n, dtype=int)))
    if method == "series":
        out = np.zeros(n_arr.shape) if t == 0.0 else _green_series_all(int(n_arr.max()), t)[n_arr]
    elif method == "quad":
        out = np.array([_green_quad(int(k), t) for k in n_arr])
    elif method == "ode":
        out = np.array([green_y_ode(int(k), t) for k in n_arr])
    else:
        raise ValidationError(f"unknown method {method!r}")
    if check:
        ref = np.array([green_y_ode(int(k), t) for k in n_arr])
        gap = np.max(np.abs(out - ref))
        if gap > 10 * tol:
            raise ToleranceNotMet(f"green_y routes disagree by {gap:.3g}")
    return float(out[0]) if np.ndim(n) == 0 else out


def h_gauss(x):
    return np.exp(-np.square(x) / 4.0) / (2.0 * SQRT_PI)


def f_profile(x):
    """f(x) = 2x int_x^inf h(y) / y^2 dy, in closed form.

    Integration by parts gives ``f(x) = exp(-x^2/4)/sqrt(pi) - (x/2) erfc(x/2)``;
    the scaled ``erfcx`` keeps it accurate in the Gaussian tail.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValidationError("f_profile needs x >= 0")
    e = np.exp(-x * x / 4.0)
    out = e * (1.0 / SQRT_PI - 0.5 * x * special.erfcx(x / 2.0))
    return float(out) if out.ndim == 0 else out


def f_profile_quad(x: float, rule: str = "adaptive") -> float:
    """f(x) by quadrature; substituting y = x/s gives ``2 int_0^1 h(x/s) ds``."""
    if x < 0:
        raise ValidationError("f_profile needs x >= 0")

    def integrand(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            out = h_gauss(np.where(s > 0, x / np.where(s > 0, s, 1.0), np.inf))
        return np.where(s > 0, out, 0.0 if x > 0 else h_gauss(0.0))

    if rule == "adaptive":
        # h(x/s) only lives near s = 1 once x is large
        lo = max(0.0, 1.0 - 40.0 / max(x, 1e-300)) if x > 40 else 0.0
        val, _ = integrate.quad(lambda s: float(integrand(s)), lo, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        return 2.0 * val
    if rule == "gauss":
        nodes, weights = np.polynomial.legendre.leggauss(200)
        s = 0.5 * (nodes + 1.0)
        return float(np.sum(weights * integrand(s)))
    raise ValidationError(f"unknown rule {rule!r}")


def f_profile_tail(x: float) -> float:
    """f(x) straight from its defining integral over [x, x + 40].

    The 1/y^2 weight is split at x, 2x, 4x, ... so each piece is smooth.
    """
    if x < 0:
        raise ValidationError("f_profile needs x >= 0")
    if x == 0.0:
        return 1.0 / SQRT_PI
    edges = [x]
    while edges[-1] < min(1.0, x + 40.0):
        edges.append(min(2.0 * edges[-1], 1.0))
    if edges[-1] < x + 40.0:
        edges.append(x + 40.0)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda y: h_gauss(y) / (y * y), lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return 2.0 * x * total


def green_asymptotic(n, t):
    """Leading-order profile sqrt(t) f(|n| / sqrt(t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("green_asymptotic needs t > 0")
    r = np.sqrt(t)
    return r * f_profile(np.abs(np.asarray(n, dtype=float)) / r)


@dataclass(frozen=True)
class GreenTable:
    """Samples ``values[i, k] = y_k(times[i])`` for ``0 <= k <= n_max``.

    Only ``k >= 0`` is stored; ``y`` is even in ``n``.
    """

    n_max: int
    times: tuple[float, ...]
    values: np.ndarray

    def __call__(self, n: int, i: int) -> float:
        return float(self.values[i, abs(n)])


@functools.lru_cache(maxsize=32)
def green_table(n_max: int, times: tuple[float, ...], tol: float = TOL_GREEN) -> GreenTable:
    vals = np.zeros((len(times), n_max + 1))
    for i, t in enumerate(times):
        if t > 0:
            vals[i] = _green_series_all(n_max, float(t))
    vals.setflags(write=False)
    return GreenTable(n_max=n_max, times=tuple(times), values=vals)
