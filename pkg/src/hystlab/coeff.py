"""The rattling coefficient a and a finite check of the quadratic switching law.

``a`` is the positive root of

    g(a) = -c + (h1 - 2c) a - h1 I_f(a),
    I_f(a) = int_{-1}^{1} sqrt(a (1 - x^2)) f((1 - x) / sqrt(a (1 - x^2))) dx.

With ``x = cos(theta)`` the integrand becomes
``sqrt(a) sin(theta)^2 f(tan(theta / 2) / sqrt(a))`` on ``[0, pi]``, which is
smooth up to both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .errors import MissingSwitch, NoBracket, QuadratureFailure, ValidationError
from .green import f_profile

GAUSS_NODES = 256
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_NODES)
_THETA = 0.5 * math.pi * (_GL_X + 1.0)
_THETA_W = 0.5 * math.pi * _GL_W


def _if_integrand(theta, a: float):
    # (1 - cos) / sin = tan(theta / 2); quadrature nodes stay inside (0, pi)
    theta = np.asarray(theta, dtype=float)
    arg = np.abs(np.tan(0.5 * theta)) / math.sqrt(a)
    return math.sqrt(a) * np.sin(theta) ** 2 * f_profile(arg)


def integral_If(a: float, method: str = "gauss", rtol: float = 1e-11) -> float:
    """I_f(a) by 256-node Gauss-Legendre in theta (``"gauss"``) or adaptive quadrature."""
    if not a > 0:
        raise ValidationError("integral_If needs a > 0")
    if method == "gauss":
        return float(np.sum(_THETA_W * _if_integrand(_THETA, a)))
    if method == "adaptive":
        val, err = integrate.quad(lambda th: float(_if_integrand(th, a)), 0.0, math.pi,
                                  epsabs=0.0, epsrel=rtol, limit=400)
        if err > max(1e3 * rtol * abs(val), 1e-14):
            raise QuadratureFailure(f"I_f({a}) error estimate {err:.3g}")
        return val
    raise ValidationError(f"unknown method {method!r}")


def coefficient_residual(a: float, c: float, h1: float, method: str = "gauss") -> float:
    return -c + (h1 - 2.0 * c) * a - h1 * integral_If(a, method)


@dataclass(frozen=True)
class RattlingCoefficient:
    c: float
    h1: float
    a: float
    residual: float
    bracket: tuple[float, float]


def solve_a(c: float, h1: float, *, a_seed: float = 1e-3, max_doublings: int = 80,
            xtol: float = 1e-13) -> RattlingCoefficient:
    """Unique positive root of g(a) = -c + (h1 - 2c) a - h1 I_f(a)."""
    if not c > 0:
        raise ValidationError(f"c must be positive, got {c}")
    if not h1 > 2.0 * c:
        raise ValidationError(f"need h1 > 2c for switching (h1={h1}, 2c={2 * c})")

    def g(a):
        return coefficient_residual(a, c, h1)

    lo, g_lo = a_seed, g(a_seed)
    while g_lo >= 0.0 and lo > 1e-300:
        # g(0+) = -c < 0, so walk down until the lower end is negative
        lo *= 0.5
        g_lo = g(lo)
    for _ in range(max_doublings):
        hi = 2.0 * lo
        g_hi = g(hi)
        if g_lo < 0.0 <= g_hi:
            break
        lo, g_lo = hi, g_hi
    else:
        raise NoBracket(f"no sign change of g on [{a_seed}, {lo}] for c={c}, h1={h1}")
    a = brentq(g, lo, hi, xtol=xtol, rtol=1e-15, maxiter=200)
    res = g(a)
    if abs(res) > 1e-9:
        raise NoBracket(f"root residual {res:.3g} exceeds 1e-9")
    return RattlingCoefficient(c=c, h1=h1, a=a, residual=res, bracket=(lo, hi))


@dataclass(frozen=True)
class HypothesisReport:
    E: float
    n0: int
    switch_times: tuple = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    verdict: bool
    max_normalized_residual: float

    @property
    def E_min(self) -> float:
        return self.max_normalized_residual


def _records_of(sim) -> Iterable:
    return getattr(sim, "records", sim)


def verify_hypothesis(c: float, h1: float, a: float, E: float, n0: int, sim) -> HypothesisReport:
    """Check |t_n - a n^2| <= E sqrt(n) for 1 <= n <= n0 on simulated switch times.

    ``sim`` is a sequence of switch records (anything with ``n`` and
    ``t_switch``) or an object exposing them as ``.records``.
    """
    if not E > 0:
        raise ValidationError("E must be positive")
    if n0 < 0:
        raise ValidationError("n0 must be non-negative")
    times = {0: 0.0}  # the origin starts switched
    for rec in _records_of(sim):
        if 0 <= rec.n <= n0:
            times[rec.n] = rec.t_switch
    chosen = []
    for n in range(0, n0 + 1):
        t_n = times.get(n, math.inf)
        if not math.isfinite(t_n):
            raise MissingSwitch(f"node {n} has no switch within the simulated horizon")
        chosen.append((n, t_n))
    ns = np.arange(1, n0 + 1, dtype=float)
    t = np.array([t_n for n, t_n in chosen[1:]], dtype=float)
    q = t - a * ns**2
    norm = np.abs(q) / np.sqrt(ns) if n0 >= 1 else np.zeros(0)
    worst = float(norm.max()) if norm.size else 0.0
    return HypothesisReport(E=E, n0=n0, switch_times=tuple(chosen), residuals=q,
                            verdict=bool(np.all(norm <= E)), max_normalized_residual=worst)
