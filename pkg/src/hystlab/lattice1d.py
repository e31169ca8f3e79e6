"""Relays on the integer lattice with quadratic initial data.

The system is

    du_n/dt = u_{n+1} - 2 u_n + u_{n-1} + H(u_n),   u_n(0) = -c n^2,

where ``H(u_n) = h1`` until ``u_n`` first reaches 0 and ``h_m1`` afterwards.
Node 0 starts on the ``h_m1`` branch.

The infinite lattice is replaced by the window ``|n| <= N``, a buffer of
``2 sqrt(T)`` further unit-spaced nodes and an outer layer whose cells grow
geometrically.  The outer layer discretizes the continuum heat equation and
carries a constant source chosen so that the undisturbed field
``-c x^2 + (h1 - 2c) t`` stays exact there, so the window edges see neither
reflection nor an artificial wall.  Nodes of the outer
layer never switch; a monitor on the last five window nodes raises
:class:`BoundaryContamination` before the switching front gets close to
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .engine import RelayLattice, Trajectory
from .errors import IncompleteHistory, ValidationError
from .green import green_y

MONITOR_BAND = 5


@dataclass(frozen=True)
class LatticeConfig:
    c: float
    h1: float
    h_m1: float = 0.0
    N: int = 80
    T: float = 50.0
    tol_event: float = 1e-10
    tol_state: float | None = None
    boundary_margin: float | None = None
    tol_touch: float | None = None
    dt_max: float = 1.0
    outer_unit: float = 2.0
    outer_ratio: float = 1.05
    outer_reach: float = 10.0
    perturb: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValidationError(f"c must be positive, got {self.c}")
        if not self.h_m1 <= 0 <= self.h1:
            raise ValidationError(f"need h_m1 <= 0 <= h1, got h_m1={self.h_m1}, h1={self.h1}")
        if int(self.N) != self.N or self.N < 10:
            raise ValidationError(f"N must be an integer >= 10, got {self.N}")
        if not self.T > 0:
            raise ValidationError("T must be positive")
        if self.tol_state is not None and not self.tol_state > 0:
            raise ValidationError("tol_state must be positive")
        for name in ("tol_event", "dt_max"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not self.outer_ratio > 1.0 or self.outer_unit < 0:
            raise ValidationError("need outer_ratio > 1 and outer_unit >= 0")
        for n, _ in self.perturb:
            if abs(n) > self.N:
                raise ValidationError(f"perturbed node {n} lies outside the window")

    @property
    def margin(self) -> float:
        if self.boundary_margin is not None:
            return self.boundary_margin
        return 0.1 * self.c * self.N**2 * 1e-3

    @property
    def touch(self) -> float:
        return self.tol_touch if self.tol_touch is not None else 1e-12 * self.c


@dataclass(frozen=True)
class SwitchRecord:
    """First switching moment of site ``n``; ``inf`` if it did not switch by ``horizon``."""

    n: int
    t_switch: float
    horizon: float = math.inf

    @property
    def switched(self) -> bool:
        return math.isfinite(self.t_switch)


@dataclass(frozen=True)
class LatticeState:
    t: float
    u: np.ndarray
    xi: np.ndarray


def _outer_positions(N: int, T: float, unit: float, ratio: float, reach: float) -> np.ndarray:
    """Unit spacing up to ``N + unit sqrt(T)``, then geometrically growing spacing."""
    xs = [float(k) for k in range(N + 1 + math.ceil(unit * math.sqrt(T)))]
    x_max = xs[-1] + reach * math.sqrt(2.0 * T) + 50.0
    h = 1.0
    while xs[-1] < x_max:
        h *= ratio
        xs.append(xs[-1] + h)
    return np.array(xs)


def _finite_volume(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Laplacian and cell volumes on the sorted nodes ``x`` with zero-flux ends."""
    M = x.size
    gaps = np.diff(x)
    vol = np.empty(M)
    vol[1:-1] = 0.5 * (x[2:] - x[:-2])
    vol[0], vol[-1] = 0.5 * gaps[0], 0.5 * gaps[-1]
    K = np.zeros((M, M))
    k = 1.0 / gaps
    i = np.arange(M - 1)
    K[i, i + 1] += k
    K[i + 1, i] += k
    K[i, i] -= k
    K[i + 1, i + 1] -= k
    return K / vol[:, None], vol


@dataclass
class _Layout:
    x: np.ndarray  # node positions
    K: np.ndarray
    weights: np.ndarray
    window: np.ndarray  # node index of lattice site n = -N..N
    symmetric: bool


def _layout(cfg: LatticeConfig) -> _Layout:
    xp = _outer_positions(cfg.N, cfg.T, cfg.outer_unit, cfg.outer_ratio, cfg.outer_reach)
    ns = np.arange(-cfg.N, cfg.N + 1)
    if not cfg.perturb:
        # even data: keep x >= 0 and fold the mirror image into node 0
        K, vol = _finite_volume(np.concatenate([[-1.0], xp]))
        K = K[1:, 1:]
        K[0, 0] = -2.0
        K[0, 1] = 2.0
        w = 2.0 * vol[1:]
        w[0] = 1.0
        return _Layout(xp, K, w, np.abs(ns), True)
    x = np.concatenate([-xp[:0:-1], xp])
    K, vol = _finite_volume(x)
    return _Layout(x, K, vol, ns + (xp.size - 1), False)


@dataclass
class LatticeTrajectory:
    """Dense output of a lattice run, indexed by lattice site ``n``."""

    config: LatticeConfig
    engine: Trajectory = field(repr=False)
    layout: _Layout = field(repr=False)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.config.N, self.config.N + 1)

    @property
    def t_end(self) -> float:
        return self.engine.t_end

    def u(self, t: float) -> np.ndarray:
        return self.engine.u(t)[self.layout.window]

    def xi(self, t: float) -> np.ndarray:
        return self.engine.xi(t)[self.layout.window]

    def hysteresis(self, t: float) -> np.ndarray:
        return np.where(self.xi(t) > 0, self.config.h1, self.config.h_m1)

    def node(self, n: int, t: float) -> float:
        return self.engine.node_value(int(self.layout.window[n + self.config.N]), t)

    def switch_time(self, n: int) -> float:
        return float(self.engine.switch_times[self.layout.window[n + self.config.N]])

    def state(self, t: float) -> LatticeState:
        return LatticeState(t=float(t), u=self.u(t), xi=self.xi(t))

    def snapshots(self, times) -> list[LatticeState]:
        return [self.state(float(t)) for t in times]


def simulate(config: LatticeConfig) -> tuple[LatticeTrajectory, list[SwitchRecord]]:
    """Run the lattice up to ``config.T``; returns the trajectory and one record per site."""
    lay = _layout(config)
    c = config.c
    phi = -c * lay.x**2
    source = -2.0 * c - lay.K @ phi
    # inside the window the lattice Laplacian of -c n^2 is exactly -2c
    source[np.abs(lay.x) < config.N] = 0.0

    u0 = phi.copy()
    for n, du in config.perturb:
        u0[lay.window[n + config.N]] += du
    xi0 = np.ones(lay.x.size, dtype=int)
    xi0[lay.window[config.N]] = -1
    frozen = np.abs(lay.x) > config.N
    edge = np.abs(lay.x) > config.N - MONITOR_BAND
    monitor = np.flatnonzero(edge & ~frozen)

    # the modal coefficients are of size c x^2, which sets the rounding floor
    tol_state = config.tol_state if config.tol_state is not None else 1e-12 * c * float(lay.x.max()) ** 2
    engine = RelayLattice(
        lay.K, u0, xi0, config.h1, config.h_m1,
        beta=0.0, alpha=None, weights=lay.weights, source=source,
        tol_event=config.tol_event, tol_touch=config.touch, dt_max=config.dt_max,
        monitor=monitor, margin=config.margin, max_value=tol_state, frozen=frozen,
    )
    run = engine.run(config.T)
    # the origin starts on the switched branch: t_0 = 0
    run.switch_times[lay.window[config.N]] = 0.0
    traj = LatticeTrajectory(config, run, lay)
    records = [SwitchRecord(int(n), traj.switch_time(int(n)), config.T) for n in traj.sites]
    return traj, records


def switch_times_by_node(records) -> dict[int, float]:
    return {r.n: r.t_switch for r in records}


def superpose_profile(c: float, h1: float, switch_times, ns, t: float, h_m1: float = 0.0) -> np.ndarray:
    """u_n(t) for several n from the switch history by superposing Green functions.

    ``switch_times`` maps (or lists pairs) node -> switch time, ``inf`` for
    nodes that never switch.  It must cover every ``|k| < max |n|``.
    """
    hist = dict(switch_times)
    ns = np.atleast_1d(np.asarray(ns, dtype=int))
    need = int(np.abs(ns).max()) if ns.size else 0
    missing = [k for k in range(-need + 1, need) if k not in hist]
    if missing:
        raise IncompleteHistory(f"switch times missing for nodes {missing[:5]}")
    out = -c * ns.astype(float) ** 2 + (h1 - 2.0 * c) * t
    for k, t_k in hist.items():
        if t_k < t:
            out += (h_m1 - h1) * green_y(ns - k, t - t_k)
    return out


def superpose_solution(c: float, h1: float, switch_times, n: int, t: float, h_m1: float = 0.0) -> float:
    """u_n(t) = -c n^2 + (h1 - 2c) t + (h_m1 - h1) sum_k y_{n-k}(t - t_k)."""
    return float(superpose_profile(c, h1, switch_times, [n], t, h_m1)[0])


def superpose_switch_time(c: float, h1: float, switch_times, n: int, t_lo: float, t_hi: float,
                          h_m1: float = 0.0, xtol: float = 1e-12) -> float:
    """Switching moment of node n recomputed by root finding on the superposition.

    Node n's own term is left out, so u_n crosses 0 with positive slope
    instead of touching it; ``[t_lo, t_hi]`` must bracket that crossing.
    """
    others = {k: t_k for k, t_k in dict(switch_times).items() if k != n}
    others.setdefault(n, math.inf)

    def g(t):
        return superpose_solution(c, h1, others, n, t, h_m1)

    return brentq(g, t_lo, t_hi, xtol=xtol, rtol=1e-15)


@dataclass(frozen=True)
class Samples:
    """Sampled lattice data: ``values[i]`` is the profile at ``times[i]``."""

    times: np.ndarray
    values: np.ndarray
    switch_times: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: LatticeTrajectory, times) -> "Samples":
        times = np.asarray(times, dtype=float)
        st = np.array([traj.switch_time(int(n)) for n in traj.sites])
        return cls(times, np.array([traj.u(t) for t in times]), st)


def rescale(eps: float, scaled: Samples) -> Samples:
    """Map a unit-spacing run to grid step ``eps``: u^eps(tau) = eps^2 u(tau / eps^2)."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    e2 = eps * eps
    return replace(scaled, times=scaled.times * e2, values=scaled.values * e2,
                   switch_times=scaled.switch_times * e2)


def unscale(eps: float, physical: Samples) -> Samples:
    """Inverse of :func:`rescale`."""
    return rescale(1.0 / eps, physical)
