"""Diffusion coupled to a fast bistable variable.

    u_t = u_xx + v,    delta v_t = g(u, v),    u(x, 0) = -c x^2,  v(x, 0) = H1(beta)

on ``[-L, L]`` with zero-flux ends.  The stable parts of the nullcline
``g(u, v) = 0`` play the role of the hysteresis branches; no relay is used.

The default nonlinearity is the cubic ``g(u, v) = -(u + 2/3) + v - v^3/3``.
Its upper stable branch ends in a fold at ``(u, v) = (0, 1)``, so ``beta = 0``
is the switching threshold with ``H1(0) = 1`` and ``H_{-1}(0) = -2``.  The
FitzHugh-Nagumo form ``u + v - v^3/3`` is available as :data:`FITZHUGH_NAGUMO`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import BlowUp, NoStableRoot, StabilityViolation, ValidationError

EXPLICIT_LIMIT = 0.4


@dataclass(frozen=True)
class FastNonlinearity:
    """``g(u, v)`` with its derivative in ``v``; both vectorized."""

    name: str
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    g_v: Callable[[np.ndarray, np.ndarray], np.ndarray]
    v_range: tuple[float, float] = (-4.0, 4.0)
    v_split: float = -0.5  # separates the lower from the upper stable branch


SHIFTED_CUBIC = FastNonlinearity(
    "shifted_cubic",
    lambda u, v: -(u + 2.0 / 3.0) + v - v**3 / 3.0,
    lambda u, v: 1.0 - v**2 + 0.0 * u,
)

FITZHUGH_NAGUMO = FastNonlinearity(
    "fitzhugh_nagumo",
    lambda u, v: u + v - v**3 / 3.0,
    lambda u, v: 1.0 - v**2 + 0.0 * u,
    v_split=0.0,
)

NONLINEARITIES = {f.name: f for f in (SHIFTED_CUBIC, FITZHUGH_NAGUMO)}


def _bisect(fun, u, lo, hi, f_lo, iters: int = 60):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        f_mid = fun(u, mid)
        left = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, f_mid, f_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _brackets(F):
    return np.nonzero(np.sign(F[:, :-1]) * np.sign(F[:, 1:]) < 0)


def _roots(fast: FastNonlinearity, u, samples: int = 801, tol_fold: float = 1e-6):
    """Roots of ``g(u_i, .)`` on ``v_range`` per node; returns (roots, stable) as sorted lists.

    Simple roots are bracketed on a sample grid and bisected.  A fold, where
    ``g`` touches zero without changing sign, is found among the critical
    points of ``g(u_i, .)``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    vs = np.linspace(*fast.v_range, samples)
    # an irrational shift keeps round numbers (where folds tend to sit) off the samples
    vs = vs + (math.sqrt(2.0) - 1.0) * (vs[1] - vs[0])
    roots: list[list[float]] = [[] for _ in u]
    G = fast.g(u[:, None], vs[None, :])
    i, k = _brackets(G)
    for node, r in zip(i, _bisect(fast.g, u[i], vs[k], vs[k + 1], G[i, k])):
        roots[node].append(float(r))
    D = fast.g_v(u[:, None], vs[None, :])
    i, k = _brackets(D)
    crit = _bisect(fast.g_v, u[i], vs[k], vs[k + 1], D[i, k])
    scale = 1.0 + np.abs(u[i])
    for node, r, gval, s in zip(i, crit, fast.g(u[i], crit), scale):
        if abs(gval) <= 1e-10 * s:
            # rounding near a double root may also produce sign changes; keep the fold only
            roots[node] = [q for q in roots[node] if abs(q - r) >= 1e-6] + [float(r)]
    stable = []
    for node, rs in enumerate(roots):
        rs.sort()
        gv = fast.g_v(np.full(len(rs), u[node]), np.array(rs))
        stable.append([r for r, d in zip(rs, gv) if d <= tol_fold])
    return roots, stable


def upper_branch_value(fast: FastNonlinearity, beta: float) -> float:
    """H1(beta): the largest stable root of ``g(beta, .)``, a fold end included."""
    _, stable = _roots(fast, np.array([beta]))
    if not stable[0]:
        raise NoStableRoot(f"g({beta}, .) has no stable root in {fast.v_range}")
    return float(max(stable[0]))


@dataclass(frozen=True)
class SlowFastConfig:
    delta: float
    c: float
    L: float = 5.0
    dx: float = 0.005
    T: float = 1.0
    g: FastNonlinearity = SHIFTED_CUBIC
    beta: float = 0.0
    v0: float | None = None
    scheme: str = "implicit"
    dt: float | None = None
    dt_fast: float | None = None
    snapshots: tuple[float, ...] = ()
    perturb: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    skip_fast: bool = False

    def __post_init__(self) -> None:
        for name in ("delta", "c", "L", "dx", "T"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.scheme not in ("implicit", "explicit"):
            raise ValidationError(f"scheme must be 'implicit' or 'explicit', got {self.scheme!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.dt_fast is not None and not self.dt_fast > 0:
            raise ValidationError("dt_fast must be positive")
        if abs(round(self.L / self.dx) * self.dx - self.L) > 1e-9 * self.L:
            raise ValidationError("L must be a multiple of dx")

    @property
    def step(self) -> float:
        if self.dt is not None:
            return self.dt
        if self.scheme == "explicit":
            return EXPLICIT_LIMIT * self.dx**2
        return self.delta / 10.0

    @property
    def grid(self) -> np.ndarray:
        m = int(round(self.L / self.dx))
        return self.dx * np.arange(-m, m + 1)


@dataclass
class SlowFastResult:
    config: SlowFastConfig
    x: np.ndarray
    times: np.ndarray
    u: np.ndarray  # (snapshot, node)
    v: np.ndarray
    fast_substeps: int = 0

    def snapshot(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.u[i], self.v[i]


def _laplacian_bands(m: int, dx: float) -> np.ndarray:
    """Banded storage of the second difference with reflecting (zero-flux) ends."""
    ab = np.zeros((3, m))
    ab[0, 1:] = 1.0
    ab[1, :] = -2.0
    ab[2, :-1] = 1.0
    ab[0, 1] = 2.0  # first row: 2 (u_1 - u_0)
    ab[2, -2] = 2.0  # last row: 2 (u_{m-2} - u_{m-1})
    return ab / dx**2


def _apply(ab: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = ab[1] * u
    out[:-1] += ab[0, 1:] * u[1:]
    out[1:] += ab[2, :-1] * u[:-1]
    return out


def simulate_slowfast(config: SlowFastConfig) -> SlowFastResult:
    """Operator splitting: a diffusion step with ``v`` frozen, then fast substeps for ``v``."""
    cfg = config
    x = cfg.grid
    m = x.size
    u = -cfg.c * x**2
    if cfg.perturb is not None:
        u = u + np.asarray(cfg.perturb(x), dtype=float)
    v0 = cfg.v0 if cfg.v0 is not None else upper_branch_value(cfg.g, cfg.beta)
    v = np.full(m, v0)
    dt = cfg.step
    if cfg.scheme == "explicit" and dt > EXPLICIT_LIMIT * cfg.dx**2 * (1 + 1e-12):
        raise StabilityViolation(f"explicit diffusion needs dt <= {EXPLICIT_LIMIT} dx^2, got dt={dt:g}")
    n_steps = max(1, int(math.ceil(cfg.T / dt - 1e-9)))
    dt = cfg.T / n_steps
    ab = _laplacian_bands(m, cfg.dx)
    if cfg.scheme == "implicit":
        # Crank-Nicolson: (I - dt/2 A) u+ = (I + dt/2 A) u + dt v
        lhs = -0.5 * dt * ab
        lhs[1] += 1.0

    branch_max = max(abs(v0), max(abs(r) for r in _roots(cfg.g, np.array([cfg.beta]))[1][0]))
    bound = max(0.0, float(u.max())) + cfg.T * branch_max + 1.0
    want = np.unique(np.concatenate([np.asarray(cfg.snapshots, dtype=float), [0.0, cfg.T]]))
    if want.min() < 0 or want.max() > cfg.T:
        raise ValidationError("snapshot times must lie in [0, T]")
    marks = np.rint(want / dt).astype(int)
    times, us, vs = [], [], []
    substeps = 0

    def record(k):
        times.append(k * dt)
        us.append(u.copy())
        vs.append(v.copy())

    j = 0
    if marks[0] == 0:
        record(0)
        j = 1
    for k in range(1, n_steps + 1):
        if cfg.scheme == "implicit":
            u = solve_banded((1, 1), lhs, u + 0.5 * dt * _apply(ab, u) + dt * v)
        else:
            u = u + dt * (_apply(ab, u) + v)
        if not cfg.skip_fast:
            gv = float(np.max(np.abs(cfg.g.g_v(u, v))))
            limit = min(cfg.delta / 10.0, 0.5 * cfg.delta / max(gv, 1e-300))
            if cfg.dt_fast is not None:
                if cfg.dt_fast > limit * (1 + 1e-12):
                    raise StabilityViolation(
                        f"dt_fast={cfg.dt_fast:g} exceeds the fast stability limit {limit:g} at t={k * dt:g}")
                limit = cfg.dt_fast
            n_sub = max(1, int(math.ceil(dt / limit - 1e-12)))
            h = dt / n_sub / cfg.delta
            with np.errstate(over="ignore", invalid="ignore"):  # reported as BlowUp below
                for _ in range(n_sub):
                    v = v + h * cfg.g.g(u, v)
            substeps += n_sub
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))) or u.max() > bound:
            raise BlowUp(f"solution left the a priori bound {bound:g} at t={k * dt:g}")
        while j < marks.size and marks[j] == k:
            record(k)
            j += 1
    return SlowFastResult(cfg, x, np.array(times), np.array(us), np.array(vs), substeps)


@dataclass(frozen=True)
class BranchSummary:
    label: np.ndarray  # +1 upper branch, -1 lower branch, 0 fold region
    defect: np.ndarray
    nearest: np.ndarray
    tol: float
    on_branch_fraction: float
    intervals: np.ndarray  # lengths of the inner alternating runs
    median_interval: float


def branch_classify(fast: FastNonlinearity, u, v, x, *, tol: float = 1e-2, strict: bool = False) -> BranchSummary:
    """Label each node by the stable root of ``g(u, .)`` nearest to its ``v``.

    ``intervals`` are the lengths of the maximal runs of equal labels inside
    the patterned region, i.e. between the outermost lower-branch nodes; the
    two unbounded outer runs are left out.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if not u.shape == v.shape == x.shape:
        raise ValidationError("u, v and x must have the same shape")
    _, stable = _roots(fast, u)
    label = np.zeros(u.size, dtype=int)
    nearest = np.full(u.size, np.nan)
    for i, rs in enumerate(stable):
        if rs:
            r = min(rs, key=lambda s: abs(s - v[i]))
            nearest[i] = r
            label[i] = 1 if r >= fast.v_split else -1
    if strict and np.any(label == 0):
        bad = x[label == 0]
        raise NoStableRoot(f"no stable root of g(u, .) at {bad.size} nodes, first at x={bad[0]:g}")
    defect = np.abs(fast.g(u, v))
    ok = (label != 0) & (defect <= tol)
    lows = np.flatnonzero(label == -1)
    runs = []
    if lows.size:
        seg = label[lows[0]:lows[-1] + 1]
        xs = x[lows[0]:lows[-1] + 1]
        edges = np.flatnonzero(np.diff(seg) != 0) + 1
        starts = np.concatenate([[0], edges])
        stops = np.concatenate([edges, [seg.size]])
        dx = float(np.median(np.diff(x))) if x.size > 1 else 0.0
        runs = [xs[b - 1] - xs[a] + dx for a, b in zip(starts, stops)]
    runs = np.asarray(runs, dtype=float)
    return BranchSummary(label, defect, nearest, tol, float(ok.mean()), runs,
                         float(np.median(runs)) if runs.size else math.nan)
