"""Event-driven integration of diffusively coupled relays.

The state obeys ``du/dt = K u + H(u) + g`` where ``K`` is a (symmetrizable)
lattice Laplacian, ``H`` is a per-node relay taking the values ``h1`` or
``h_m1`` and ``g`` is a constant source.  Between two switching events the
right-hand side is affine in ``u`` with constant forcing, so the flow is
propagated exactly in the eigenbasis of ``K``:

    z(t + s) = exp(s L) z(t) + s phi1(s L) f,     phi1(x) = (exp(x) - 1) / x

which doubles as a dense output.  Switching instants are localized per node
by Brent's method on that dense output.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BoundaryContamination, NonPhysicalState, ValidationError


def _phi1(x: np.ndarray) -> np.ndarray:
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.expm1(x[nz]) / x[nz]
    return out


@dataclass
class Spectral:
    """Eigen-factorization ``K = V diag(lam) W`` with ``W = V^-1``."""

    lam: np.ndarray
    V: np.ndarray
    W: np.ndarray

    @classmethod
    def from_laplacian(cls, K: np.ndarray, weights: np.ndarray | None = None) -> "Spectral":
        K = np.asarray(K, dtype=float)
        m = np.ones(K.shape[0]) if weights is None else np.asarray(weights, dtype=float)
        sq = np.sqrt(m)
        S = (sq[:, None] * K) / sq[None, :]
        if not np.allclose(S, S.T, atol=1e-12 * max(1.0, np.abs(S).max())):
            raise ValidationError("laplacian is not symmetrizable with the given weights")
        lam, Q = np.linalg.eigh(0.5 * (S + S.T))
        lam = np.minimum(lam, 0.0)
        V = Q / sq[:, None]
        W = Q.T * sq[None, :]
        return cls(lam=lam, V=V, W=W)

    def advance(self, z: np.ndarray, f: np.ndarray, s: float) -> np.ndarray:
        x = s * self.lam
        return np.exp(x) * z + s * _phi1(x) * f


@dataclass
class Segment:
    t0: float
    z0: np.ndarray
    f: np.ndarray
    xi: np.ndarray


@dataclass
class Trajectory:
    """Dense output of a relay-lattice run."""

    spectral: Spectral
    segments: list[Segment]
    t_end: float
    switch_times: np.ndarray
    xi0: np.ndarray
    _starts: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._starts = [seg.t0 for seg in self.segments]

    def _segment(self, t: float) -> Segment:
        if t < 0 or t > self.t_end * (1 + 1e-12) + 1e-12:
            raise ValueError(f"t={t} outside [0, {self.t_end}]")
        i = bisect.bisect_right(self._starts, t) - 1
        return self.segments[max(i, 0)]

    def modal(self, t: float) -> np.ndarray:
        seg = self._segment(t)
        return self.spectral.advance(seg.z0, seg.f, t - seg.t0)

    def u(self, t: float) -> np.ndarray:
        return self.spectral.V @ self.modal(t)

    def du(self, t: float) -> np.ndarray:
        seg = self._segment(t)
        z = self.spectral.advance(seg.z0, seg.f, t - seg.t0)
        return self.spectral.V @ (self.spectral.lam * z + seg.f)

    def u_at(self, times) -> np.ndarray:
        return np.array([self.u(float(t)) for t in np.atleast_1d(times)])

    def xi(self, t: float) -> np.ndarray:
        return self._segment(t).xi

    def node_value(self, node: int, t: float) -> float:
        seg = self._segment(t)
        z = self.spectral.advance(seg.z0, seg.f, t - seg.t0)
        return float(self.spectral.V[node] @ z)

    @property
    def n_events(self) -> int:
        return len(self.segments) - 1


class RelayLattice:
    """Relays with thresholds ``alpha < beta`` on the nodes of a lattice.

    ``alpha=None`` means there is no lower threshold, so every switch is
    permanent.  Nodes flagged in ``frozen`` diffuse but never switch.
    ``weights`` are orbit sizes (or cell volumes) when ``K`` acts on a
    symmetry-reduced or graded node set; ``diag(weights) @ K`` must be
    symmetric.
    """

    def __init__(
        self,
        K: np.ndarray,
        u0: np.ndarray,
        xi0: np.ndarray,
        h1: float,
        h_m1: float,
        *,
        beta: float = 0.0,
        alpha: float | None = None,
        weights: np.ndarray | None = None,
        source: np.ndarray | None = None,
        tol_event: float = 1e-10,
        tol_touch: float = 1e-12,
        dt_min: float = 1e-2,
        dt_max: float = 1.0,
        growth: float = 1.5,
        monitor: np.ndarray | None = None,
        margin: float = 0.0,
        max_value: float | None = None,
        frozen: np.ndarray | None = None,
        spectral: Spectral | None = None,
    ) -> None:
        self.spectral = spectral or Spectral.from_laplacian(K, weights)
        self.u0 = np.asarray(u0, dtype=float).copy()
        self.xi0 = np.asarray(xi0, dtype=int).copy()
        if self.u0.shape != self.xi0.shape or self.u0.shape[0] != self.spectral.lam.shape[0]:
            raise ValidationError("u0, xi0 and the laplacian disagree in size")
        if alpha is not None and not alpha < beta:
            raise ValidationError("alpha must be below beta")
        self.h1, self.h_m1 = float(h1), float(h_m1)
        self.beta, self.alpha = float(beta), alpha
        self.source = np.zeros_like(self.u0) if source is None else np.asarray(source, dtype=float)
        self.tol_event, self.tol_touch = tol_event, tol_touch
        self.dt_min, self.dt_max, self.growth = dt_min, dt_max, growth
        self.monitor = None if monitor is None else np.asarray(monitor, dtype=int)
        self.margin = margin
        self.max_value = max_value
        self.frozen = np.zeros(self.u0.shape, dtype=bool) if frozen is None else np.asarray(frozen, dtype=bool)

    def _forcing(self, xi: np.ndarray) -> np.ndarray:
        return self.spectral.W @ (np.where(xi > 0, self.h1, self.h_m1) + self.source)

    def _gap(self, u: np.ndarray, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # signed distance to the active threshold, negative while no switch is due
        sign = np.where(xi > 0, 1.0, -1.0)
        if self.alpha is None:
            thr = np.full_like(u, self.beta)
            active = xi > 0
        else:
            thr = np.where(xi > 0, self.beta, self.alpha)
            active = np.ones_like(xi, dtype=bool)
        active &= ~self.frozen
        return sign * (u - thr), np.where(active, sign, 0.0)

    def _node_gap(self, node, sign, z, f):
        V, sp = self.spectral.V[node], self.spectral
        thr = self.beta if sign > 0 else self.alpha

        def g(tau):
            return sign * (float(V @ sp.advance(z, f, tau)) - thr)

        def dg(tau):
            x = tau * sp.lam
            e = np.exp(x)
            return sign * float(V @ (sp.lam * e * z + e * f))

        return g, dg

    def _localize(self, cand, sign, z, f, s):
        """Earliest in-step switching instant among the candidate nodes."""
        hits = []
        for node in cand:
            g, dg = self._node_gap(node, sign[node], z, f)
            g0, gs = g(0.0), g(s)
            if g0 >= 0.0:
                hits.append((0.0, node))
                continue
            if gs >= 0.0:
                hits.append((brentq(g, 0.0, s, xtol=self.tol_event, rtol=1e-15), node))
                continue
            # interior maximum: tangential touch or a double crossing
            d0, ds = dg(0.0), dg(s)
            if not (d0 > 0.0 > ds):
                continue
            tm = brentq(dg, 0.0, s, xtol=self.tol_event, rtol=1e-15)
            gm = g(tm)
            if gm > 0.0:
                hits.append((brentq(g, 0.0, tm, xtol=self.tol_event, rtol=1e-15), node))
            elif gm >= -self.tol_touch:
                hits.append((tm, node))
        if not hits:
            return None
        t_first = min(h[0] for h in hits)
        return t_first, sorted(n for tau, n in hits if tau <= t_first + self.tol_event)

    def _check(self, u: np.ndarray, t: float) -> None:
        if self.monitor is not None and self.monitor.size:
            top = u[self.monitor].max()
            if top > self.beta - self.margin:
                raise BoundaryContamination(
                    f"outer band reached {top:.6g} > beta - margin at t={t:.6g}; enlarge the window"
                )
        if self.max_value is not None and u.max() > self.max_value:
            raise NonPhysicalState(f"max u = {u.max():.6g} exceeds {self.max_value:.6g} at t={t:.6g}")

    def run(self, T: float) -> Trajectory:
        sp = self.spectral
        xi = self.xi0.copy()
        switch_times = np.full(xi.shape, np.inf)
        # touch-equals-switch at t = 0
        gap0, act0 = self._gap(self.u0, xi)
        now = (act0 != 0) & (gap0 >= 0)
        xi[now] = -xi[now]
        switch_times[now] = 0.0

        t = 0.0
        z = sp.W @ self.u0
        f = self._forcing(xi)
        segments = [Segment(0.0, z.copy(), f.copy(), xi.copy())]
        u = sp.V @ z
        du = sp.V @ (sp.lam * z + f)
        s = self.dt_min
        while t < T:
            s = min(s, T - t)
            z1 = sp.advance(z, f, s)
            u1 = sp.V @ z1
            du1 = sp.V @ (sp.lam * z1 + f)
            g0, act = self._gap(u, xi)
            g1, _ = self._gap(u1, xi)
            dg0, dg1 = act * du, act * du1
            on = act != 0
            crossing = on & (g1 >= 0)
            touching = on & (dg0 > 0) & (dg1 < 0) & (
                np.minimum(g0 + s * dg0, g1 - s * dg1) >= -self.tol_touch
            )
            cand = np.flatnonzero(crossing | touching | (on & (g0 >= 0)))
            hit = self._localize(cand, act, z, f, s) if cand.size else None
            if hit is not None:
                tau, nodes = hit
                z = sp.advance(z, f, tau)
                t += tau
                for n in nodes:
                    xi[n] = -xi[n]
                    if not np.isfinite(switch_times[n]):
                        switch_times[n] = t
                f = self._forcing(xi)
                segments.append(Segment(t, z.copy(), f.copy(), xi.copy()))
                u = sp.V @ z
                du = sp.V @ (sp.lam * z + f)
                self._check(u, t)
                s = self.dt_min
                continue
            self._check(u1, t + s)
            z, u, du = z1, u1, du1
            t += s
            s = min(self.dt_max, s * self.growth)
        return Trajectory(sp, segments, float(T), switch_times, self.xi0.copy())
