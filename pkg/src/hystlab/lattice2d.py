"""Relays on the square and triangular lattices with radially quadratic data.

Each node obeys ``du_i/dt = s * sum_{j ~ i} (u_j - u_i) + H(u_i)`` with
``u_i(0) = -c |x_i|^2``; only the origin starts switched.  The lattice is cut
to the disc ``|x| <= radius``.  Neighbours outside the disc are replaced by
the undisturbed field, whose differences to the node are constant in time,
so the cut acts as a fixed source and reflects only the disturbance.

The computation runs on one representative per orbit of the lattice point
group (order 8 for the square, 12 for the triangular lattice) and is
unfolded afterwards, so the switching map is exactly symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import RelayLattice, Trajectory
from .errors import ValidationError
from .svg import polygon_map

MONITOR_BAND = 5.0
SQRT3 = math.sqrt(3.0)

_STEPS = {
    "square": ((1, 0), (-1, 0), (0, 1), (0, -1)),
    "triangular": ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)),
}


def _embed(kind: str, i, j):
    i = np.asarray(i, dtype=float)
    j = np.asarray(j, dtype=float)
    if kind == "square":
        return np.stack([i, j], axis=-1)
    return np.stack([i + 0.5 * j, 0.5 * SQRT3 * j], axis=-1)


def _images(kind: str, i: int, j: int) -> list[tuple[int, int]]:
    """All images of lattice point (i, j) under the point group."""
    out = []
    if kind == "square":
        for a, b in ((i, j), (j, i)):
            for sa in (1, -1):
                for sb in (1, -1):
                    out.append((sa * a, sb * b))
        return out
    p = (i, j)
    for _ in range(6):
        out.append(p)
        out.append((p[1], p[0]))
        p = (-p[1], p[0] + p[1])  # rotation by 60 degrees
    return out


def canonical(kind: str, i: int, j: int) -> tuple[int, int]:
    return min(_images(kind, i, j))


def degree(kind: str) -> int:
    return len(_STEPS[kind])


@dataclass
class Grid2D:
    """Lattice nodes of the disc together with their switching data."""

    lattice_kind: str
    radius: float
    coords: np.ndarray  # integer lattice coordinates (i, j)
    positions: np.ndarray
    neighbors: list[np.ndarray] = field(repr=False)
    orbit: np.ndarray = field(repr=False)  # representative index per node
    switch_time: np.ndarray = field(repr=False)
    t_end: float = 0.0
    c: float = 0.0
    h1: float = 0.0
    h_m1: float = 0.0
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    def switched_by(self, t: float) -> np.ndarray:
        return self.switch_time <= t

    def u(self, t: float) -> np.ndarray:
        if self.trajectory is None:
            raise ValidationError("grid carries no trajectory")
        return self.trajectory.u(t)[self.orbit]

    def xi(self, t: float) -> np.ndarray:
        return np.where(self.switched_by(t), -1, 1)

    def index(self) -> dict[tuple[int, int], int]:
        return {tuple(p): k for k, p in enumerate(self.coords.tolist())}


def build_grid(lattice_kind: str, radius: float) -> Grid2D:
    if lattice_kind not in _STEPS:
        raise ValidationError(f"lattice_kind must be 'square' or 'triangular', got {lattice_kind!r}")
    if radius < 0:
        raise ValidationError("radius must be non-negative")
    r = int(math.ceil(2 * radius)) + 1
    ii, jj = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    pos = _embed(lattice_kind, ii.ravel(), jj.ravel())
    inside = np.einsum("ij,ij->i", pos, pos) <= radius * radius + 1e-9
    coords = np.stack([ii.ravel()[inside], jj.ravel()[inside]], axis=1)
    order = np.lexsort((coords[:, 1], coords[:, 0]))
    coords = coords[order]
    positions = _embed(lattice_kind, coords[:, 0], coords[:, 1])
    where = {tuple(p): k for k, p in enumerate(coords.tolist())}
    neighbors = []
    for i, j in coords.tolist():
        nb = [where[(i + di, j + dj)] for di, dj in _STEPS[lattice_kind] if (i + di, j + dj) in where]
        neighbors.append(np.array(nb, dtype=int))
    reps: dict[tuple[int, int], int] = {}
    orbit = np.empty(len(coords), dtype=int)
    for k, (i, j) in enumerate(coords.tolist()):
        orbit[k] = reps.setdefault(canonical(lattice_kind, i, j), len(reps))
    return Grid2D(lattice_kind, float(radius), coords, positions, neighbors, orbit,
                  np.full(len(coords), math.inf))


def _reduced_system(grid: Grid2D, c: float, scale: float):
    """Laplacian, orbit weights and boundary source on the orbit representatives."""
    kind = grid.lattice_kind
    n_rep = int(grid.orbit.max()) + 1
    first = np.full(n_rep, -1)
    for k in range(grid.size - 1, -1, -1):
        first[grid.orbit[k]] = k
    weights = np.bincount(grid.orbit, minlength=n_rep).astype(float)
    K = np.zeros((n_rep, n_rep))
    source = np.zeros(n_rep)
    r2 = np.einsum("ij,ij->i", grid.positions, grid.positions)
    where = grid.index()
    for rep, k in enumerate(first):
        i, j = grid.coords[k]
        for di, dj in _STEPS[kind]:
            nb = (int(i + di), int(j + dj))
            p = _embed(kind, *nb)
            if float(p @ p) <= grid.radius**2 + 1e-9:
                K[rep, grid.orbit[where[nb]]] += scale
                K[rep, rep] -= scale
            else:
                # missing neighbour: u_j - u_i keeps its undisturbed value
                source[rep] += scale * (-c * float(p @ p) + c * r2[k])
    return K, weights, source, first


def simulate2d(c: float, h1: float, h_m1: float, lattice_kind: str, radius: float, T: float, *,
               laplacian_scale: float = 1.0, tol_event: float = 1e-10, dt_max: float = 1.0,
               boundary_margin: float | None = None, tol_state: float | None = None) -> Grid2D:
    """Switching times on the disc of the given radius up to time ``T``."""
    if not c > 0:
        raise ValidationError("c must be positive")
    if not h_m1 <= 0 <= h1:
        raise ValidationError("need h_m1 <= 0 <= h1")
    if not T > 0 or not laplacian_scale > 0:
        raise ValidationError("T and laplacian_scale must be positive")
    grid = build_grid(lattice_kind, radius)
    K, w, source, first = _reduced_system(grid, c, laplacian_scale)
    pos = grid.positions[first]
    r = np.sqrt(np.einsum("ij,ij->i", pos, pos))
    u0 = -c * r**2
    xi0 = np.ones(u0.size, dtype=int)
    origin = int(np.argmin(r))
    xi0[origin] = -1
    monitor = np.flatnonzero(r > radius - MONITOR_BAND)
    if radius <= MONITOR_BAND:
        monitor = np.zeros(0, dtype=int)
    margin = boundary_margin if boundary_margin is not None else 0.1 * c * radius**2 * 1e-3
    tol = tol_state if tol_state is not None else 1e-12 * c * max(radius, 1.0) ** 2
    engine = RelayLattice(K, u0, xi0, h1, h_m1, weights=w, source=source, tol_event=tol_event,
                          dt_max=dt_max, monitor=monitor, margin=margin, max_value=tol)
    traj = engine.run(T)
    st = traj.switch_times.copy()
    st[origin] = 0.0
    grid.switch_time = st[grid.orbit]
    grid.t_end, grid.c, grid.h1, grid.h_m1 = float(T), c, h1, h_m1
    grid.trajectory = traj
    return grid


def ring_profile(grid: Grid2D, t: float | None = None, width: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Share of switched nodes in annuli of the given width, from the centre out."""
    t = grid.t_end if t is None else t
    r = np.hypot(grid.positions[:, 0], grid.positions[:, 1])
    shells = np.floor(r / width + 0.5).astype(int)
    sw = grid.switched_by(t)
    counts = np.bincount(shells)
    hits = np.bincount(shells, weights=sw.astype(float))
    keep = counts > 0
    return np.flatnonzero(keep) * width, hits[keep] / counts[keep]


def pattern_rings(grid: Grid2D, t: float | None = None) -> int:
    """Number of consecutive unit annuli, from the centre out, that contain a switched node."""
    radii, share = ring_profile(grid, t)
    rings = 0
    for r, f in zip(radii, share):
        if f == 0.0:
            break
        rings += 1
    return rings


SWITCHED_FILL = "#9e9e9e"
UNSWITCHED_FILL = "#000000"


def cell_polygon(kind: str, center) -> np.ndarray:
    """Voronoi cell of a node: unit square, or the hexagon with circumradius 1/sqrt(3)."""
    cx, cy = center
    if kind == "square":
        return np.array([[cx - 0.5, cy - 0.5], [cx + 0.5, cy - 0.5], [cx + 0.5, cy + 0.5], [cx - 0.5, cy + 0.5]])
    ang = np.pi / 6 + np.pi / 3 * np.arange(6)
    return np.stack([cx + np.cos(ang) / SQRT3, cy + np.sin(ang) / SQRT3], axis=1)


def render_switch_map(grid: Grid2D, t: float | None = None) -> str:
    """SVG with one cell per node, grey if it has switched by ``t`` and black otherwise."""
    t = grid.t_end if t is None else float(t)
    sw = grid.switched_by(t)
    polys = [(cell_polygon(grid.lattice_kind, p), SWITCHED_FILL if s else UNSWITCHED_FILL)
             for p, s in zip(grid.positions.tolist(), sw)]
    extent = float(np.abs(grid.positions).max(initial=0.0)) + 1.0
    title = f"{grid.lattice_kind} lattice, radius {grid.radius:g}, t = {t:g}"
    return polygon_map(polys, extent, title=title)
