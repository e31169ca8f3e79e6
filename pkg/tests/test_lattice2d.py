from __future__ import annotations

import math

import numpy as np
import pytest

from hystlab.engine import RelayLattice
from hystlab.errors import BoundaryContamination, ValidationError
from hystlab.lattice2d import (
    _embed,
    _images,
    build_grid,
    canonical,
    cell_polygon,
    degree,
    pattern_rings,
    render_switch_map,
    ring_profile,
    simulate2d,
)


@pytest.fixture(scope="module")
def square_run():
    return simulate2d(0.5, 3.0, -3.0, "square", 12, 150.0)


@pytest.fixture(scope="module")
def triangular_run():
    return simulate2d(0.5, 4.5, -4.5, "triangular", 12, 150.0)


def test_grid_sizes():
    assert build_grid("square", 0).size == 1
    assert build_grid("square", 1).size == 5
    assert build_grid("triangular", 1).size == 7
    assert build_grid("square", 5).size == 81
    assert degree("square") == 4 and degree("triangular") == 6
    with pytest.raises(ValidationError):
        build_grid("hexagonal", 3)
    with pytest.raises(ValidationError):
        build_grid("square", -1)


@pytest.mark.parametrize("kind,order", [("square", 8), ("triangular", 12)])
def test_point_group_preserves_length(kind, order):
    imgs = _images(kind, 3, 1)
    assert len(set(imgs)) == order
    r2 = [float(p @ p) for p in (_embed(kind, *ij) for ij in imgs)]
    assert np.allclose(r2, r2[0])
    assert canonical(kind, *imgs[5]) == canonical(kind, 3, 1)


def _full_oracle(kind: str, c: float, h1: float, h_m1: float, radius: float, T: float):
    """Same dynamics on every node of the disc, without the symmetry reduction."""
    grid = build_grid(kind, radius)
    where = grid.index()
    steps = {"square": ((1, 0), (-1, 0), (0, 1), (0, -1)),
             "triangular": ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))}[kind]
    n = grid.size
    K = np.zeros((n, n))
    source = np.zeros(n)
    r2 = np.einsum("ij,ij->i", grid.positions, grid.positions)
    for k, (i, j) in enumerate(grid.coords.tolist()):
        for di, dj in steps:
            nb = (i + di, j + dj)
            if nb in where:
                K[k, where[nb]] += 1.0
                K[k, k] -= 1.0
            else:
                p = _embed(kind, *nb)
                source[k] += c * (r2[k] - float(p @ p))
    xi0 = np.ones(n, dtype=int)
    origin = int(np.argmin(r2))
    xi0[origin] = -1
    run = RelayLattice(K, -c * r2, xi0, h1, h_m1, source=source, tol_event=1e-10,
                       max_value=1e-12 * c * radius**2).run(T)
    st = run.switch_times.copy()
    st[origin] = 0.0
    return st


@pytest.mark.parametrize("kind,h1", [("square", 3.0), ("triangular", 4.5)])
def test_reduced_run_matches_full_lattice(kind, h1):
    reduced = simulate2d(0.5, h1, -h1, kind, 12, 40.0)
    full = _full_oracle(kind, 0.5, h1, -h1, 12, 40.0)
    fin = np.isfinite(full)
    assert np.array_equal(fin, np.isfinite(reduced.switch_time))
    assert fin.sum() > 5
    np.testing.assert_allclose(reduced.switch_time[fin], full[fin], atol=1e-9)


@pytest.mark.parametrize("run", ["square_run", "triangular_run"])
def test_switch_map_is_symmetric(run, request):
    grid = request.getfixturevalue(run)
    where = grid.index()
    for k, (i, j) in enumerate(grid.coords.tolist()):
        for img in _images(grid.lattice_kind, i, j):
            assert grid.switch_time[where[img]] == grid.switch_time[k]
    u = grid.u(0.5 * grid.t_end)
    for k, (i, j) in enumerate(grid.coords.tolist()):
        assert u[where[(j, i)]] == u[k]


def test_rings_and_profile(square_run):
    radii, share = ring_profile(square_run)
    assert radii[0] == 0.0 and share[0] == 1.0
    assert np.all((share >= 0) & (share <= 1))
    rings = pattern_rings(square_run)
    assert 3 <= rings <= len(radii)
    assert pattern_rings(square_run, t=0.0) == 1
    assert square_run.xi(0.0).sum() == square_run.size - 2


def test_rendering(triangular_run):
    svg = render_switch_map(triangular_run)
    assert svg.count("<polygon") == triangular_run.size
    assert svg == render_switch_map(triangular_run)
    assert svg.count('fill="#9e9e9e"') == int(triangular_run.switched_by(triangular_run.t_end).sum())
    hexagon = cell_polygon("triangular", (0.0, 0.0))
    assert np.allclose(np.hypot(hexagon[:, 0], hexagon[:, 1]), 1 / math.sqrt(3))
    square = cell_polygon("square", (2.0, 1.0))
    assert square.min(axis=0).tolist() == [1.5, 0.5]


def test_no_switch_below_threshold():
    grid = simulate2d(0.5, 1.5, 0.0, "square", 10, 30.0)
    assert int(np.isfinite(grid.switch_time).sum()) == 1


def test_monitor_trips_for_small_disc():
    with pytest.raises(BoundaryContamination):
        simulate2d(0.5, 3.0, -3.0, "square", 8, 2000.0)


def test_argument_checks():
    with pytest.raises(ValidationError):
        simulate2d(0.0, 3.0, 0.0, "square", 5, 10.0)
    with pytest.raises(ValidationError):
        simulate2d(0.5, 3.0, 1.0, "square", 5, 10.0)
    with pytest.raises(ValidationError):
        simulate2d(0.5, 3.0, 0.0, "square", 5, -1.0)
