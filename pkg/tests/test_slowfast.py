from __future__ import annotations

import math

import numpy as np
import pytest

from hystlab.engine import RelayLattice
from hystlab.errors import BlowUp, NoStableRoot, StabilityViolation, ValidationError
from hystlab.slowfast import (
    FITZHUGH_NAGUMO,
    SHIFTED_CUBIC,
    FastNonlinearity,
    SlowFastConfig,
    branch_classify,
    simulate_slowfast,
    upper_branch_value,
)


def test_upper_branch_values():
    assert upper_branch_value(SHIFTED_CUBIC, 0.0) == pytest.approx(1.0, abs=1e-9)
    v = upper_branch_value(FITZHUGH_NAGUMO, 0.0)
    assert v == pytest.approx(math.sqrt(3.0), abs=1e-12)
    assert FITZHUGH_NAGUMO.g_v(0.0, v) == pytest.approx(-2.0)
    with pytest.raises(NoStableRoot):
        upper_branch_value(SHIFTED_CUBIC, -30.0)


def test_config_validation():
    with pytest.raises(ValidationError):
        SlowFastConfig(delta=0.0, c=0.25)
    with pytest.raises(ValidationError):
        SlowFastConfig(delta=1e-2, c=0.25, L=1.0, dx=0.3)
    with pytest.raises(ValidationError):
        SlowFastConfig(delta=1e-2, c=0.25, scheme="leapfrog")
    cfg = SlowFastConfig(delta=1e-2, c=0.25, L=1.0, dx=0.01, scheme="explicit")
    assert cfg.step == pytest.approx(4e-5)
    assert cfg.grid.size == 201 and cfg.grid[100] == 0.0


def test_explicit_step_limit_enforced():
    cfg = SlowFastConfig(delta=1e-2, c=0.25, L=1.0, dx=0.01, scheme="explicit", dt=1e-4, T=0.01)
    with pytest.raises(StabilityViolation):
        simulate_slowfast(cfg)
    cfg = SlowFastConfig(delta=1e-2, c=0.25, L=1.0, dx=0.01, dt_fast=5e-3, T=0.01)
    with pytest.raises(StabilityViolation):
        simulate_slowfast(cfg)


def test_blow_up_detected():
    runaway = FastNonlinearity("runaway", lambda u, v: v * v + 0.0 * u, lambda u, v: 2.0 * v + 0.0 * u)
    cfg = SlowFastConfig(delta=1e-2, c=0.25, L=1.0, dx=0.02, T=0.2, g=runaway, v0=1.0)
    with pytest.raises(BlowUp):
        simulate_slowfast(cfg)


def _frozen_oracle(cfg: SlowFastConfig, v0: float, times):
    """Forced heat equation on the same grid solved by the relay-lattice engine."""
    x = cfg.grid
    m = x.size
    K = (np.diag(np.full(m - 1, 1.0), 1) + np.diag(np.full(m - 1, 1.0), -1) - 2.0 * np.eye(m))
    K[0, 1] = K[-1, -2] = 2.0
    K /= cfg.dx**2
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    engine = RelayLattice(K, -cfg.c * x**2, np.ones(m, dtype=int), v0, 0.0, beta=1e9,
                          weights=w, dt_max=0.01)
    run = engine.run(cfg.T)
    return np.array([run.u(t) for t in times])


def test_frozen_fast_variable_matches_lattice_engine():
    cfg = SlowFastConfig(delta=1e-4, c=0.25, L=1.0, dx=0.01, T=0.05, skip_fast=True, snapshots=(0.02,))
    res = simulate_slowfast(cfg)
    assert res.fast_substeps == 0
    np.testing.assert_array_equal(res.v, 1.0)
    oracle = _frozen_oracle(cfg, 1.0, res.times)
    assert np.max(np.abs(res.u - oracle)) <= 1e-6


def test_snapshots_and_symmetry():
    cfg = SlowFastConfig(delta=1e-2, c=0.25, L=2.0, dx=0.01, T=0.3, snapshots=(0.1, 0.2))
    res = simulate_slowfast(cfg)
    np.testing.assert_allclose(res.times, [0.0, 0.1, 0.2, 0.3], atol=1e-12)
    for u, v in zip(res.u, res.v):
        np.testing.assert_allclose(u, u[::-1], atol=1e-12)
        np.testing.assert_allclose(v, v[::-1], atol=1e-12)
    u, v = res.snapshot(0.2)
    np.testing.assert_array_equal(u, res.u[2])
    assert res.u.max() <= max(0.0, 0.0) + cfg.T * 2.0 + 1.0


def test_explicit_and_implicit_schemes_agree():
    base = dict(delta=5e-2, c=0.25, L=1.0, dx=0.02, T=0.1)
    explicit = simulate_slowfast(SlowFastConfig(scheme="explicit", **base))
    implicit = simulate_slowfast(SlowFastConfig(scheme="implicit", dt=1.6e-4, **base))
    assert np.max(np.abs(explicit.u[-1] - implicit.u[-1])) <= 1e-3
    assert np.max(np.abs(explicit.v[-1] - implicit.v[-1])) <= 1e-2


def test_below_fold_stays_on_initial_branch():
    cfg = SlowFastConfig(delta=1e-2, c=2.0, L=2.0, dx=0.01, T=0.3, perturb=lambda x: -0.5 + 0.0 * x)
    res = simulate_slowfast(cfg)
    summary = branch_classify(SHIFTED_CUBIC, res.u[-1], res.v[-1], res.x)
    assert np.all(summary.label == 1)
    assert summary.on_branch_fraction == 1.0
    assert summary.intervals.size == 0 and math.isnan(summary.median_interval)


def test_classification_of_constructed_profile():
    x = np.round(np.arange(10) * 0.1, 12)
    u = np.full(10, -0.5)
    probe = branch_classify(SHIFTED_CUBIC, u, np.full(10, 5.0), x)
    hi = probe.nearest[0]
    lo = branch_classify(SHIFTED_CUBIC, u, np.full(10, -5.0), x).nearest[0]
    pattern = np.array([1, 1, -1, -1, -1, 1, 1, -1, 1, 1])
    v = np.where(pattern > 0, hi, lo)
    s = branch_classify(SHIFTED_CUBIC, u, v, x)
    np.testing.assert_array_equal(s.label, pattern)
    assert np.max(s.defect) <= 1e-9
    np.testing.assert_allclose(s.intervals, [0.3, 0.2, 0.1])
    assert s.median_interval == pytest.approx(0.2)
    with pytest.raises(NoStableRoot):
        branch_classify(SHIFTED_CUBIC, np.full(10, -30.0), v, x, strict=True)
    with pytest.raises(ValidationError):
        branch_classify(SHIFTED_CUBIC, u, v[:5], x)


def test_touch_creates_layers():
    res = simulate_slowfast(SlowFastConfig(delta=1e-2, c=0.25, T=1.0))
    s = branch_classify(SHIFTED_CUBIC, res.u[-1], res.v[-1], res.x)
    assert s.on_branch_fraction >= 0.95
    assert s.intervals.size >= 3
    assert set(np.unique(s.label)) == {-1, 1}
