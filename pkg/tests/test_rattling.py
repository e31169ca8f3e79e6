from __future__ import annotations

import math

import numpy as np
import pytest

from hystlab.errors import InsufficientData, ParamMismatch, ValidationError
from hystlab.lattice1d import SwitchRecord
from hystlab.rattling import (
    analyze,
    block_pattern,
    fit_quadratic_law,
    gradient_bound,
    residual_exponent,
    switch_ratio,
    weak_limit_profile,
)

from conftest import A_HALF_TWO


def _records(law, n_max: int, horizon: float = math.inf):
    return [SwitchRecord(n, law(abs(n)), horizon) for n in range(-n_max, n_max + 1)]


def test_exact_quadratic_law():
    fit = fit_quadratic_law(_records(lambda n: 3.0 * n * n, 40))
    assert fit.a == pytest.approx(3.0, rel=1e-14)
    assert np.allclose(fit.q, 0.0, atol=1e-9)
    assert fit.E_min == pytest.approx(0.0, abs=1e-10)
    assert fit.fitted


def test_square_root_residual():
    law = lambda n: 3.0 * n * n + math.sqrt(n)  # noqa: E731
    errs = [abs(fit_quadratic_law(_records(law, m)).a - 3.0) for m in (40, 400)]
    assert errs[1] < errs[0]
    hinted = fit_quadratic_law(_records(law, 40), a_hint=3.0)
    assert hinted.E_min == pytest.approx(1.0, rel=1e-12)
    assert not hinted.fitted
    assert residual_exponent(hinted.n, hinted.q) == pytest.approx(0.5, abs=0.05)


def test_fit_needs_enough_switches():
    with pytest.raises(InsufficientData):
        fit_quadratic_law(_records(lambda n: 3.0 * n * n, 12))


def test_all_switch_ratio_and_degenerate_blocks():
    recs = _records(lambda n: 3.0 * n * n, 50)
    assert switch_ratio(recs, 0, 45) == 0.0
    tally = block_pattern(recs, 1, 0, j_start=5, h1=2.0, h_m1=0.0)
    assert tally.fraction == 1.0 and tally.verdict and tally.mirror_agrees


def test_ratio_and_block_argument_checks():
    recs = _records(lambda n: 3.0 * n * n, 50)
    with pytest.raises(ValidationError):
        switch_ratio(recs, 0, 49)  # inside the guard band
    with pytest.raises(ValidationError):
        switch_ratio(recs, 5, 5)
    with pytest.raises(ParamMismatch):
        block_pattern(recs, 2, 1, j_start=5, h1=2.0, h_m1=-2.0)
    with pytest.raises(ValidationError):
        block_pattern(recs, 2, 2, j_start=5)


def test_undecided_nodes_are_not_counted():
    recs = [SwitchRecord(n, 3.0 * n * n if abs(n) <= 30 else math.inf, 3000.0) for n in range(-50, 51)]
    with pytest.raises(InsufficientData):
        switch_ratio(recs, 0, 45, law=(3.0, 1.0))
    assert switch_ratio(recs, 0, 30, law=(3.0, 1.0)) == 0.0


def test_ratio_with_no_switches_is_infinite():
    recs = [SwitchRecord(n, math.inf) for n in range(-30, 31)]
    assert switch_ratio(recs, 1, 20) == math.inf


def test_ratio_is_mirror_invariant(run_ratio_half):
    _, recs = run_ratio_half
    mirrored = [SwitchRecord(-r.n, r.t_switch, r.horizon) for r in recs]
    assert switch_ratio(recs, 10, 150) == switch_ratio(mirrored, 10, 150)


def test_quadratic_run_switches_everywhere(run_quadratic_law):
    _, recs = run_quadratic_law
    assert switch_ratio(recs, 0, 55) == 0.0


def test_equal_thresholds_give_two_blocks(run_ratio_one):
    tally = block_pattern(run_ratio_one[1], 1, 1, j_start=101, h1=2.0, h_m1=-2.0)
    assert tally.verdict, tally


def test_residual_growth_with_negative_branch(run_ratio_half):
    fit = fit_quadratic_law(run_ratio_half[1])
    assert residual_exponent(fit.n, fit.q) <= 1.1


def test_gradient_bound_is_window_independent(run_quadratic_law):
    traj, recs = run_quadratic_law
    half = gradient_bound(traj, recs, n_max=25).b
    full = gradient_bound(traj, recs, n_max=50).b
    assert full >= 0 and half >= 0
    assert abs(full - half) <= 0.1 * full
    # initial differences c|2k+1| grow linearly, so t = 0 has to be excluded
    assert 0.5 * (2 * 50 + 1) > 10 * full


def test_gradient_pairs_are_symmetric(run_quadratic_law):
    traj, _ = run_quadratic_law
    N = traj.config.N
    u = traj.u(0.5 * traj.t_end)
    k = np.arange(0, 60)
    right = u[k + 1 + N] - u[k + N]
    left = u[-k + N] - u[-k - 1 + N]
    np.testing.assert_allclose(right, -left, atol=1e-9)


def test_weak_limit_profile(run_ratio_one):
    traj, recs = run_ratio_one
    prof = weak_limit_profile(traj, recs, A_HALF_TWO, 9)
    assert np.all(prof.average >= -2.0 - 1e-12) and np.all(prof.average <= 2.0 + 1e-12)
    # the three nodes around the origin all switch, so start past that defect
    inside = (np.abs(prof.n) >= 10) & (np.abs(prof.n) < 0.5 * prof.half_width)
    outside = np.abs(prof.n) > 1.05 * prof.half_width + 5
    assert np.all(np.abs(prof.average[inside]) <= 0.25)
    assert np.allclose(prof.average[outside], 2.0)
    raw = weak_limit_profile(traj, recs, A_HALF_TWO, 1)
    assert set(np.unique(raw.average[np.abs(raw.n) < 100])) == {-2.0, 2.0}
    with pytest.raises(ValidationError):
        weak_limit_profile(traj, recs, A_HALF_TWO, 0)


def test_analyze_collects_everything(run_small):
    traj, recs = run_small
    report = analyze(traj, recs, a=A_HALF_TWO, j_min=0)
    assert report.a_fit == pytest.approx(A_HALF_TWO, rel=0.05)
    assert report.ratio == 0.0 or math.isfinite(report.ratio)
    assert report.gradient_bound_b >= 0
    assert report.block_tally is None and report.block_verdict
