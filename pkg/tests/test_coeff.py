from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hystlab.coeff import coefficient_residual, integral_If, solve_a, verify_hypothesis
from hystlab.errors import MissingSwitch, ValidationError
from hystlab.lattice1d import SwitchRecord

from conftest import A_HALF_TWO

# a(c=1/2, h1) from the root solver, frozen after cross-checking the residual
# with adaptive quadrature
FROZEN_A = {1.1: 84.21666187849998, 1.5: 4.257489966096156, 2.0: A_HALF_TWO, 2.5: 0.7114006243161525}


@pytest.mark.parametrize("a", [1e-4, 0.3, 1.0, 17.0, 900.0])
def test_If_positive_and_rules_agree(a):
    g = integral_If(a)
    assert g > 0
    assert integral_If(a, method="adaptive") == pytest.approx(g, abs=1e-8)


def test_If_large_a_expansion():
    a = 1e4
    lead = math.sqrt(math.pi * a) / 2
    value = integral_If(a)
    assert value == pytest.approx(lead - 1.0, rel=1e-3)
    assert abs(value - lead) / lead < 0.012  # the -1 correction keeps this above 1%


def test_residual_negative_near_zero():
    assert coefficient_residual(1e-12, 0.5, 2.0) == pytest.approx(-0.5, abs=1e-5)


@pytest.mark.parametrize("h1", sorted(FROZEN_A))
def test_solve_a_frozen_values(h1):
    root = solve_a(0.5, h1)
    assert root.a == pytest.approx(FROZEN_A[h1], rel=1e-9)
    assert abs(coefficient_residual(root.a, 0.5, h1, method="adaptive")) <= 1e-7
    lo, hi = root.bracket
    assert lo <= root.a <= hi


def test_solve_a_rejects_subcritical():
    with pytest.raises(ValidationError):
        solve_a(0.5, 1.0)
    with pytest.raises(ValidationError):
        solve_a(-1.0, 3.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(2.05, 8.0), st.floats(0.2, 5.0))
def test_a_depends_on_ratio_only(ratio, lam):
    assert solve_a(lam, lam * ratio).a == pytest.approx(solve_a(1.0, ratio).a, rel=1e-9)


def test_a_decreases_with_threshold():
    a = [solve_a(0.5, h).a for h in np.linspace(1.1, 2.5, 15)]
    assert np.all(np.diff(a) < 0)


def test_verify_vacuous_at_origin():
    report = verify_hypothesis(0.5, 2.0, A_HALF_TWO, 1.0, 0, [])
    assert report.verdict and report.switch_times == ((0, 0.0),)


def test_verify_missing_switch():
    recs = [SwitchRecord(0, 0.0), SwitchRecord(1, 2.0), SwitchRecord(2, math.inf, 10.0)]
    with pytest.raises(MissingSwitch):
        verify_hypothesis(0.5, 2.0, A_HALF_TWO, 1.0, 2, recs)
    with pytest.raises(ValidationError):
        verify_hypothesis(0.5, 2.0, A_HALF_TWO, 0.0, 2, recs)


def test_verify_on_simulation(run_quadratic_law):
    _, records = run_quadratic_law
    probe = verify_hypothesis(0.5, 2.0, A_HALF_TWO, 1.0, 40, records)
    report = verify_hypothesis(0.5, 2.0, A_HALF_TWO, probe.E_min, 40, records)
    assert report.verdict
    skewed = verify_hypothesis(0.5, 2.0, 1.2 * A_HALF_TWO, probe.E_min, 40, records)
    assert not skewed.verdict
