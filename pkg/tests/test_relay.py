from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hystlab.errors import DomainError, GridMismatch, InconsistentInitialData, ValidationError
from hystlab.relay import (
    RelayParams,
    RelayState,
    Signal,
    alt_relay_trace,
    completed_relay_admissible,
    relay_init,
    relay_trace,
)

P = RelayParams.constant(-1.0, 1.0)
P_NO_ALPHA = RelayParams.constant(None, 0.0)


@st.composite
def signals(draw, offset: float = 0.0, n_max: int = 12):
    """Piecewise-linear inputs on a quarter grid, so thresholds are hit exactly unless offset."""
    n = draw(st.integers(2, n_max))
    steps = draw(st.lists(st.integers(1, 5), min_size=n - 1, max_size=n - 1))
    levels = draw(st.lists(st.integers(-12, 12), min_size=n, max_size=n))
    times = np.concatenate([[0.0], np.cumsum(steps)]).astype(float)
    return Signal(times, np.array(levels) / 4.0 + offset)


def _start(params: RelayParams, sig: Signal, prefer: int) -> RelayState:
    u0 = sig.values[0]
    xi0 = prefer
    if u0 > params.beta:
        xi0 = -1
    elif params.alpha is not None and u0 < params.alpha:
        xi0 = 1
    return relay_init(params, xi0, u0)


def test_init_examples():
    assert relay_init(P, 1, 0.0).xi == 1
    with pytest.raises(InconsistentInitialData):
        relay_init(P, 1, 2.0)
    assert relay_init(P_NO_ALPHA, 1, -1.0).xi == 1
    with pytest.raises(ValidationError):
        relay_init(P, 0, 0.0)


def test_ramp_switches_at_beta():
    sig = Signal([0.0, 2.0], [0.0, 2.0])
    out, state = relay_trace(P, relay_init(P, 1, 0.0), sig)
    assert out.switches == ((1.0, -1),)
    assert list(out.times) == [0.0, 1.0, 2.0]
    assert list(out.values) == [1.0, -1.0, -1.0]
    assert out.left[1] == 1.0
    assert state.xi == -1 and state.switched_at == 1.0


def test_constant_input_never_switches():
    for xi0 in (1, -1):
        out, _ = relay_trace(P, relay_init(P, xi0, 0.0), Signal([0.0, 5.0], [0.0, 0.0]))
        assert out.switches == ()
        assert np.all(out.values == xi0)


def test_triangle_wave_three_switches():
    sig = Signal([0.0, 1.5, 4.5, 7.5], [0.0, 1.5, -1.5, 1.5])
    out, _ = relay_trace(P, relay_init(P, 1, 0.0), sig)
    assert [s for _, s in out.switches] == [-1, 1, -1]
    assert [t for t, _ in out.switches] == pytest.approx([1.0, 4.0, 7.0])


def test_touching_beta_switches():
    sig = Signal([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    out, _ = relay_trace(P, relay_init(P, 1, 0.0), sig)
    assert out.switches == ((1.0, -1),)


def test_domain_error_without_lower_threshold():
    bent = RelayParams(None, 0.0, lambda u: 1.0 + 0.0 * u, lambda u: -1.0 + 0.0 * u)
    out, _ = relay_trace(bent, relay_init(bent, 1, -1.0), Signal([0.0, 1.0], [-1.0, 3.0]))
    assert out.xi[-1] == -1
    with pytest.raises(InconsistentInitialData):
        relay_trace(P, RelayState(1, 1), Signal([0.0, 1.0], [2.0, 2.0]))


def test_params_validation():
    with pytest.raises(ValidationError):
        RelayParams.constant(1.0, 1.0)
    with pytest.raises(ValidationError):
        RelayParams.constant(-1.0, 1.0, h1=0.5, h_m1=0.5)
    with pytest.raises(ValidationError):
        Signal([0.0, 0.0], [1.0, 1.0])
    assert issubclass(DomainError, Exception)


def test_alt_jumps_when_leaving_beta():
    sig = Signal([0.0, 1.0, 1.25, 2.0], [0.0, 1.0, 1.0, 0.0])
    out = alt_relay_trace(P, 1, sig, ramp_rate=1.0)
    assert out.values[1] == 1.0  # reaching beta alone does not move the output
    assert out.values[2] == -1.0  # leaves beta downward after a partial ramp
    assert out.left[2] == pytest.approx(0.75)
    assert out.switches == ((1.25, -1),)


def test_alt_constant_inside_band():
    out = alt_relay_trace(P, -1, Signal([0.0, 1.0, 2.0], [0.0, 0.5, -0.5]))
    assert np.all(out.values == -1.0)


def test_alt_monotone_crossing_matches_relay():
    sig = Signal([0.0, 3.0], [0.0, 3.0])
    alt = alt_relay_trace(P, 1, sig)
    rel, _ = relay_trace(P, relay_init(P, 1, 0.0), sig)
    assert alt.switches == rel.switches
    np.testing.assert_array_equal(alt.values, rel.values)


def test_threshold_divergence_scenario():
    """Input touches beta and returns: relay, Alt and completed relay differ."""
    sig = Signal([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 1.0, 0.0])
    rel, _ = relay_trace(P, relay_init(P, 1, 0.0), sig)
    alt = alt_relay_trace(P, 1, sig, ramp_rate=0.25)
    assert rel.switches[0][0] == 1.0
    assert alt.switches[0][0] == 2.0
    assert alt.left[2] == pytest.approx(0.75)
    stay = Signal(sig.times, [1.0, 1.0, 1.0, 1.0])
    drop = Signal(sig.times, [1.0, 1.0, -1.0, -1.0])
    partial = Signal(sig.times, [1.0, 1.0, 0.5, 0.5])
    for cand in (stay, drop, partial):
        assert completed_relay_admissible(P, 1.0, sig, cand)

    peak = Signal([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    alt_peak = alt_relay_trace(P, 1, peak)
    assert alt_peak.switches == ((1.0, -1),)
    assert alt_peak.left[1] == 1.0 and alt_peak.values[1] == -1.0
    assert completed_relay_admissible(P, 1.0, peak, Signal(peak.times, [1.0, 1.0, 1.0]))
    assert completed_relay_admissible(P, 1.0, peak, alt_peak.as_signal())


def test_completed_relay_examples():
    eps = 0.25
    sig = Signal([0.0, 1.0, 2.0], [-1.0 + eps] * 3)
    assert completed_relay_admissible(P, 0.0, sig, Signal(sig.times, [0.0, 0.0, 0.0]))
    assert not completed_relay_admissible(P, 0.0, sig, Signal(sig.times, [0.0, 0.1, 0.1]))
    at_alpha = Signal([0.0, 1.0], [-1.0, -1.0])
    assert not completed_relay_admissible(P, 0.0, at_alpha, Signal(at_alpha.times, [0.5, 0.25]))
    assert completed_relay_admissible(P, 0.0, at_alpha, Signal(at_alpha.times, [0.25, 0.5]))
    assert not completed_relay_admissible(P, 0.0, sig, Signal(sig.times, [2.0, 2.0, 2.0]))
    with pytest.raises(GridMismatch):
        completed_relay_admissible(P, 0.0, sig, Signal([0.0, 1.0], [0.0, 0.0]))


@settings(max_examples=150, deadline=None)
@given(signals(), st.sampled_from([1, -1]))
def test_switches_only_at_thresholds(sig, prefer):
    out, _ = relay_trace(P, _start(P, sig, prefer), sig)
    u_at = np.interp([t for t, _ in out.switches], sig.times, sig.values)
    for (t, s), u in zip(out.switches, u_at):
        assert u == pytest.approx(P.beta if s == -1 else P.alpha, abs=1e-12)
    assert np.count_nonzero(np.diff(out.xi)) == len([t for t, _ in out.switches if t > sig.times[0]])


@settings(max_examples=150, deadline=None)
@given(signals(), st.sampled_from([1, -1]), st.data())
def test_semigroup(sig, prefer, data):
    k = data.draw(st.integers(1, len(sig) - 1))
    s0 = _start(P, sig, prefer)
    full, end_full = relay_trace(P, s0, sig)
    head, mid = relay_trace(P, s0, Signal(sig.times[: k + 1], sig.values[: k + 1]))
    tail, end_tail = relay_trace(P, mid, Signal(sig.times[k:], sig.values[k:]))
    tk = sig.times[k]
    keep = full.times >= tk
    np.testing.assert_array_equal(full.times[keep], tail.times)
    np.testing.assert_array_equal(full.values[keep], tail.values)
    np.testing.assert_array_equal(full.xi[keep], tail.xi)
    assert [s for s in full.switches if s[0] > tk] == [s for s in tail.switches if s[0] > tk]
    assert end_full.xi == end_tail.xi


@settings(max_examples=150, deadline=None)
@given(signals(), st.sampled_from([1, -1]))
def test_no_lower_threshold_is_monotone(sig, prefer):
    out, _ = relay_trace(P_NO_ALPHA, _start(P_NO_ALPHA, sig, prefer), sig)
    assert np.all(np.diff(out.xi) <= 0)


@settings(max_examples=150, deadline=None)
@given(signals(offset=0.125), st.sampled_from([1, -1]))
def test_alt_agrees_on_strict_crossings(sig, prefer):
    s0 = _start(P, sig, prefer)
    rel, _ = relay_trace(P, s0, sig)
    alt = alt_relay_trace(P, s0.xi, sig)
    np.testing.assert_array_equal(rel.times, alt.times)
    np.testing.assert_array_equal(rel.values, alt.values)
    assert rel.switches == alt.switches


@settings(max_examples=150, deadline=None)
@given(signals(), st.sampled_from([1, -1]))
def test_relay_output_is_admissible(sig, prefer):
    s0 = _start(P, sig, prefer)
    out, _ = relay_trace(P, s0, sig)
    assert completed_relay_admissible(P, float(s0.xi0), sig.resample(out.times), out.as_signal())


def test_signal_helpers():
    a = Signal([0.0, 1.0], [0.0, 1.0])
    b = Signal([1.0, 3.0], [1.0, -1.0])
    joined = a.concat(b)
    assert list(joined.times) == [0.0, 1.0, 3.0]
    assert joined.resample([2.0]).values[0] == pytest.approx(0.0)
    with pytest.raises(ValidationError):
        a.concat(Signal([2.0, 3.0], [1.0, 1.0]))
