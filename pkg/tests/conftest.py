from __future__ import annotations

import time

import pytest

from hystlab.coeff import solve_a
from hystlab.lattice1d import LatticeConfig, simulate

ACCEPTANCE = pytest.StashKey[list]()
A_HALF_TWO = 1.33494276343877  # a(c=1/2, h1=2), frozen from the root solver
RUN_SECONDS: dict[str, float] = {}


def timed(name: str, cfg: LatticeConfig):
    start = time.perf_counter()
    out = simulate(cfg)
    RUN_SECONDS[name] = time.perf_counter() - start
    return out


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for a numbered criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} | {detail}"
        request.config.stash[ACCEPTANCE].append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def a_ref() -> float:
    return solve_a(0.5, 2.0).a


@pytest.fixture(scope="session")
def run_quadratic_law(a_ref):
    """c=1/2, h1=2, h_m1=0 on |n| <= 120, long enough for n <= 60 to switch."""
    cfg = LatticeConfig(c=0.5, h1=2.0, h_m1=0.0, N=120, T=1.05 * a_ref * 60**2 + 50.0)
    return timed("quadratic_law", cfg)


@pytest.fixture(scope="session")
def run_small(a_ref):
    """c=1/2, h1=2, h_m1=0 on |n| <= 40 for quick structural checks."""
    cfg = LatticeConfig(c=0.5, h1=2.0, h_m1=0.0, N=40, T=1.2 * a_ref * 20**2 + 50.0)
    return simulate(cfg)


def _ratio_run(a: float, h_m1: float):
    cfg = LatticeConfig(c=0.5, h1=2.0, h_m1=h_m1, N=225, T=1.1 * a * 200**2)
    return timed(f"ratio_{h_m1:g}", cfg)


@pytest.fixture(scope="session")
def run_ratio_one(a_ref):
    return _ratio_run(a_ref, -2.0)


@pytest.fixture(scope="session")
def run_ratio_half(a_ref):
    return _ratio_run(a_ref, -1.0)
