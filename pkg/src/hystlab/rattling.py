"""Post-processing of lattice runs: switching-time law, switch ratio, block
pattern, gradient bound and window-averaged hysteresis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InsufficientData, ParamMismatch, ValidationError

GUARD = 0.1


@dataclass(frozen=True)
class QuadraticFit:
    """``t_n = a n^2 + q_n`` on the switching nodes ``n >= 1``."""

    a: float
    n: np.ndarray
    q: np.ndarray
    E_min: float
    fitted: bool

    def bound_holds(self, E: float) -> bool:
        return bool(np.all(np.abs(self.q) <= E * np.sqrt(self.n) * (1 + 1e-12)))


def _positive_switches(records) -> tuple[np.ndarray, np.ndarray]:
    pts = sorted((r.n, r.t_switch) for r in records if r.n >= 1 and math.isfinite(r.t_switch))
    if not pts:
        return np.zeros(0, dtype=int), np.zeros(0)
    n, t = zip(*pts)
    return np.asarray(n, dtype=int), np.asarray(t, dtype=float)


def fit_quadratic_law(records, a_hint: float | None = None, n_min: int = 10) -> QuadraticFit:
    """Least-squares ``a`` of ``t_n ~ a n^2`` over switching nodes ``n >= n_min``.

    With ``a_hint`` the coefficient is taken as given and only the residuals
    ``q_n = t_n - a n^2`` and ``E_min = max |q_n| / sqrt(n)`` are computed.
    """
    n, t = _positive_switches(records)
    tail = n >= n_min
    if tail.sum() < 10:
        raise InsufficientData(f"need at least 10 switching nodes with n >= {n_min}, have {int(tail.sum())}")
    if a_hint is None:
        n2 = n[tail].astype(float) ** 2
        a = float(np.dot(n2, t[tail]) / np.dot(n2, n2))
    else:
        a = float(a_hint)
    q = t - a * n.astype(float) ** 2
    E_min = float(np.max(np.abs(q) / np.sqrt(n)))
    return QuadraticFit(a=a, n=n, q=q, E_min=E_min, fitted=a_hint is None)


def residual_exponent(n, q, n_min: int = 10) -> float:
    """Growth exponent of ``|q_n|`` from the maxima over dyadic blocks of ``n``.

    Regressing ``log max_{block} |q|`` on ``log`` of the node attaining it
    tracks the envelope and is not thrown off by residuals that pass through
    zero.
    """
    n = np.asarray(n, dtype=float)
    q = np.abs(np.asarray(q, dtype=float))
    keep = n >= n_min
    n, q = n[keep], q[keep]
    if n.size < 4:
        raise InsufficientData("need at least 4 residuals for an exponent")
    # blocks [n_min 2^(k/2), n_min 2^((k+1)/2)) give several points per octave
    edges = n_min * 2.0 ** (0.5 * np.arange(0, 2 * math.log2(n.max() / n_min) + 2))
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (n >= lo) & (n < hi) & (q > 0)
        if sel.any():
            k = int(np.argmax(q[sel]))
            xs.append(math.log(n[sel][k]))
            ys.append(math.log(q[sel][k]))
    if len(xs) < 2:
        raise InsufficientData("residual range too narrow for an exponent")
    return float(np.polyfit(xs, ys, 1)[0])


def _window(records) -> int:
    return max(abs(r.n) for r in records)


def _classify(records, law: tuple[float, float] | None) -> dict[int, bool | None]:
    """site -> True (switches), False (never switches) or None (undecided)."""
    out: dict[int, bool | None] = {}
    for r in records:
        if math.isfinite(r.t_switch):
            out[r.n] = True
        elif law is None or not math.isfinite(r.horizon):
            out[r.n] = False
        else:
            a, E = law
            m = abs(r.n)
            out[r.n] = False if r.horizon > a * m * m + 3.0 * E * math.sqrt(m) else None
    return out


def _law_for(records, law) -> tuple[float, float] | None:
    if law is not None:
        return (law.a, law.E_min) if isinstance(law, QuadraticFit) else tuple(law)
    if any(math.isfinite(r.horizon) for r in records):
        fit = fit_quadratic_law(records)
        return fit.a, fit.E_min
    return None


def _check_guard(records, j_max: int, guard: float) -> None:
    N = _window(records)
    if j_max > math.floor((1.0 - guard) * N):
        raise ValidationError(f"j_max={j_max} reaches into the {guard:.0%} guard band of the window N={N}")


def switch_ratio(records, j_min: int, j_max: int, *, guard: float = GUARD, law=None) -> float:
    """Non-switching over switching nodes among ``u_{+-j}``, ``j_min <= j <= j_max``.

    A node without a switch counts as non-switching only when the horizon
    exceeds ``a n^2 + 3 E sqrt(n)`` for the switching law ``law`` (fitted from
    the records by default); otherwise :class:`InsufficientData` is raised.
    Returns ``inf`` when no node in range switches.
    """
    if not 0 <= j_min < j_max:
        raise ValidationError("need 0 <= j_min < j_max")
    _check_guard(records, j_max, guard)
    status = _classify(records, _law_for(records, law))
    sites = {j for j in range(j_min, j_max + 1)} | {-j for j in range(j_min, j_max + 1)}
    undecided = sorted(n for n in sites if status.get(n) is None)
    if undecided:
        raise InsufficientData(f"horizon too short to classify nodes {undecided[:5]}")
    n_s = sum(1 for n in sites if status[n])
    n_ns = len(sites) - n_s
    return math.inf if n_s == 0 else n_ns / n_s


@dataclass(frozen=True)
class BlockTally:
    p_s: int
    p_ns: int
    n_blocks: int
    n_exact: int
    mirror_agrees: bool
    threshold: float = 0.9

    @property
    def fraction(self) -> float:
        return self.n_exact / self.n_blocks if self.n_blocks else math.nan

    @property
    def verdict(self) -> bool:
        return self.n_blocks > 0 and self.fraction >= self.threshold


def block_pattern(records, p_s: int, p_ns: int, j_start: int, *, h1: float | None = None,
                  h_m1: float | None = None, guard: float = GUARD, law=None,
                  threshold: float = 0.9, j_end: int | None = None) -> BlockTally:
    """Share of blocks ``{u_{j+1}, ..., u_{j+p_s+p_ns}}`` (``j >= j_start``) with exactly ``p_s`` switches.

    Blocks stay within ``|n| <= j_end``, by default the window minus its guard band.
    """
    if p_s < 1 or p_ns < 0 or math.gcd(p_s, p_ns) != 1:
        raise ValidationError("p_s and p_ns must be co-prime with p_s >= 1")
    if h1 is not None and h_m1 is not None and Fraction(p_ns, p_s) != Fraction(abs(h_m1) / h1).limit_denominator(10**6):
        raise ParamMismatch(f"p_ns/p_s = {p_ns}/{p_s} does not match |h_m1|/h1 = {abs(h_m1) / h1:g}")
    L = p_s + p_ns
    limit = math.floor((1.0 - guard) * _window(records))
    j_end = limit if j_end is None else min(j_end, limit)
    status = _classify(records, _law_for(records, law))
    sites = range(j_start + 1, j_end + 1)
    if any(status.get(n) is None or status.get(-n) is None for n in sites):
        raise InsufficientData("horizon too short to classify every node in the block range")
    n_blocks = n_exact = 0
    for j in range(j_start, j_end - L + 1):
        n_blocks += 1
        n_exact += sum(status[n] for n in range(j + 1, j + L + 1)) == p_s
    mirror = all(status[n] == status[-n] for n in sites)
    return BlockTally(p_s, p_ns, n_blocks, n_exact, mirror, threshold)


@dataclass(frozen=True)
class GradientBound:
    b: float
    times: np.ndarray
    reach: np.ndarray  # largest switched index n with t_n <= t, per sample time


def gradient_bound(traj, records, *, n_max: int | None = None, samples: int = 200) -> GradientBound:
    """Max of ``|u_{k+1}(t) - u_k(t)|`` over ``|k| <= n``, ``t >= t_n``.

    Sampled on a uniform grid merged with the switching moments ``t_n``,
    ``n <= n_max``, where the difference next to the front peaks.
    """
    st = {r.n: r.t_switch for r in records if r.n >= 0}
    n_max = max(st) if n_max is None else n_max
    moments = [t for n, t in st.items() if n <= n_max and t <= traj.t_end]
    times = np.unique(np.concatenate([np.linspace(0.0, traj.t_end, samples + 1), moments]))
    N = traj.config.N
    b = 0.0
    reach = np.full(times.shape, -1)
    for i, t in enumerate(times):
        done = [n for n in range(0, n_max + 1) if st.get(n, math.inf) <= t]
        if not done:
            continue
        m = max(done)
        reach[i] = m
        u = traj.u(t)
        k = np.arange(-m, min(m, N - 1) + 1)
        b = max(b, float(np.max(np.abs(u[k + 1 + N] - u[k + N]))))
    return GradientBound(b=b, times=times, reach=reach)


@dataclass(frozen=True)
class WeakLimitProfile:
    t: float
    n: np.ndarray
    average: np.ndarray
    reference: np.ndarray
    half_width: float


def weak_limit_profile(traj, records, a: float, window_width: int, t: float | None = None) -> WeakLimitProfile:
    """Moving averages of the hysteresis output over ``window_width`` nodes.

    ``reference`` is the step profile 0 for ``|n| < sqrt(t / a)`` and ``h1``
    outside.
    """
    if window_width < 1:
        raise ValidationError("window_width must be at least 1")
    t = traj.t_end if t is None else float(t)
    H = traj.hysteresis(t)
    N = traj.config.N
    kernel = np.ones(window_width) / window_width
    avg = np.convolve(H, kernel, mode="valid")
    lo = -N + (window_width - 1) // 2
    n = np.arange(lo, lo + avg.size)
    half = math.sqrt(t / a)
    ref = np.where(np.abs(n) < half, 0.0, traj.config.h1)
    return WeakLimitProfile(t=t, n=n, average=avg, reference=ref, half_width=half)


@dataclass(frozen=True)
class RattlingReport:
    a_fit: float
    q: np.ndarray = field(repr=False)
    E_min: float
    ratio: float
    block_verdict: bool
    block_tally: BlockTally | None
    gradient_bound_b: float
    weak_limit_profile: WeakLimitProfile = field(repr=False)
    residual_slope: float
    j_range: tuple[int, int] = (0, 0)


def analyze(traj, records, *, a: float | None = None, j_min: int = 0, window_width: int = 9,
            block: tuple[int, int] | None = None) -> RattlingReport:
    """All diagnostics of one run in a single report."""
    fit = fit_quadratic_law(records)
    N = traj.config.N
    # stop the statistics where the horizon no longer decides every node
    status = _classify(records, (fit.a, fit.E_min))
    j_max = 0
    while j_max < math.floor((1.0 - GUARD) * N) and all(status.get(s) is not None for s in (j_max + 1, -j_max - 1)):
        j_max += 1
    if j_max <= j_min:
        raise InsufficientData(f"horizon decides no node beyond j_min={j_min}")
    ratio = switch_ratio(records, j_min, j_max, law=fit)
    tally = None
    if block is not None:
        tally = block_pattern(records, block[0], block[1], j_start=j_max // 2, h1=traj.config.h1,
                              h_m1=traj.config.h_m1, law=fit, j_end=j_max)
    slope = residual_exponent(fit.n, fit.q)
    profile = weak_limit_profile(traj, records, a if a is not None else fit.a, window_width)
    return RattlingReport(
        a_fit=fit.a, q=fit.q, E_min=fit.E_min, ratio=ratio,
        block_verdict=bool(tally.verdict) if tally else True, block_tally=tally,
        gradient_bound_b=gradient_bound(traj, records).b, weak_limit_profile=profile,
        residual_slope=slope, j_range=(j_min, j_max),
    )
