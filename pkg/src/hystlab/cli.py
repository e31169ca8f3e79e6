"""Command-line front end.

Every command takes its parameters from flags, from a section of an INI file
given with ``--config`` or from built-in defaults, in that order of
precedence.  Results are written to the output directory as CSV files with a
``# key: value`` metadata block, SVG figures and plain-text reports.
"""

from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import BoundaryContamination, HystlabError, ValidationError

OUTPUT_ENV = "HYSTLAB_OUTPUT_DIR"
DEFAULT_OUTPUT = "hystlab-output"
FIGURES = ("fig7", "fig8", "fig9", "fig10")


@dataclass(frozen=True)
class Param:
    kind: type
    default: Any
    help: str


@dataclass(frozen=True)
class Command:
    params: dict[str, Param]
    columns: str
    validate: Callable[[dict], None] = lambda p: None

    def defaults(self) -> dict[str, Any]:
        return {k: p.default for k, p in self.params.items()}


def _need(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ValidationError(f"{key}: {msg}")


def _positive(p: dict, *keys: str) -> None:
    for k in keys:
        _need(p[k] > 0, k, f"must be positive, got {p[k]}")


def _branches(p: dict) -> None:
    _need(p["h_m1"] <= 0, "h_m1", f"need h_m1 <= 0, got {p['h_m1']}")
    _need(p["h1"] >= 0, "h1", f"need h1 >= 0, got {p['h1']}")


def _switching(p: dict) -> None:
    _positive(p, "c")
    _need(p["h1"] > 2 * p["c"], "h1", f"need h1 > 2c for switching (h1={p['h1']}, 2c={2 * p['c']})")


def _v_relay(p):
    _need(p["beta"] > p["alpha"], "beta", "need alpha < beta")
    _need(p["xi0"] in (-1, 1), "xi0", "must be -1 or 1")
    _need(p["variant"] in ("ideal", "alt"), "variant", "must be 'ideal' or 'alt'")
    _positive(p, "period", "periods", "ramp_rate")
    _need(p["samples"] >= 2, "samples", "need at least 2 samples per period")


def _v_green(p):
    _need(p["n_max"] >= 0, "n_max", "must be non-negative")
    times = _floats(p["times"], "times")
    _need(all(t >= 0 for t in times), "times", "must be non-negative")


def _v_verify(p):
    _switching(p)
    _branches(p)
    _positive(p, "E")
    _need(p["n0"] >= 1, "n0", "must be at least 1")


def _v_sim1d(p):
    _positive(p, "c", "T", "eps", "dt_max")
    _branches(p)
    _need(p["N"] >= 10, "N", "must be at least 10")
    if p["snapshots"]:
        _need(all(0.0 <= t <= p["T"] for t in _floats(p["snapshots"], "snapshots")), "snapshots",
              "must lie in [0, T]")


def _v_sim2d(p):
    _positive(p, "c", "T", "radius", "laplacian_scale")
    _branches(p)
    _need(p["lattice"] in ("square", "triangular"), "lattice", "must be 'square' or 'triangular'")


def _v_slowfast(p):
    from .slowfast import NONLINEARITIES

    _positive(p, "delta", "c", "L", "dx", "T")
    _need(p["g"] in NONLINEARITIES, "g", f"must be one of {sorted(NONLINEARITIES)}")
    _need(p["scheme"] in ("implicit", "explicit"), "scheme", "must be 'implicit' or 'explicit'")


def _v_transverse(p):
    _need(p["alpha"] < p["beta"], "alpha", "need alpha < beta")
    _need(0 < p["bbar"] < 1, "bbar", "must lie in (0, 1)")
    _positive(p, "T", "tol_fp")
    _need(p["cells"] >= 4, "cells", "need at least 4 cells")
    _need(p["phi"] == "" or Path(p["phi"]).is_file(), "phi", f"no such file {p['phi']!r}")


def _v_analyze(p):
    _switching(p)
    _branches(p)
    _need(p["N"] >= 20, "N", "must be at least 20")
    if p["block"]:
        _block(p["block"])


def _v_reproduce(p):
    _need(p["figure"] in FIGURES, "figure", f"must be one of {', '.join(FIGURES)}")


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError as exc:
        raise ValidationError(f"{key}: expected comma-separated numbers, got {text!r}") from exc


def _block(text: str) -> tuple[int, int]:
    try:
        p_s, p_ns = (int(s) for s in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"block: expected 'p_s,p_ns', got {text!r}") from exc
    return p_s, p_ns


P = Param
COMMANDS: dict[str, Command] = {
    "relay": Command({
        "alpha": P(float, -1.0, "lower threshold"),
        "beta": P(float, 1.0, "upper threshold"),
        "h1": P(float, 1.0, "output on the xi = 1 branch"),
        "h_m1": P(float, -1.0, "output on the xi = -1 branch"),
        "xi0": P(int, 1, "initial configuration"),
        "variant": P(str, "ideal", "'ideal' relay or 'alt' relay with intermediate values"),
        "ramp_rate": P(float, 1.0, "rate of the intermediate output of the alt relay"),
        "input": P(str, "", "CSV file with columns t,u; a triangle wave is used when empty"),
        "amplitude": P(float, 2.0, "triangle wave amplitude"),
        "period": P(float, 4.0, "triangle wave period"),
        "periods": P(float, 2.0, "number of periods"),
        "samples": P(int, 4, "triangle wave samples per period"),
    }, "relay.csv: t, u, output_left, output, xi", _v_relay),
    "green": Command({
        "n_max": P(int, 10, "largest site"),
        "times": P(str, "1,10,100", "comma-separated times"),
    }, "green.csv: n, t, y, y_asymptotic, abs_err", _v_green),
    "solve-a": Command({
        "c": P(float, 0.5, "curvature of the initial data"),
        "h1": P(float, 2.0, "output on the unswitched branch"),
    }, "solve_a.csv: c, h1, a, residual, bracket_lo, bracket_hi", _switching),
    "verify": Command({
        "c": P(float, 0.5, "curvature of the initial data"),
        "h1": P(float, 2.0, "unswitched branch value"),
        "h_m1": P(float, 0.0, "switched branch value"),
        "n0": P(int, 20, "largest node checked"),
        "E": P(float, 1.0, "bound in |t_n - a n^2| <= E sqrt(n)"),
        "N": P(int, 0, "window half-width; 0 picks 3 n0"),
        "T": P(float, 0.0, "horizon; 0 picks 1.2 a n0^2 + 50"),
    }, "verify.csv: n, t_switch, a_n2, q, q_over_sqrt_n", _v_verify),
    "simulate1d": Command({
        "c": P(float, 0.5, "curvature of the initial data"),
        "h1": P(float, 2.0, "unswitched branch value"),
        "h_m1": P(float, 0.0, "switched branch value"),
        "N": P(int, 80, "window half-width"),
        "T": P(float, 50.0, "horizon"),
        "dt_max": P(float, 1.0, "largest step of the event search"),
        "eps": P(float, 1.0, "grid step of the physical lattice; switch times scale by eps^2"),
        "snapshots": P(str, "", "comma-separated snapshot times; empty writes the state at T only"),
    }, "simulate1d.csv: n, switch_time, q, switch_time_eps, u_T; simulate1d_snapshots.csv: t, n, u, xi",
        _v_sim1d),
    "simulate2d": Command({
        "lattice": P(str, "square", "'square' or 'triangular'"),
        "radius": P(float, 60.0, "disc radius"),
        "c": P(float, 0.5, "curvature of the initial data"),
        "h1": P(float, 3.0, "unswitched branch value"),
        "h_m1": P(float, -3.0, "switched branch value"),
        "T": P(float, 800.0, "horizon"),
        "laplacian_scale": P(float, 1.0, "edge weight of the lattice Laplacian"),
    }, "simulate2d.csv: node, i, j, x, y, switch_time; simulate2d.svg: switch map", _v_sim2d),
    "slowfast": Command({
        "delta": P(float, 1e-3, "time-scale ratio of the fast variable"),
        "c": P(float, 0.25, "curvature of the initial data"),
        "L": P(float, 5.0, "domain half-length"),
        "dx": P(float, 0.005, "grid spacing"),
        "T": P(float, 1.0, "horizon"),
        "g": P(str, "shifted_cubic", "fast nonlinearity: shifted_cubic or fitzhugh_nagumo"),
        "scheme": P(str, "implicit", "diffusion step: implicit (Crank-Nicolson) or explicit"),
    }, "slowfast.csv: x, u, v, branch, defect at time T; slowfast.svg: profiles", _v_slowfast),
    "transverse": Command({
        "phi": P(str, "", "CSV file with columns x,phi; empty uses beta + (0.2/pi) cos(pi x)"),
        "bbar": P(float, 0.5, "initial discontinuity point"),
        "alpha": P(float, -1.0, "lower threshold"),
        "beta": P(float, 0.0, "upper threshold"),
        "h1": P(float, 1.0, "source where xi = 1"),
        "h_m1": P(float, 0.0, "source where xi = -1"),
        "T": P(float, 0.02, "horizon"),
        "cells": P(int, 2000, "number of cells"),
        "steps": P(int, 400, "number of time steps"),
        "tol_fp": P(float, 1e-6, "fixed-point tolerance"),
        "max_iter": P(int, 50, "iterations per damping level"),
    }, "transverse_b.csv: t, b, a; transverse_u.csv: x and u at 5 times; transverse_log.csv: iteration log",
        _v_transverse),
    "analyze": Command({
        "c": P(float, 0.5, "curvature of the initial data"),
        "h1": P(float, 2.0, "unswitched branch value"),
        "h_m1": P(float, -1.0, "switched branch value"),
        "N": P(int, 100, "window half-width"),
        "T": P(float, 0.0, "horizon; 0 picks 1.1 a (0.9 N)^2"),
        "j_min": P(int, 0, "smallest |n| in the switch ratio"),
        "window": P(int, 9, "moving-average width of the weak-limit profile"),
        "block": P(str, "", "block pattern 'p_s,p_ns' to tally, e.g. 2,1"),
    }, "analyze.csv: n, t_switch, q", _v_analyze),
    "reproduce": Command({
        "figure": P(str, "fig8", "fig7, fig8, fig9 or fig10"),
    }, "fig7.csv / fig8.csv / fig9_<lattice>.csv / fig10.csv with matching SVG files", _v_reproduce),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict[str, Any] = field(hash=False)
    output_dir: str = DEFAULT_OUTPUT

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["run"] = {"output_dir": self.output_dir}
        cp[self.command] = {k: _render(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _render(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(kind: type, key: str, raw: Any) -> Any:
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{key}: expected {kind.__name__}, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hystlab", description="Relay hysteresis, rattling and free boundaries.")
    parser.add_argument("--version", action="version", version=f"hystlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, cmd in COMMANDS.items():
        sp = sub.add_parser(name, help=cmd.columns, epilog=f"Output columns: {cmd.columns}")
        sp.add_argument("--config", help="INI file; the section named after the command supplies parameters")
        sp.add_argument("--output-dir", help=f"output directory (overrides ${OUTPUT_ENV} and the config file)")
        for key, prm in cmd.params.items():
            if name == "reproduce" and key == "figure":
                sp.add_argument("figure", nargs="?", default=None, help=prm.help)
                continue
            flags = [f"--{key}"] + ([f"--{key.replace('_', '-')}"] if "_" in key else [])
            if key == "h_m1":
                flags.append("--hm1")
            sp.add_argument(*flags, dest=key, type=str, default=None,
                            help=f"{prm.help} (default {prm.default!r})")
    return parser


def _read_config(path: str, command: str) -> tuple[dict[str, str], str | None]:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ValidationError(f"config: cannot read {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ValidationError(f"config: {exc}") from exc
    for section in cp.sections():
        if section != "run" and section not in COMMANDS:
            raise ValidationError(f"config: unknown section [{section}]")
    out_dir = None
    if cp.has_section("run"):
        for key in cp["run"]:
            if key != "output_dir":
                raise ValidationError(f"{key}: unknown key in section [run]")
        out_dir = cp["run"].get("output_dir")
    values = dict(cp[command]) if cp.has_section(command) else {}
    for key in values:
        if key not in COMMANDS[command].params:
            raise ValidationError(f"{key}: unknown key for command {command!r}")
    return values, out_dir


def parse_config(argv: list[str] | None = None, env: dict[str, str] | None = None) -> RunConfig:
    """Flags override the config file, which overrides the defaults."""
    env = os.environ if env is None else env
    parser = build_parser()
    ns = parser.parse_args(argv)
    cmd = COMMANDS[ns.command]
    raw: dict[str, Any] = {k: p.default for k, p in cmd.params.items()}
    file_dir = None
    if ns.config:
        values, file_dir = _read_config(ns.config, ns.command)
        raw.update(values)
    for key in cmd.params:
        val = getattr(ns, key, None)
        if val is not None:
            raw[key] = val
    params = {k: _convert(cmd.params[k].kind, k, v) for k, v in raw.items()}
    cmd.validate(params)
    out = ns.output_dir or env.get(OUTPUT_ENV) or file_dir or DEFAULT_OUTPUT
    return RunConfig(ns.command, params, out)


# ---------------------------------------------------------------- output


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


class Emitter:
    def __init__(self, cfg: RunConfig, extra: dict[str, Any] | None = None):
        self.cfg = cfg
        self.dir = Path(cfg.output_dir)
        self.extra = extra or {}
        self.written: list[Path] = []

    def meta(self, extra: dict[str, Any] | None = None) -> list[str]:
        lines = [f"# hystlab: {__version__}", f"# command: {self.cfg.command}"]
        lines += [f"# {k}: {_fmt(v)}" for k, v in sorted(self.cfg.params.items())]
        lines += [f"# {k}: {_fmt(v)}" for k, v in sorted({**self.extra, **(extra or {})}.items())]
        return lines

    def csv(self, name: str, header: list[str], rows, extra: dict[str, Any] | None = None) -> Path:
        lines = self.meta(extra) + [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        return self._write(name, "\n".join(lines) + "\n")

    def text(self, name: str, report: dict[str, Any]) -> Path:
        body = "\n".join(f"{k}: {_fmt(v)}" for k, v in report.items()) + "\n"
        return self._write(name, body)

    def svg(self, name: str, content: str) -> Path:
        return self._write(name, content)

    def _write(self, name: str, content: str) -> Path:
        path = self.dir / name
        _atomic_write(path, content)
        self.written.append(path)
        return path


# ---------------------------------------------------------------- runners


def _triangle(p: dict):
    from .relay import Signal

    n = int(round(p["samples"] * p["periods"]))
    t = np.linspace(0.0, p["period"] * p["periods"], n + 1)
    # triangle wave starting at 0 and rising: peaks at odd quarter periods
    u = p["amplitude"] * (2.0 / math.pi) * np.arcsin(np.sin(2.0 * math.pi * t / p["period"]))
    return Signal(t, u)


def _read_columns(path: str, names: tuple[str, str]) -> tuple[np.ndarray, np.ndarray]:
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
        return np.atleast_1d(data[names[0]]).astype(float), np.atleast_1d(data[names[1]]).astype(float)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read columns {names} from {path!r}: {exc}") from exc


def run_relay(cfg: RunConfig, out: Emitter) -> dict:
    from .relay import RelayParams, Signal, alt_relay_trace, relay_init, relay_trace

    p = cfg.params
    params = RelayParams.constant(p["alpha"], p["beta"], p["h1"], p["h_m1"])
    sig = Signal(*_read_columns(p["input"], ("t", "u"))) if p["input"] else _triangle(p)
    if p["variant"] == "ideal":
        o, _ = relay_trace(params, relay_init(params, p["xi0"], float(sig.values[0])), sig)
    else:
        o = alt_relay_trace(params, p["xi0"], sig, ramp_rate=p["ramp_rate"])
    u = np.interp(o.times, sig.times, sig.values)
    out.csv("relay.csv", ["t", "u", "output_left", "output", "xi"],
            zip(o.times, u, o.left, o.values, o.xi))
    return {"samples": o.times.size, "switches": len(o.switches)}


def run_green(cfg: RunConfig, out: Emitter) -> dict:
    from .green import TOL_GREEN, green_asymptotic, green_y

    p = cfg.params
    rows = []
    ns = np.arange(0, p["n_max"] + 1)
    for t in _floats(p["times"], "times"):
        y = green_y(ns, t)
        ya = green_asymptotic(ns, t) if t > 0 else np.zeros(ns.size)
        rows += list(zip(ns, [t] * ns.size, y, ya, np.abs(y - ya)))
    out.csv("green.csv", ["n", "t", "y", "y_asymptotic", "abs_err"], rows, {"tol_green": TOL_GREEN})
    return {"rows": len(rows)}


def run_solve_a(cfg: RunConfig, out: Emitter) -> dict:
    from .coeff import solve_a

    r = solve_a(cfg.params["c"], cfg.params["h1"])
    out.csv("solve_a.csv", ["c", "h1", "a", "residual", "bracket_lo", "bracket_hi"],
            [(r.c, r.h1, r.a, r.residual, *r.bracket)])
    return {"a": r.a, "residual": r.residual}


def _sim_window(p: dict, a: float) -> tuple[int, float]:
    N = p["N"] or 3 * p["n0"]
    T = p["T"] or 1.2 * a * p["n0"] ** 2 + 50.0
    return N, T


def run_verify(cfg: RunConfig, out: Emitter) -> dict:
    from .coeff import solve_a, verify_hypothesis
    from .lattice1d import LatticeConfig, simulate

    p = cfg.params
    a = solve_a(p["c"], p["h1"]).a
    N, T = _sim_window(p, a)
    _, records = simulate(LatticeConfig(c=p["c"], h1=p["h1"], h_m1=p["h_m1"], N=N, T=T))
    rep = verify_hypothesis(p["c"], p["h1"], a, p["E"], p["n0"], records)
    rows = [(n, t, a * n * n, t - a * n * n, (t - a * n * n) / math.sqrt(n) if n else 0.0)
            for n, t in rep.switch_times]
    out.csv("verify.csv", ["n", "t_switch", "a_n2", "q", "q_over_sqrt_n"], rows, {"a": a, "N_used": N, "T_used": T})
    return {"a": a, "E": p["E"], "E_min": rep.E_min, "n0": p["n0"], "verdict": rep.verdict}


def run_simulate1d(cfg: RunConfig, out: Emitter) -> dict:
    from .coeff import solve_a
    from .lattice1d import LatticeConfig, simulate

    p = cfg.params
    times = _floats(p["snapshots"], "snapshots") if p["snapshots"] else [p["T"]]
    lc = LatticeConfig(c=p["c"], h1=p["h1"], h_m1=p["h_m1"], N=p["N"], T=p["T"], dt_max=p["dt_max"])
    traj, records = simulate(lc)
    a = solve_a(p["c"], p["h1"]).a if p["h1"] > 2 * p["c"] else math.nan
    uT = traj.u(lc.T)
    e2 = p["eps"] ** 2
    out.csv("simulate1d.csv", ["n", "switch_time", "q", "switch_time_eps", "u_T"],
            [(r.n, r.t_switch, r.t_switch - a * r.n * r.n if r.switched else math.nan, e2 * r.t_switch, u)
             for r, u in zip(records, uT)],
            {"a": a, "tol_event": lc.tol_event, "boundary_margin": lc.margin})
    n = traj.sites
    out.csv("simulate1d_snapshots.csv", ["t", "n", "u", "xi"],
            [(t, k, u, x) for t in times for k, u, x in zip(n, traj.u(t), traj.xi(t))])
    switched = sum(1 for r in records if r.switched and r.n != 0)
    return {"switched_nodes_besides_origin": switched, "events": traj.engine.n_events}


def _grid_rows(grid):
    return [(k, int(i), int(j), x, y, s) for k, ((i, j), (x, y), s)
            in enumerate(zip(grid.coords, grid.positions, grid.switch_time))]


def run_simulate2d(cfg: RunConfig, out: Emitter, stem: str = "simulate2d") -> dict:
    from .lattice2d import pattern_rings, render_switch_map, simulate2d

    p = cfg.params
    g = simulate2d(p["c"], p["h1"], p["h_m1"], p["lattice"], p["radius"], p["T"],
                   laplacian_scale=p["laplacian_scale"])
    extra = None if out.cfg is cfg else dict(p)
    out.csv(f"{stem}.csv", ["node", "i", "j", "x", "y", "switch_time"], _grid_rows(g), extra)
    out.svg(f"{stem}.svg", render_switch_map(g))
    return {"nodes": g.size, "switched": int(g.switched_by(g.t_end).sum()), "rings": pattern_rings(g)}


def _slowfast_outputs(res, summary, out: Emitter, stem: str, extra: dict | None) -> None:
    from .svg import Panel, line_chart

    u, v = res.u[-1], res.v[-1]
    out.csv(f"{stem}.csv", ["x", "u", "v", "branch", "defect"],
            zip(res.x, u, v, summary.label, summary.defect), {"t": float(res.times[-1]), **(extra or {})})
    top = Panel(f"v(x, t={res.times[-1]:g})", xlabel="x").add("v", res.x, v)
    bottom = Panel(f"u(x, t={res.times[-1]:g})", xlabel="x").add("u", res.x, u)
    out.svg(f"{stem}.svg", line_chart([top, bottom]))


def run_slowfast(cfg: RunConfig, out: Emitter, stem: str = "slowfast") -> dict:
    from .slowfast import NONLINEARITIES, SlowFastConfig, branch_classify, simulate_slowfast

    p = cfg.params
    fast = NONLINEARITIES[p["g"]]
    sc = SlowFastConfig(delta=p["delta"], c=p["c"], L=p["L"], dx=p["dx"], T=p["T"], g=fast, scheme=p["scheme"])
    res = simulate_slowfast(sc)
    summary = branch_classify(fast, res.u[-1], res.v[-1], res.x)
    _slowfast_outputs(res, summary, out, stem, None if out.cfg is cfg else dict(p))
    return {"on_branch_fraction": summary.on_branch_fraction, "intervals": summary.intervals.size,
            "median_interval": summary.median_interval}


def run_transverse(cfg: RunConfig, out: Emitter) -> dict:
    from .transverse import TransverseProblem, fixed_point_solve

    p = cfg.params
    if p["phi"]:
        xs, ph = _read_columns(p["phi"], ("x", "phi"))

        def phi(x):
            return np.interp(x, xs, ph)
    else:
        beta = p["beta"]

        def phi(x):
            return beta + (0.2 / math.pi) * np.cos(math.pi * np.asarray(x))

    prob = TransverseProblem(phi, (p["bbar"],), p["alpha"], p["beta"], p["h1"], p["h_m1"], p["T"],
                             cells=p["cells"], steps=p["steps"])
    r = fixed_point_solve(prob, tol_fp=p["tol_fp"], max_iter=p["max_iter"])
    c = r.curve
    out.csv("transverse_b.csv", ["t", "b", "a"], zip(c.times, c.b[:, 0], c.a[:, 0]),
            {"T_used": r.T, "iterations": r.iterations, "residual": r.residual})
    picks = np.linspace(0, c.times.size - 1, 5).astype(int)
    out.csv("transverse_u.csv", ["x"] + [f"u_t{c.times[k]:.6g}" for k in picks],
            zip(r.u.x, *[r.u.u[k] for k in picks]))
    keys = ["iteration", "T", "damping", "residual", "sup_u", "sup_ux"]
    out.csv("transverse_log.csv", keys, [[e[k] for k in keys] for e in r.log])
    return {"iterations": r.iterations, "residual": r.residual, "T_used": r.T,
            "b_end": float(c.b[-1, 0]), "events": len(c.events)}


def run_analyze(cfg: RunConfig, out: Emitter) -> dict:
    from .coeff import solve_a
    from .lattice1d import LatticeConfig, simulate
    from .rattling import analyze

    p = cfg.params
    a = solve_a(p["c"], p["h1"]).a
    T = p["T"] or a * (0.75 * p["N"]) ** 2  # front stays clear of the window edge
    traj, records = simulate(LatticeConfig(c=p["c"], h1=p["h1"], h_m1=p["h_m1"], N=p["N"], T=T))
    block = _block(p["block"]) if p["block"] else None
    rep = analyze(traj, records, a=a, j_min=p["j_min"], window_width=p["window"], block=block)
    rows = [(r.n, r.t_switch, r.t_switch - a * r.n * r.n if r.switched else math.nan)
            for r in records if r.n >= 0]
    out.csv("analyze.csv", ["n", "t_switch", "q"], rows, {"a": a, "T_used": T})
    prof = rep.weak_limit_profile
    out.csv("analyze_weak_limit.csv", ["n", "average", "reference"], zip(prof.n, prof.average, prof.reference),
            {"t": prof.t, "window": p["window"], "half_width": prof.half_width})
    report = {"a": a, "a_fit": rep.a_fit, "E_min": rep.E_min, "switch_ratio": rep.ratio,
              "j_min": rep.j_range[0], "j_max": rep.j_range[1],
              "residual_slope": rep.residual_slope, "gradient_bound_b": rep.gradient_bound_b}
    if rep.block_tally is not None:
        report.update(block_fraction=rep.block_tally.fraction, block_verdict=rep.block_verdict)
    return report


# ---------------------------------------------------------------- figures


def _fig7(out: Emitter) -> dict:
    from .lattice1d import LatticeConfig, simulate
    from .svg import Panel, line_chart

    c, h1, N, T = 0.5, 2.0, 40, 300.0
    n = np.arange(-N, N + 1)
    u0 = -c * n.astype(float) ** 2
    profiles = {}
    for label, h_m1 in (("h_m1=0", 0.0), ("h_m1=-h1", -h1)):
        traj, _ = simulate(LatticeConfig(c=c, h1=h1, h_m1=h_m1, N=N, T=T))
        profiles[label] = traj.u(T)
    out.csv("fig7.csv", ["n", "u_initial", "u_h_m1_zero", "u_h_m1_minus_h1"],
            zip(n, u0, profiles["h_m1=0"], profiles["h_m1=-h1"]), {"c": c, "h1": h1, "N": N, "T": T})
    panels = [Panel("a) initial data u_n(0) = -c n^2", xlabel="n").add("u(0)", n, u0)]
    for tag, label in (("b)", "h_m1=0"), ("c)", "h_m1=-h1")):
        panels.append(Panel(f"{tag} u_n(t) at t={T:g}, {label}", xlabel="n").add("u(t)", n, profiles[label]))
    out.svg("fig7.svg", line_chart(panels))
    return {"N": N, "T": T}


def _fig8(out: Emitter) -> dict:
    from .coeff import solve_a, verify_hypothesis
    from .lattice1d import LatticeConfig, simulate
    from .svg import Panel, line_chart

    c, n0 = 0.5, 20
    rows = []
    for k in range(15):
        h1 = round(1.1 + 0.1 * k, 10)
        a = solve_a(c, h1).a
        _, records = simulate(LatticeConfig(c=c, h1=h1, h_m1=0.0, N=3 * n0, T=1.2 * a * n0**2 + 50.0))
        rep = verify_hypothesis(c, h1, a, 1.0, n0, records)
        rows.append((h1, a, rep.E_min, n0))
    out.csv("fig8.csv", ["h1", "a", "E_min", "n0"], rows, {"c": c, "h_m1": 0.0})
    h, a, E = (np.array([r[i] for r in rows]) for i in range(3))
    out.svg("fig8.svg", line_chart([Panel("a(h1), c = 1/2", xlabel="h1").add("a", h, a),
                                    Panel("E_min(h1) over n <= 20", xlabel="h1").add("E_min", h, E)]))
    return {"rows": len(rows)}


def _fig9(out: Emitter) -> dict:
    report = {}
    for kind, h1 in (("square", 3.0), ("triangular", 4.5)):
        params = {**COMMANDS["simulate2d"].defaults(), "lattice": kind, "h1": h1, "h_m1": -h1}
        sub = RunConfig("simulate2d", params, out.cfg.output_dir)
        r = run_simulate2d(sub, out, stem=f"fig9_{kind}")
        report.update({f"{kind}_{k}": v for k, v in r.items()})
    return report


def _fig10(out: Emitter) -> dict:
    params = COMMANDS["slowfast"].defaults()
    return run_slowfast(RunConfig("slowfast", params, out.cfg.output_dir), out, stem="fig10")


def run_reproduce(cfg: RunConfig, out: Emitter) -> dict:
    recipes = {"fig7": _fig7, "fig8": _fig8, "fig9": _fig9, "fig10": _fig10}
    return recipes[cfg.params["figure"]](out)


RUNNERS = {
    "relay": run_relay, "green": run_green, "solve-a": run_solve_a, "verify": run_verify,
    "simulate1d": run_simulate1d, "simulate2d": run_simulate2d, "slowfast": run_slowfast,
    "transverse": run_transverse, "analyze": run_analyze, "reproduce": run_reproduce,
}


def execute(cfg: RunConfig) -> tuple[dict, list[Path]]:
    out = Emitter(cfg)
    report = RUNNERS[cfg.command](cfg, out)
    stem = cfg.command.replace("-", "_")
    if cfg.command == "reproduce":
        stem = cfg.params["figure"]
    out.text(f"{stem}_report.txt", {"command": cfg.command, **report})
    return report, out.written


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        report, written = execute(cfg)
    except BoundaryContamination as exc:
        print(f"boundary contamination: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return exc.exit_code
    except HystlabError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    for k, v in report.items():
        print(f"{k}: {_fmt(v)}")
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
