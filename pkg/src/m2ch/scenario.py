"""Scenario files and deterministic CSV output.

A scenario is a small INI document. Sections and keys (all others are
rejected)::

    [scenario]
    kind = peakons | lagrangian | closed-form     (required)
    name = run directory name                     (default: file stem)
    t0 = 0                                        start time
    t1 = 2                                        end time (required)

    [peakons]                 explicit multipeakon data at t0
    q = -1, 1                 strictly increasing positions
    p = 1, -1
    s = 0.5, -0.5             optional, zeros if omitted

    [antisym]                 antisymmetric pair, reduced variables
    s = 0.5                   density amplitude s >= 0
    p0 = ...                  reduced momentum at t0 }  both or neither;
    q0 = ...                  reduced gap at t0 < 0  }  neither = collision at t=0
    rescale = false           rescale (p0, s, times) so that E = 1/2

    [solver]
    rel_tol = 1e-10   abs_tol = 1e-12   max_step = inf   gap_tol = 1e-9
    n = 2048          dt = 1e-3         margin = 20      align = midpoint
    continue = none | lagrangian        handoff_gap = 0.5

    [output]
    sample_dt = 0.01          trajectory / invariant / circle sampling
    eulerian_times = 0, 1     snapshot times (eulerian_<t>.csv)
    x_min, x_max, nx = 401    snapshot grid (default: peaks +- 10)
    trajectory = true   invariants = true   circle = true

Exactly one of ``[peakons]`` and ``[antisym]`` must be present. ``#`` and
``;`` start comments.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import closed_form as cf
from . import lagrangian as lg
from . import peakons as pk
from .core import PeakonState, eval_derivatives, eval_rho_bar, eval_u, total_energy

__all__ = [
    "ScenarioError",
    "AntisymData",
    "SolverOptions",
    "OutputOptions",
    "Scenario",
    "RunResult",
    "parse_scenario",
    "load_scenario",
    "run",
    "write_csv",
]

KINDS = ("peakons", "lagrangian", "closed-form")
# grid cells required between the closest peaks at a Lagrangian handoff
HANDOFF_MIN_CELLS = 10
NORMALIZATION_TOL = 1e-12


class ScenarioError(ValueError):
    """Invalid scenario; ``key`` is the ``section.key`` path when known."""

    def __init__(self, message: str, key: str | None = None,
                 residual: float | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.residual = residual


@dataclass(frozen=True)
class AntisymData:
    s: float
    p0: float | None = None
    q0: float | None = None
    alpha: float = 1.0      # scaling applied by rescale (1 = none)

    @property
    def case(self) -> cf.AntisymCase:
        return cf.classify(self.s)

    @property
    def centered(self) -> bool:
        return self.p0 is None


@dataclass(frozen=True)
class SolverOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    gap_tol: float = pk.GAP_TOL
    n: int = 2048
    dt: float = 1e-3
    margin: float = lg.MIN_MARGIN
    align: str = "midpoint"
    continue_with: str = "none"
    handoff_gap: float = 0.5


@dataclass(frozen=True)
class OutputOptions:
    sample_dt: float = 0.01
    eulerian_times: tuple = ()
    x_min: float | None = None
    x_max: float | None = None
    nx: int = 401
    trajectory: bool = True
    invariants: bool = True
    circle: bool = True


@dataclass(frozen=True)
class Scenario:
    kind: str
    t0: float
    t1: float
    state: PeakonState
    antisym: AntisymData | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    output: OutputOptions = field(default_factory=OutputOptions)
    name: str = "scenario"

    @property
    def n(self) -> int:
        return self.state.n


@dataclass
class RunResult:
    outdir: Path
    files: list
    events: list
    aborted: bool = False


# --------------------------------------------------------------------------
# parsing

_SCHEMA = {
    "scenario": {"kind", "name", "t0", "t1"},
    "peakons": {"q", "p", "s"},
    "antisym": {"s", "p0", "q0", "rescale"},
    "solver": {"rel_tol", "abs_tol", "max_step", "gap_tol", "n", "dt",
               "margin", "align", "continue", "handoff_gap"},
    "output": {"sample_dt", "eulerian_times", "x_min", "x_max", "nx",
               "trajectory", "invariants", "circle"},
}


class _Reader:
    def __init__(self, cp):
        self.cp = cp

    def has(self, sec, key):
        return self.cp.has_section(sec) and self.cp.has_option(sec, key)

    def raw(self, sec, key):
        return self.cp.get(sec, key).strip()

    def float(self, sec, key, default=None, positive=False, required=False):
        if not self.has(sec, key):
            if required:
                raise ScenarioError("missing required key", f"{sec}.{key}")
            return default
        try:
            v = float(self.raw(sec, key))
        except ValueError:
            raise ScenarioError(f"not a number: {self.raw(sec, key)!r}",
                                f"{sec}.{key}") from None
        if math.isnan(v) or (positive and not v > 0):
            raise ScenarioError(f"must be positive, got {v}", f"{sec}.{key}")
        return v

    def int(self, sec, key, default, minimum=1):
        if not self.has(sec, key):
            return default
        try:
            v = int(self.raw(sec, key))
        except ValueError:
            raise ScenarioError(f"not an integer: {self.raw(sec, key)!r}",
                                f"{sec}.{key}") from None
        if v < minimum:
            raise ScenarioError(f"must be >= {minimum}, got {v}", f"{sec}.{key}")
        return v

    def bool(self, sec, key, default):
        if not self.has(sec, key):
            return default
        try:
            return self.cp.getboolean(sec, key)
        except ValueError:
            raise ScenarioError(f"not a boolean: {self.raw(sec, key)!r}",
                                f"{sec}.{key}") from None

    def floats(self, sec, key, default=()):
        if not self.has(sec, key):
            return default
        text = self.raw(sec, key)
        if not text:
            return ()
        try:
            return tuple(float(tok) for tok in text.split(","))
        except ValueError:
            raise ScenarioError(f"not a comma-separated list of numbers: {text!r}",
                                f"{sec}.{key}") from None

    def choice(self, sec, key, options, default):
        if not self.has(sec, key):
            return default
        v = self.raw(sec, key)
        if v not in options:
            raise ScenarioError(f"must be one of {', '.join(options)}, got {v!r}",
                                f"{sec}.{key}")
        return v


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and validate a scenario document (strict: unknown keys fail)."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"),
                                   default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed document: {exc}") from None
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ScenarioError("unknown section", sec)
        for key in cp.options(sec):
            if key not in _SCHEMA[sec]:
                raise ScenarioError("unknown key", f"{sec}.{key}")
    rd = _Reader(cp)
    if not cp.has_section("scenario"):
        raise ScenarioError("missing section", "scenario")
    kind = rd.choice("scenario", "kind", KINDS, None)
    if kind is None:
        raise ScenarioError("missing required key", "scenario.kind")
    if rd.has("scenario", "name"):
        name = rd.raw("scenario", "name")
        if not name or os.sep in name or name in (".", ".."):
            raise ScenarioError(f"not a usable directory name: {name!r}",
                                "scenario.name")
    t0 = rd.float("scenario", "t0", 0.0)
    t1 = rd.float("scenario", "t1", required=True)
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise ScenarioError("times must be finite", "scenario.t1")

    solver = SolverOptions(
        rel_tol=rd.float("solver", "rel_tol", 1e-10, positive=True),
        abs_tol=rd.float("solver", "abs_tol", 1e-12, positive=True),
        max_step=rd.float("solver", "max_step", math.inf, positive=True),
        gap_tol=rd.float("solver", "gap_tol", pk.GAP_TOL, positive=True),
        n=rd.int("solver", "n", 2048, minimum=8),
        dt=rd.float("solver", "dt", 1e-3, positive=True),
        margin=rd.float("solver", "margin", lg.MIN_MARGIN, positive=True),
        align=rd.choice("solver", "align", ("node", "midpoint"), "midpoint"),
        continue_with=rd.choice("solver", "continue", ("none", "lagrangian"),
                                "none"),
        handoff_gap=rd.float("solver", "handoff_gap", 0.5, positive=True),
    )
    if solver.continue_with != "none" and kind != "peakons":
        raise ScenarioError("only peakon runs can be continued", "solver.continue")
    output = OutputOptions(
        sample_dt=rd.float("output", "sample_dt", 0.01, positive=True),
        eulerian_times=rd.floats("output", "eulerian_times"),
        x_min=rd.float("output", "x_min"),
        x_max=rd.float("output", "x_max"),
        nx=rd.int("output", "nx", 401, minimum=2),
        trajectory=rd.bool("output", "trajectory", True),
        invariants=rd.bool("output", "invariants", True),
        circle=rd.bool("output", "circle", True),
    )
    if (output.x_min is None) != (output.x_max is None):
        raise ScenarioError("x_min and x_max go together", "output.x_max")
    if output.x_min is not None and not output.x_max > output.x_min:
        raise ScenarioError("must exceed x_min", "output.x_max")

    has_pk, has_as = cp.has_section("peakons"), cp.has_section("antisym")
    if has_pk == has_as:
        raise ScenarioError("exactly one of [peakons] and [antisym] is required")
    antisym = None
    if has_pk:
        if kind == "closed-form":
            raise ScenarioError("closed-form runs need [antisym] data", "peakons")
        q = rd.floats("peakons", "q")
        p = rd.floats("peakons", "p")
        s = rd.floats("peakons", "s", default=tuple(0.0 for _ in q))
        if not (len(q) == len(p) == len(s)):
            raise ScenarioError(
                f"q, p, s lengths differ ({len(q)}, {len(p)}, {len(s)})", "peakons")
        try:
            state = PeakonState(q=q, p=p, s=s, t=t0)
        except ValueError as exc:
            raise ScenarioError(str(exc), "peakons.q") from None
    else:
        antisym, state, (t0, t1), times = _parse_antisym(
            rd, t0, t1, output.eulerian_times)
        output = replace(output, eulerian_times=times)

    if output.eulerian_times and output.x_min is None and state.n == 0:
        raise ScenarioError("snapshots of an empty state need x_min/x_max",
                            "output.x_min")
    return Scenario(kind=kind, t0=t0, t1=t1, state=state, antisym=antisym,
                    solver=solver, output=output, name=name)


def _parse_antisym(rd, t0, t1, times):
    s = rd.float("antisym", "s", required=True)
    if s < 0:
        raise ScenarioError("must be non-negative", "antisym.s")
    has_p, has_q = rd.has("antisym", "p0"), rd.has("antisym", "q0")
    if has_p != has_q:
        raise ScenarioError("p0 and q0 go together", "antisym.p0")
    rescale = rd.bool("antisym", "rescale", False)
    if not has_p:
        data = AntisymData(s=s)
        pt = cf.eval_collision_centered(data.case, t0)
        if pt.q == 0.0:
            raise ScenarioError("t0 is a collision time; start elsewhere",
                                "scenario.t0")
        state = cf.to_peakon_state(data.case, float(pt.p), float(pt.q), t0)
        return data, state, (t0, t1), times
    p0 = rd.float("antisym", "p0")
    q0 = rd.float("antisym", "q0")
    if not q0 < 0:
        raise ScenarioError("must be negative (peaks apart)", "antisym.q0")
    K = (p0 * p0 + s * s) * -math.expm1(q0)
    residual = K - 1.0
    alpha = 1.0
    if abs(residual) > NORMALIZATION_TOL:
        if not rescale:
            raise ScenarioError(
                f"(p0^2 + s^2)(1 - e^q0) = 1 violated by {residual:.6g}; "
                f"set rescale = true to normalize", "antisym.p0",
                residual=residual)
        # u -> a u(a t), rho -> a rho(a t) maps energy K/2 to a^2 K/2
        alpha = 1.0 / math.sqrt(K)
        s, p0 = alpha * s, alpha * p0
        t0, t1 = t0 / alpha, t1 / alpha
        times = tuple(t / alpha for t in times)
    data = AntisymData(s=s, p0=p0, q0=q0, alpha=alpha)
    state = cf.to_peakon_state(data.case, p0, q0, t0)
    return data, state, (t0, t1), times


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), name=path.stem)


# --------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, header, rows):
    """RFC-4180 CSV with LF line endings and 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _time_label(t):
    return "%.10g" % t


def _sample_times(t0, t1, dt):
    k = int(math.floor(abs(t1 - t0) / dt + 1e-9))
    d = math.copysign(dt, t1 - t0)
    ts = [t0 + i * d for i in range(k + 1)]
    if ts[-1] != t1:
        ts.append(t1)
    return ts


def _x_grid(sc, q):
    o = sc.output
    if o.x_min is not None:
        return np.linspace(o.x_min, o.x_max, o.nx)
    lo, hi = (float(np.min(q)), float(np.max(q))) if len(q) else (-10.0, 10.0)
    return np.linspace(lo - 10.0, hi + 10.0, o.nx)


def _state_header(n):
    return (["t"] + [f"q_{i}" for i in range(1, n + 1)]
            + [f"p_{i}" for i in range(1, n + 1)]
            + [f"s_{i}" for i in range(1, n + 1)] + ["E"])


def _state_row(st, E=None):
    E = total_energy(st) if E is None else E
    return [st.t, *st.q, *st.p, *st.s, E]


def _peakon_snapshot(state, x):
    _, rx = eval_derivatives(state, x)
    return list(zip(x, eval_u(state, x), eval_rho_bar(state, x), rx))


EULER_HEADER = ["x", "u", "rho_bar", "rho_bar_x"]
INV_HEADER = ["t", "energy_drift", "constraint_residual", "r_drift",
              "invariant_drift"]
CIRCLE_HEADER = ["t", "u_peak", "rho_bar_peak"]
EVENT_HEADER = ["kind", "t", "t_detect", "index", "gap", "detail"]


class _Outputs:
    def __init__(self, sc: Scenario, outdir: Path):
        self.sc = sc
        self.outdir = outdir
        self.traj, self.inv, self.circle, self.events = [], [], [], []
        self.snapshots = {}
        self.files = []

    def snapshot(self, t, rows):
        self.snapshots[_time_label(t)] = rows

    def write(self):
        self.outdir.mkdir(parents=True, exist_ok=True)
        o, n = self.sc.output, self.sc.n

        def put(name, header, rows):
            path = self.outdir / name
            write_csv(path, header, rows)
            self.files.append(path)

        if o.trajectory:
            put("trajectory.csv", _state_header(n), self.traj)
        for label, rows in self.snapshots.items():
            put(f"eulerian_{label}.csv", EULER_HEADER, rows)
        if o.invariants:
            put("invariants.csv", INV_HEADER, self.inv)
        if o.circle and self.sc.antisym is not None:
            put("circle.csv", CIRCLE_HEADER, self.circle)
        put("events.csv", EVENT_HEADER, self.events)
        return self.files


# --------------------------------------------------------------------------
# runners

def run(scenario: Scenario, outdir) -> RunResult:
    """Run ``scenario`` and write its CSV files into ``outdir``.

    Reruns with the same scenario produce byte-identical files. A solver
    abort is recorded in ``events.csv`` and flagged in the result.
    """
    outdir = Path(outdir)
    out = _Outputs(scenario, outdir)
    aborted = False
    if scenario.kind == "closed-form":
        _run_closed_form(scenario, out)
    elif scenario.kind == "peakons":
        aborted = _run_peakons(scenario, out)
    else:
        aborted = _run_lagrangian(scenario, scenario.state, out)
    files = out.write()
    return RunResult(outdir=outdir, files=files, events=out.events,
                     aborted=aborted)


def _antisym_eval(data: AntisymData, t0, t):
    t = np.asarray(t, dtype=float)
    if data.centered:
        return cf.eval_collision_centered(data.case, t)
    return cf.eval_general(data.p0, data.q0, data.case, t - t0)


def _collision_times(data: AntisymData, t0, t1):
    case = data.case
    if data.centered:
        first = 0.0
    else:
        first = t0 + cf.collision_time(case, data.p0, data.q0)
    if case.regime is not cf.Regime.SUPERCRITICAL:
        times = [first]
    else:
        T = cf.period(case)
        lo, hi = min(t0, t1), max(t0, t1)
        k0 = math.ceil((lo - first) / T)
        k1 = math.floor((hi - first) / T)
        times = [first + k * T for k in range(k0, k1 + 1)]
    lo, hi = min(t0, t1), max(t0, t1)
    return [t for t in times if lo <= t <= hi]


def _run_closed_form(sc, out):
    data = sc.antisym
    ts = np.array(_sample_times(sc.t0, sc.t1, sc.output.sample_dt))
    pt = _antisym_eval(data, sc.t0, ts)
    case = data.case
    with np.errstate(invalid="ignore"):
        res = np.abs(cf.energy_residual(case, pt.p, pt.q))
    for i, t in enumerate(ts):
        p, q = float(pt.p[i]), float(pt.q[i])
        E = 0.5 * (1.0 + float(cf.energy_residual(case, p, q))) if q < 0 else math.nan
        out.traj.append([t, 0.5 * q, -0.5 * q, 0.5 * p, -0.5 * p,
                         0.5 * case.s, -0.5 * case.s, E])
        out.circle.append([t, float(pt.u_peak[i]), float(pt.rho_bar_peak[i])])
        out.inv.append([t, float(res[i]), math.nan, math.nan, math.nan])
    for tc in _collision_times(data, sc.t0, sc.t1):
        out.events.append(["collision", tc, tc, 0, 0.0, "closed form"])
    for t in sc.output.eulerian_times:
        p = _antisym_eval(data, sc.t0, t)
        q = float(p.q)
        st = PeakonState(q=[0.5 * q, -0.5 * q], p=[0.5 * float(p.p), -0.5 * float(p.p)],
                         s=[0.5 * case.s, -0.5 * case.s], t=t, validate=False)
        x = _x_grid(sc, st.q)
        if q == 0.0:
            # all energy sits in the collision point; the fields vanish
            rows = [(xx, 0.0, 0.0, 0.0) for xx in x]
        else:
            rows = _peakon_snapshot(st, x)
        out.snapshot(t, rows)


def _run_peakons(sc, out):
    o, so = sc.output, sc.solver
    state = sc.state
    E0 = total_energy(state)
    stops = sorted({t for t in o.eulerian_times
                    if min(sc.t0, sc.t1) < t < max(sc.t0, sc.t1)},
                   reverse=sc.t1 < sc.t0) + [sc.t1]
    if sc.t0 in o.eulerian_times:
        out.snapshot(sc.t0, _peakon_snapshot(state, _x_grid(sc, state.q)))
    states, event = [state], None
    for stop in stops:
        tr = pk.integrate(states[-1], stop, rel_tol=so.rel_tol, abs_tol=so.abs_tol,
                          max_step=so.max_step, sample_dt=o.sample_dt,
                          gap_tol=so.gap_tol)
        states.extend(tr.states[1:])
        if tr.event is not None:
            event = tr.event
            break
        if stop in o.eulerian_times:
            out.snapshot(stop, _peakon_snapshot(tr.final, _x_grid(sc, tr.final.q)))

    if event is not None:
        out.events.append(["collision", event.time, event.t_detect, event.index,
                           event.gap, event.reason])
    handoff = None
    if event is not None and so.continue_with == "lagrangian":
        ok = [i for i, st in enumerate(states)
              if st.n < 2 or np.diff(st.q).min() >= so.handoff_gap]
        if not ok:
            out.events.append(["abort", states[0].t, states[-1].t, -1, math.nan,
                               "no state with gap above handoff_gap"])
            return True
        handoff = states[ok[-1]]
        states = states[:ok[-1] + 1]
        gap = float(np.diff(handoff.q).min())
        dxi = lg.peakon_gridspec(handoff.q, so.n, so.margin, so.align).dxi
        if gap < HANDOFF_MIN_CELLS * dxi:
            out.events.append(["abort", handoff.t, handoff.t, -1, gap,
                               f"handoff gap spans fewer than {HANDOFF_MIN_CELLS} "
                               f"cells of {dxi:.3g}; raise n or handoff_gap"])
            handoff = None
        else:
            out.events.append(["handoff", handoff.t, handoff.t, -1, gap,
                               "lagrangian"])

    aborted = (so.continue_with == "lagrangian" and event is not None
               and handoff is None)
    for st in states:
        E = total_energy(st)
        out.traj.append(_state_row(st, E))
        out.inv.append([st.t, abs(E - E0) / E0 if E0 else math.nan,
                        math.nan, math.nan, math.nan])
        if sc.antisym is not None:
            out.circle.append([st.t, float(eval_u(st, st.q[0])),
                               float(eval_rho_bar(st, st.q[0]))])
    if handoff is not None:
        return _run_lagrangian(sc, handoff, out, skip_first=True)
    return aborted


def _recover_peakons(grid, labels):
    """Peak positions and amplitudes read off a grid that started as peakons."""
    q = np.array([lg.peak_value(grid, "y", a) for a in labels])
    u = np.array([lg.peak_value(grid, "U", a) for a in labels])
    r = np.array([lg.peak_value(grid, "rbar", a) for a in labels])
    M = np.exp(-np.abs(q[:, None] - q[None, :]))
    if len(q) and np.linalg.cond(M) < 1e12:
        p, s = np.linalg.solve(M, u), np.linalg.solve(M, r)
    else:
        p, s = np.full_like(u, np.nan), np.full_like(r, np.nan)
    return PeakonState(q=q, p=p, s=s, t=grid.t, validate=False)


def _run_lagrangian(sc, state, out, skip_first=False):
    o, so = sc.output, sc.solver
    t0 = state.t
    labels = np.array(state.q)
    try:
        gs = lg.peakon_gridspec(labels, so.n, margin=so.margin, align=so.align)
        grid = lg.init_from_peakons(state, gs, margin=so.margin)
    except ValueError as exc:
        raise ScenarioError(str(exc), "solver.n") from None
    H0 = grid.energy() - grid.H[0]
    r0 = lg.compute_r(grid)
    I0 = lg.pointwise_invariant(grid)
    mask = lg.off_peak_mask(grid, labels)
    every = max(1, int(round(o.sample_dt / so.dt)))
    recorded = [None]
    gaps = []          # (t, min gap) per step for collision detection

    def record(g):
        if recorded[0] == g.t:
            return
        recorded[0] = g.t
        E2 = g.energy() - g.H[0]
        st = _recover_peakons(g, labels)
        out.traj.append(_state_row(st, 0.5 * E2))
        I = lg.pointwise_invariant(g)
        ok = mask & np.isfinite(I) & np.isfinite(I0)
        out.inv.append([
            g.t,
            abs(E2 - H0) / H0 if H0 else math.nan,
            lg.constraint_residual(g),
            float(np.abs(lg.compute_r(g) - r0)[mask].max(initial=0.0)),
            float(np.abs(I - I0)[ok].max(initial=0.0)),
        ])
        if sc.antisym is not None and len(labels):
            out.circle.append([g.t, lg.peak_value(g, "U", labels[0]),
                               lg.peak_value(g, "rbar", labels[0])])

    def watch_gaps(g):
        if len(labels) < 2:
            return
        y = np.array([lg.peak_value(g, "y", a) for a in labels])
        d = np.diff(y)
        i = int(np.argmin(d))
        gaps.append((g.t, float(d[i]), i))
        if len(gaps) >= 3:
            (_, ga, _), (tb, gb, ib), (_, gc, _) = gaps[-3:]
            if gb < ga and gb <= gc and gb < 1e-4:
                out.events.append(["collision", tb, tb, ib, gb, "lagrangian gap minimum"])

    count = [0]

    def observer(g):
        if g.t == t0 and count[0] == 0:
            watch_gaps(g)
            if not skip_first:
                record(g)
            count[0] += 1
            return
        if g.t == t0:
            return
        watch_gaps(g)
        if count[0] % every == 0:
            record(g)
        count[0] += 1

    stops = sorted({t for t in o.eulerian_times
                    if min(t0, sc.t1) < t < max(t0, sc.t1)},
                   reverse=sc.t1 < t0) + [sc.t1]
    if t0 in o.eulerian_times:
        out.snapshot(t0, _grid_snapshot(sc, grid))
    try:
        for stop in stops:
            grid = lg.evolve(grid, stop, so.dt, observer)
            record(grid)
            if stop in o.eulerian_times:
                out.snapshot(stop, _grid_snapshot(sc, grid))
    except lg.SolverAbort as exc:
        record(exc.grid)
        out.events.append(["abort", exc.grid.t, exc.grid.t, -1, math.nan,
                           exc.reason])
        return True
    return False


def _grid_snapshot(sc, grid):
    x = _x_grid(sc, [grid.y[0] + sc.solver.margin, grid.y[-1] - sc.solver.margin])
    ef = lg.to_eulerian(grid, x)
    return list(zip(ef.x, ef.u, ef.rho_bar, ef.rho_bar_x))
