"""Self-checks of every operation, grouped into suites.

Each check runs one operation on a case with a known answer and compares a
measured error against a threshold. ``verify("all")`` touches every public
operation at least once; the report lists the operation names so that this
coverage can be read off the output.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import closed_form as cf
from . import kernel
from . import lagrangian as lg
from . import peakons as pk
from . import scenario as scn
from .core import PeakonState, eval_derivatives, eval_rho_bar, eval_u, total_energy

__all__ = ["CheckResult", "Report", "SUITES", "verify", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    op: str
    check: str
    measured: float
    threshold: float
    passed: bool


@dataclass
class Report:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def operations(self) -> set:
        return {e.op for e in self.entries}

    def lines(self):
        """CSV lines: ``op,check,measured,threshold,status``."""
        yield "op,check,measured,threshold,status"
        for e in self.entries:
            status = "PASS" if e.passed else "FAIL"
            yield f'{e.op},"{e.check}",{e.measured:.3e},{e.threshold:.3e},{status}'


def _le(op, check, measured, threshold):
    measured = float(measured)
    return CheckResult(op, check, measured, float(threshold),
                       bool(measured <= threshold))


def _antisym_state(s, t):
    case = cf.classify(s)
    pt = cf.eval_collision_centered(case, t)
    return case, cf.to_peakon_state(case, float(pt.p), float(pt.q), t)


# ---------------------------------------------------------------- core

def _core_eval_u():
    st = PeakonState(q=[0.0], p=[1.0])
    err = max(abs(eval_u(st, 0.0) - 1.0), abs(eval_u(st, 1.0) - math.exp(-1)),
              abs(eval_u(PeakonState.empty(), 3.0)))
    return _le("eval_u", "single peak apex and tail", err, 1e-15)


def _core_eval_rho_bar():
    st = PeakonState(q=[2.0], p=[0.0], s=[0.5])
    pair = PeakonState(q=[-1.0, 1.0], p=[0.0, 0.0], s=[1.0, -1.0])
    err = max(abs(eval_rho_bar(st, 2.0) - 0.5),
              abs(eval_rho_bar(st, 0.0) - 0.5 * math.exp(-2)),
              abs(eval_rho_bar(pair, 0.0)))
    return _le("eval_rho_bar", "apex, tail and antisymmetric zero", err, 1e-15)


def _core_eval_derivatives():
    st = PeakonState(q=[0.0], p=[1.0])
    ux0, _ = eval_derivatives(st, 0.0)
    ux1, _ = eval_derivatives(st, 1.0)
    err = max(abs(ux0), abs(ux1 + math.exp(-1)))
    return _le("eval_derivatives", "sign(0)=0 at the peak, -e^-1 at x=1", err, 1e-15)


def _core_total_energy():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        q1 = rng.uniform(-5, 5)
        q2 = q1 + rng.uniform(1e-3, 5)
        p1, p2, s1, s2 = rng.uniform(-2, 2, 4)
        E = total_energy(PeakonState(q=[q1, q2], p=[p1, p2], s=[s1, s2]))
        ref = p1**2 + p2**2 + s1**2 + s2**2 + 2 * (p1 * p2 + s1 * s2) * math.exp(q1 - q2)
        worst = max(worst, abs(E - ref) / abs(ref))
    return _le("total_energy", "n=2 energy matches the two-peak formula "
               "(1000 random states, relative)", worst, 1e-14)


# ---------------------------------------------------------------- dynamics

def _dyn_rhs():
    d = pk.rhs(PeakonState(q=[0.0, math.log(2)], p=[1.0, 1.0]))
    err = max(np.abs(d.dq - [1.5, 1.5]).max(), np.abs(d.dp - [-0.5, 0.5]).max(),
              np.abs(d.ds).max())
    return _le("rhs", "two-peak example (dq, dp, ds)", err, 1e-15)


def _dyn_integrate():
    tr = pk.integrate(PeakonState(q=[0.0], p=[1.0]), 2.0)
    err = max(abs(tr.final.q[0] - 2.0), abs(tr.final.p[0] - 1.0))
    return _le("integrate", "free peakon reaches q(2)=2", err, 1e-8)


def _dyn_detect_collision():
    _, st = _antisym_state(0.5, -3.0)
    tr = pk.integrate(st, 1.0)
    err = abs(tr.event.time) if tr.event is not None else math.inf
    return _le("detect_collision", "s=0.5 collision time at t*=0", err, 1e-6)


def _dyn_energy_drift():
    _, st = _antisym_state(0.5, -3.0)
    tr = pk.integrate(st, -0.1, rel_tol=1e-10)
    return _le("energy_drift", "s=0.5 up to t*-0.1, max relative drift",
               pk.energy_drift(tr).max(), 1e-8)


# ---------------------------------------------------------------- closed form

def _cf_classify():
    a, b, c = cf.classify(0.5), cf.classify(1.0), cf.classify(1.5)
    ok = (a.regime is cf.Regime.SUBCRITICAL and b.regime is cf.Regime.CRITICAL
          and c.regime is cf.Regime.SUPERCRITICAL)
    err = max(abs(a.C + 0.75), abs(a.p_inf - math.sqrt(0.75)), abs(b.C),
              abs(c.C - 1.25)) if ok else math.inf
    return _le("classify", "regimes and C for s=0.5, 1, 1.5", err, 1e-15)


def _cf_centered():
    u = cf.eval_collision_centered(cf.classify(1.0), 2.0).u_peak
    q = cf.eval_collision_centered(cf.classify(0.0), 2.0).q
    err = max(abs(u + 0.25), abs(q + math.log1p((math.cosh(2.0) - 1.0) / 2.0)))
    return _le("eval_collision_centered", "critical u(2)=-1/4, CH q(2)", err, 1e-9)


def _cf_general():
    worst = 0.0
    ts = np.linspace(-4, 4, 201)
    for s in (0.5, 1.0, 1.5):
        case = cf.classify(s)
        p0 = cf.eval_collision_centered(case, -1.3)
        ts_star = cf.collision_time(case, float(p0.p), float(p0.q))
        g = cf.eval_general(float(p0.p), float(p0.q), case, ts + ts_star)
        c = cf.eval_collision_centered(case, ts)
        worst = max(worst, np.abs(g.q - c.q).max(), np.abs(g.u_peak - c.u_peak).max())
    return _le("eval_general", "general data shifted by t* matches centered form",
               worst, 1e-10)


def _cf_period():
    err = max(abs(cf.period(cf.classify(1.5)) - 5.619851784832581),
              abs(cf.period(cf.classify(math.sqrt(2))) - 2 * math.pi))
    try:
        cf.period(cf.classify(0.5))
        err = math.inf
    except ValueError:
        pass
    return _le("period", "s=1.5 period 2pi/sqrt(1.25); s=0.5 rejected", err, 1e-14)


def _cf_asymptotics():
    a = cf.asymptotics(cf.classify(0.6))
    case = cf.classify(0.6)
    far = cf.eval_collision_centered(case, np.array([-50.0, 50.0]))
    err = max(abs(a.u_peak_limits[0] - 0.4), abs(a.u_peak_limits[1] + 0.4),
              np.abs(far.u_peak - np.array(a.u_peak_limits)).max(),
              np.abs(far.u_peak**2 + far.rho_bar_peak**2 - 0.25).max())
    return _le("asymptotics", "s=0.6 limits -+0.4 on the limit circle", err, 1e-3)


def _cf_circle():
    worst = 0.0
    for s in (0.25, 0.5, 1.0, 1.5, 2.0):
        pt = cf.eval_collision_centered(cf.classify(s), np.linspace(-10, 10, 1000))
        worst = max(worst, np.abs(cf.circle_residual(pt, s)).max())
    return _le("circle_residual", "circle residual along closed forms", worst, 1e-12)


# ---------------------------------------------------------------- lagrangian

def _peakon_grid(state, n=2048, align="midpoint"):
    return lg.init_from_peakons(state, lg.peakon_gridspec(state.q, n, align=align))


def _lg_init():
    g = _peakon_grid(PeakonState(q=[0.0], p=[1.0]))
    _, st = _antisym_state(0.5, -3.0)
    g2 = _peakon_grid(st)
    err = max(abs(g.energy() - 2.0), abs(g2.energy() - 1.0))
    return _le("init_from_peakons", "H(xi_max) = 2E for one peakon and the pair",
               err, 1e-3)


def _lg_kernel():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        y = np.cumsum(rng.uniform(0, 0.1, 256))
        w = rng.normal(size=256)
        s1, a1 = kernel.kernel_convolve(y, w, 0.05)
        s2, a2 = kernel.kernel_direct(y, w, 0.05)
        worst = max(worst, np.abs(s1 - s2).max() / np.abs(s2).max(),
                    np.abs(a1 - a2).max() / np.abs(a2).max())
    return _le("kernel_convolve", "O(N) scan vs direct sum (relative)", worst, 1e-13)


def _lg_integrals():
    errs = []
    for n in (512, 1024):
        xi = np.linspace(-15, 15, n)
        g = lg.init_from_eulerian(xi, lambda x: np.exp(-x * x),
                                  lambda x: -2 * x * np.exp(-x * x),
                                  lambda x: 0.5 * np.exp(-x * x),
                                  lambda x: -x * np.exp(-x * x))
        ib = lg.compute_integrals(g)
        d = np.gradient(ib.P, g.dxi) - ib.Q * g.y_xi
        errs.append(np.abs(d[2:-2]).max())
    order = math.log2(errs[0] / errs[1])
    return CheckResult("compute_integrals", "P_xi - Q y_xi converges at order >= 1.8",
                       order, 1.8, bool(order >= 1.8))


def _lg_rhs():
    xi = np.linspace(-5, 5, 64)
    zero = np.zeros_like
    g = lg.init_from_eulerian(xi, zero, zero, zero, zero)
    return _le("rhs", "zero state has zero time derivative", np.abs(lg.rhs(g)).max(), 0.0)


def _lg_step():
    st = PeakonState(q=[0.0], p=[1.0])
    g = _peakon_grid(st, 2048)
    for _ in range(100):
        g = lg.step(g, 0.01)
    return _le("step", "free peakon moves by p t = 1 in 100 steps",
               abs(lg.peak_value(g, "y", 0.0) - 1.0), 1e-4)


def _lg_constraint():
    _, st = _antisym_state(0.5, -0.5)
    g = lg.evolve(_peakon_grid(st, 1024), 0.5, 1e-3)
    return _le("constraint_residual", "s=0.5 pair through the collision",
               lg.constraint_residual(g), 1e-6)


def _lg_r():
    st = PeakonState(q=[-1.0, 1.0], p=[1.0, 0.5], s=[0.4, 0.3])
    g = _peakon_grid(st, 2048)
    r0 = lg.compute_r(g)
    mask = lg.off_peak_mask(g, st.q)
    g = lg.evolve(g, 1.0, 1e-2)
    err = np.abs(lg.compute_r(g) - r0)[mask].max()
    return _le("compute_r", "r conserved at off-peak nodes", err,
               1e-8 + 10 * g.dxi**2)


def _lg_invariant():
    st = PeakonState(q=[0.0], p=[1.0])
    g = lg.evolve(_peakon_grid(st, 2048), 1.0, 1e-2)
    I = lg.pointwise_invariant(g)
    mask = (np.abs(g.xi) >= 1.0) & np.isfinite(I)
    return _le("pointwise_invariant", "CH peakon invariant vanishes 1 away "
               "from the peak", np.abs(I[mask]).max(), 1e-3)


def _lg_eulerian():
    st = PeakonState(q=[0.0], p=[1.0])
    g = lg.evolve(_peakon_grid(st, 2048), 1.0, 1e-2)
    x = np.linspace(-5, 7, 241)
    ef = lg.to_eulerian(g, x)
    return _le("to_eulerian", "peakon read back at t=1",
               np.abs(ef.u - np.exp(-np.abs(x - 1))).max(), 1e-3)


# ---------------------------------------------------------------- scenario

_FREE_PEAKON = """
[scenario]
kind = peakons
t1 = 2
[peakons]
q = 0
p = 1
"""


def _sc_parse():
    sc = scn.parse_scenario(_FREE_PEAKON)
    ok = sc.kind == "peakons" and sc.n == 1
    try:
        scn.parse_scenario(_FREE_PEAKON + "bogus = 1\n")
        ok = False
    except scn.ScenarioError:
        pass
    return CheckResult("parse_scenario", "minimal config parsed, unknown key rejected",
                       0.0 if ok else 1.0, 0.0, ok)


def _sc_run():
    sc = scn.parse_scenario(_FREE_PEAKON)
    with tempfile.TemporaryDirectory() as tmp:
        scn.run(sc, tmp)
        data = np.loadtxt(Path(tmp) / "trajectory.csv", delimiter=",", skiprows=1)
    return _le("run", "trajectory.csv ends at q(2)=2", abs(data[-1, 1] - 2.0), 1e-8)


SUITES = {
    "core": [_core_eval_u, _core_eval_rho_bar, _core_eval_derivatives,
             _core_total_energy],
    "dynamics": [_dyn_rhs, _dyn_integrate, _dyn_detect_collision, _dyn_energy_drift],
    "closed-form": [_cf_classify, _cf_centered, _cf_general, _cf_period,
                    _cf_asymptotics, _cf_circle],
    "lagrangian": [_lg_init, _lg_kernel, _lg_integrals, _lg_rhs, _lg_step,
                   _lg_constraint, _lg_r, _lg_invariant, _lg_eulerian],
    "scenario": [_sc_parse, _sc_run],
}


def run_checks(checks) -> Report:
    """Run check callables; an exception counts as a failed entry."""
    entries = []
    for chk in checks:
        try:
            entries.append(chk())
        except Exception as exc:  # noqa: BLE001 - failures become report rows
            name = chk.__name__.split("_", 2)[-1]
            entries.append(CheckResult(name, f"raised {type(exc).__name__}: {exc}",
                                       math.nan, math.nan, False))
    return Report(entries)


def verify(suite: str = "all") -> Report:
    if suite == "all":
        checks = [c for cs in SUITES.values() for c in cs]
    elif suite in SUITES:
        checks = SUITES[suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from "
                         f"{', '.join(['all', *SUITES])}")
    return run_checks(checks)
