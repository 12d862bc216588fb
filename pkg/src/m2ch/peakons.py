"""Multipeakon ODEs with collision detection.

Between collisions the peaks obey::

    q_i' = sum_j p_j exp(-|q_i - q_j|)
    p_i' = sum_{j != i} (p_i p_j + s_i s_j) sign(q_i - q_j) exp(-|q_i - q_j|)
    s_i' = 0

At a collision two neighbouring positions meet while the momentum
difference blows up, so the integrator cannot step across it. The
trajectory ends at the detection point and the collision time is reported
as an event; conservative continuation is the job of
:mod:`m2ch.lagrangian`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _dopri
from .core import PeakonState, total_energy

__all__ = [
    "PeakonDeriv",
    "Collision",
    "TrajectoryRecord",
    "rhs",
    "integrate",
    "detect_collision",
    "energy_drift",
]

GAP_TOL = 1e-9


@dataclass(frozen=True)
class PeakonDeriv:
    dq: np.ndarray
    dp: np.ndarray
    ds: np.ndarray


@dataclass(frozen=True)
class Collision:
    """Peaks ``index`` and ``index + 1`` meet at ``time``.

    ``t_detect`` is where the integration stopped (gap equal to the
    threshold, or the last state before the step size underflowed).
    """

    index: int
    time: float
    t_detect: float
    gap: float
    reason: str = "gap"


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: list
    energies: np.ndarray
    event: Collision | None = None
    n_accepted: int = 0
    n_rejected: int = 0
    s: np.ndarray = field(default=None, repr=False)

    @property
    def final(self) -> PeakonState:
        return self.states[-1]

    def q(self) -> np.ndarray:
        return np.array([st.q for st in self.states])

    def p(self) -> np.ndarray:
        return np.array([st.p for st in self.states])


def _velocities(q, p, s):
    d = q[:, None] - q[None, :]
    k = np.exp(-np.abs(d))
    sk = np.sign(d) * k
    dq = k @ p
    dp = p * (sk @ p) + s * (sk @ s)
    return dq, dp


def rhs(state: PeakonState) -> PeakonDeriv:
    """Right-hand side of the multipeakon system.

    Raises ``ValueError`` if the positions are not strictly increasing,
    which means a collision was stepped over.
    """
    if state.n > 1 and np.any(np.diff(state.q) <= 0):
        raise ValueError("peak positions are not strictly increasing")
    dq, dp = _velocities(state.q, state.p, state.s)
    return PeakonDeriv(dq=dq, dp=dp, ds=np.zeros(state.n))


def _gap_rate(q, p, s, i):
    dq, _ = _velocities(q, p, s)
    return dq[i + 1] - dq[i]


def _extrapolate(t, q, p, s, direction, reason):
    """Collision time from a state close to a collision.

    Near a collision the gap of the colliding pair behaves like
    ``c (t* - t)^2``, so ``t* - t = 2 g / |g'|`` up to O((t* - t)^3).
    """
    g = np.diff(q)
    i = int(np.argmin(g))
    gi = float(g[i])
    if gi <= 0.0:
        return Collision(i, float(t), float(t), gi, reason)
    rate = _gap_rate(q, p, s, i)
    if direction * rate < 0:
        t_star = t + direction * 2.0 * gi / abs(rate)
    else:
        t_star = t
    return Collision(i, float(t_star), float(t), gi, reason)


def detect_collision(before: PeakonState, after: PeakonState, dense=None,
                     gap_tol: float = GAP_TOL) -> Collision | None:
    """Look for a collision between two consecutive states.

    ``dense``, when given, maps a time in ``[before.t, after.t]`` to the
    packed vector ``(q, p)``; the threshold crossing is then located by
    Brent's method on it. Without it the crossing is placed by linear
    interpolation of the gap (sign change) or extrapolated from ``after``.
    """
    if after.n < 2:
        return None
    g_after = np.diff(after.q)
    if g_after.min() >= gap_tol:
        return None
    n = after.n
    s = after.s
    direction = 1.0 if after.t >= before.t else -1.0
    g_before = np.diff(before.q).min()

    if g_before < gap_tol or after.t == before.t:
        return _extrapolate(before.t, before.q, before.p, s, direction, "gap")

    if dense is not None:
        def excess(tau):
            return np.diff(dense(tau)[:n]).min() - gap_tol

        tc = brentq(excess, before.t, after.t, xtol=1e-16, rtol=1e-15)
        yc = dense(tc)
        return _extrapolate(tc, yc[:n], yc[n:], s, direction, "gap")

    i = int(np.argmin(g_after))
    ga = float(g_after[i])
    if ga == 0.0:
        return Collision(i, after.t, after.t, 0.0, "gap")
    if ga < 0.0:
        gb = float(np.diff(before.q)[i])
        tc = before.t + (after.t - before.t) * gb / (gb - ga)
        return Collision(i, float(tc), after.t, ga, "sign change")
    return _extrapolate(after.t, after.q, after.p, s, direction, "gap")


def _fun_factory(s):
    n = s.size

    def fun(t, y):
        q = y[:n]
        if n > 1 and not np.all(np.diff(q) > 0):
            raise _dopri.StageError("ordering violated")
        dq, dp = _velocities(q, y[n:], s)
        out = np.concatenate([dq, dp])
        if not np.all(np.isfinite(out)):
            raise _dopri.StageError("non-finite derivative")
        return out

    return fun


def integrate(state: PeakonState, t_end: float, rel_tol: float = 1e-10,
              abs_tol: float = 1e-12, max_step: float = np.inf,
              sample_dt: float | None = None, gap_tol: float = GAP_TOL,
              max_steps: int = 1_000_000) -> TrajectoryRecord:
    """Integrate the multipeakon system from ``state.t`` to ``t_end``.

    Uses Dormand-Prince 5(4) with PI step control. Backward integration
    (``t_end < state.t``) is supported. The run stops early at a collision,
    recorded in ``TrajectoryRecord.event``. Samples are taken at multiples
    of ``sample_dt`` from ``state.t`` (every accepted step if ``None``) and
    at the final time.
    """
    s = state.s.copy()
    n = state.n
    t = state.t
    times, states = [t], [state]

    def record(tau, y):
        if tau != times[-1]:
            times.append(tau)
            states.append(PeakonState(q=y[:n], p=y[n:], s=s, t=tau,
                                      validate=False))

    def finish(event=None, acc=0, rej=0):
        energies = np.array([total_energy(st) for st in states])
        return TrajectoryRecord(times=np.array(times), states=states,
                                energies=energies, event=event,
                                n_accepted=acc, n_rejected=rej, s=s)

    if t_end == t or n == 0:
        if n == 0 and t_end != t:
            states.append(state.replace(t=t_end))
            times.append(float(t_end))
        return finish()

    direction = 1.0 if t_end > t else -1.0
    if n > 1 and np.diff(state.q).min() < gap_tol:
        return finish(_extrapolate(t, state.q, state.p, s, direction, "gap"))

    fun = _fun_factory(s)
    y = np.concatenate([state.q, state.p])
    f = fun(t, y)
    h = _dopri.initial_step(fun, t, y, f, direction, rel_tol, abs_tol)
    h = min(h, max_step, abs(t_end - t))
    err_prev = 1e-4
    rejected = False
    n_acc = n_rej = 0
    k_sample = 1

    for _ in range(max_steps):
        remaining = abs(t_end - t)
        if remaining == 0.0:
            break
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            if n > 1:
                ev = _extrapolate(t, y[:n], y[n:], s, direction, "step underflow")
                if direction * _gap_rate(y[:n], y[n:], s, ev.index) < 0:
                    return finish(ev, n_acc, n_rej)
            raise RuntimeError(f"step size underflow at t={t!r} without collision")
        last = h >= remaining
        h_try = remaining if last else h
        hd = direction * h_try
        try:
            y_new, f_new, K, err = _dopri.step(fun, t, y, f, hd)
            err_norm = _dopri.error_norm(err, y, y_new, rel_tol, abs_tol)
        except _dopri.StageError:
            err_norm = np.inf
        if not np.isfinite(err_norm) or err_norm > 1.0:
            n_rej += 1
            rejected = True
            h = h_try * (0.25 if not np.isfinite(err_norm)
                         else _dopri.reject_factor(err_norm))
            continue

        n_acc += 1
        t_new = t_end if last else t + hd
        dense = _dopri.DenseStep(t, y, hd, K)

        event = None
        if n > 1 and np.diff(y_new[:n]).min() < gap_tol:
            before = PeakonState(q=y[:n], p=y[n:], s=s, t=t, validate=False)
            after = PeakonState(q=y_new[:n], p=y_new[n:], s=s, t=t_new,
                                validate=False)
            event = detect_collision(before, after, dense, gap_tol)
            t_stop = event.t_detect
        else:
            t_stop = t_new

        if sample_dt is not None:
            while True:
                tau = state.t + direction * k_sample * sample_dt
                if direction * (tau - t_stop) >= 0:
                    break
                record(tau, dense(tau))
                k_sample += 1

        if event is not None:
            record(t_stop, dense(t_stop))
            return finish(event, n_acc, n_rej)

        if sample_dt is None or t_new == t_end:
            record(t_new, y_new)
        t, y, f = t_new, y_new, f_new
        fac = _dopri.next_factor(err_norm, err_prev)
        if rejected:
            fac = min(fac, 1.0)
            rejected = False
        err_prev = max(err_norm, 1e-4)
        h = min(h_try * fac, max_step)
    else:
        raise RuntimeError(f"exceeded max_steps={max_steps}")

    return finish(None, n_acc, n_rej)


def energy_drift(traj: TrajectoryRecord) -> np.ndarray:
    """Relative energy drift ``|E(t) - E(t0)| / E(t0)`` along a trajectory."""
    e0 = traj.energies[0]
    if e0 == 0.0:
        raise ValueError("initial energy is zero; relative drift is undefined")
    return np.abs(traj.energies - e0) / abs(e0)
