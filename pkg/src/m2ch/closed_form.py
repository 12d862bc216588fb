"""Exact antisymmetric peakon-antipeakon solutions.

For ``q2 = -q1``, ``p2 = -p1`` and ``s2 = -s1`` the two-peak system reduces
to the gap ``q = q1 - q2 <= 0``, the momentum difference ``p = p1 - p2``
and the constant ``s = s1 - s2``::

    q_t = p (1 - e^q),    p_t = p^2 / 2 + C / 2,    C = s^2 - 1,

with the energy normalized to 1/2, i.e. ``(p^2 + s^2)(1 - e^q) = 1``. The
sign of ``C`` splits the dynamics into three regimes. The values at the
left peak are ``u_peak = p (1 - e^q) / 2`` and
``rho_bar_peak = s (1 - e^q) / 2``.

Everything here is vectorized over ``t``. Where a formula contains
``1 - e^x`` or ``cosh(x) - 1`` it is rewritten with ``expm1``/``log1p`` or
half-angle identities so that evaluation right next to a collision is
accurate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import PeakonState

__all__ = [
    "Regime",
    "AntisymCase",
    "AntisymPoint",
    "Asymptotics",
    "classify",
    "eval_collision_centered",
    "eval_general",
    "collision_time",
    "period",
    "asymptotics",
    "circle_residual",
    "energy_residual",
    "to_peakon_state",
    "from_peakon_state",
]

CRITICAL_BAND = 1e-13
NORMALIZATION_TOL = 1e-10


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class AntisymCase:
    s: float
    C: float
    regime: Regime
    p_inf: float | None = None
    E: float = 0.5

    @property
    def sqrt_abs_C(self) -> float:
        return float(np.sqrt(abs(self.C)))


@dataclass(frozen=True)
class AntisymPoint:
    """Reduced state at time ``t`` (arrays when ``t`` is an array).

    ``p`` is ``inf`` exactly at a collision, where ``q``, ``u_peak`` and
    ``rho_bar_peak`` vanish.
    """

    t: np.ndarray
    p: np.ndarray
    q: np.ndarray
    u_peak: np.ndarray
    rho_bar_peak: np.ndarray

    @property
    def at_collision(self):
        return self.q == 0.0


@dataclass(frozen=True)
class Asymptotics:
    """Limits of ``(u_peak, rho_bar_peak)`` as ``t -> -inf`` and ``t -> +inf``.

    ``None`` entries mean there is no limit (periodic regime).
    """

    u_peak_limits: tuple | None
    rho_bar_peak_limits: tuple | None
    limit_circle: bool
    periodic: bool


def classify(s: float, band: float = CRITICAL_BAND) -> AntisymCase:
    """Regime and constants for density amplitude ``s >= 0`` at ``E = 1/2``."""
    s = float(s)
    if not s >= 0.0:
        raise ValueError(f"s must be non-negative (use rbar -> -rbar), got {s}")
    if abs(s - 1.0) < band:
        return AntisymCase(s=s, C=0.0, regime=Regime.CRITICAL)
    C = (s - 1.0) * (s + 1.0)
    if s < 1.0:
        return AntisymCase(s=s, C=C, regime=Regime.SUBCRITICAL,
                           p_inf=float(np.sqrt(-C)))
    return AntisymCase(s=s, C=C, regime=Regime.SUPERCRITICAL)


def _one_minus_exp_q(x):
    """``1 - e^q`` for ``q = -log1p(x)``, i.e. ``x / (1 + x)``."""
    return x / (1.0 + x)


def _point(case, t, p, x, u):
    # x = e^{-q} - 1 >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        q = -np.log1p(x)
        rho = 0.5 * case.s * _one_minus_exp_q(x)
        rho = np.where(np.isinf(x), 0.5 * case.s, rho)
    return AntisymPoint(t=t, p=p, q=q, u_peak=u, rho_bar_peak=rho)


def eval_collision_centered(case: AntisymCase, t) -> AntisymPoint:
    """Solution whose collision happens at ``t = 0``.

    At ``t = 0`` the gap, ``u_peak`` and ``rho_bar_peak`` are zero and ``p``
    is reported as ``inf``. In the supercritical regime the same happens at
    every multiple of the period.
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if case.regime is Regime.SUBCRITICAL:
            k = case.p_inf
            half = 0.5 * k * t
            sh = np.sinh(half)
            th = np.tanh(half)
            x = (sh / k) ** 2
            p = -k / th
            # -k sinh(kt) / (4k^2 + 2(cosh(kt) - 1)), overflow-free form
            u = -0.5 * k * th / (k * k / np.cosh(half) ** 2 + th * th)
            u = np.where(t == 0.0, 0.0, u)
        elif case.regime is Regime.SUPERCRITICAL:
            rc = case.sqrt_abs_C
            half = 0.5 * rc * t
            sn = np.sin(half)
            x = sn * sn / case.C
            p = -rc / np.tan(half)
            u = -0.25 * rc * (np.sin(rc * t) / case.C) / (1.0 + x)
        else:
            x = 0.25 * t * t
            p = -2.0 / t
            u = -t / (t * t + 4.0)
        p = np.where(x == 0.0, np.inf, p)
    return _point(case, t, p, x, u)


def energy_residual(case: AntisymCase, p, q) -> np.ndarray:
    """``(p^2 + s^2)(1 - e^q) - 1``, zero on the normalized energy surface."""
    return (np.asarray(p) ** 2 + case.s ** 2) * -np.expm1(q) - 1.0


def _check_initial(case, p0, q0, tol):
    if not q0 < 0.0:
        raise ValueError(f"q0 must be negative (peaks apart), got {q0}")
    res = float(energy_residual(case, p0, q0))
    if abs(res) > tol:
        raise ValueError(
            f"initial data violate (p0^2 + s^2)(1 - e^q0) = 1 by {res:.3g}")


def collision_time(case: AntisymCase, p0: float, q0: float) -> float:
    """Collision time of the solution with ``(p, q)(0) = (p0, q0)``.

    Supercritical solutions collide periodically; the first collision after
    ``t = 0`` is returned.
    """
    if case.regime is Regime.SUBCRITICAL:
        k = case.p_inf
        A = (p0 - k) / (p0 + k)
        return float(np.log(1.0 / A) / k)
    if case.regime is Regime.CRITICAL:
        return 2.0 / p0
    rc = case.sqrt_abs_C
    D = np.arctan(p0 / rc)
    return float((0.5 * np.pi - D) * 2.0 / rc)


def eval_general(p0: float, q0: float, case: AntisymCase, t,
                 tol: float = NORMALIZATION_TOL) -> AntisymPoint:
    """Solution with ``p(0) = p0``, ``q(0) = q0 < 0``.

    The data must lie on the normalized energy surface to within ``tol``.
    The formulas are global in ``t``; ``p`` is ``inf`` at collision times.
    """
    p0, q0 = float(p0), float(q0)
    _check_initial(case, p0, q0, tol)
    t = np.asarray(t, dtype=float)
    em = -np.expm1(q0) / np.exp(q0)     # e^{-q0} - 1
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if case.regime is Regime.SUBCRITICAL:
            k = case.p_inf
            A = (p0 - k) / (p0 + k)
            ekt = np.exp(k * t)
            one_m = -np.expm1(k * t + np.log(A))        # 1 - A e^{kt}
            one_p = 1.0 + A * ekt
            w = (one_m * one_m) * em / ekt
            x = w / (1.0 - A) ** 2
            p = k * one_p / one_m
            u = 0.5 * k * one_m * one_p * em / ekt / ((1.0 - A) ** 2 + w)
        elif case.regime is Regime.SUPERCRITICAL:
            rc = case.sqrt_abs_C
            D = np.arctan(p0 / rc)
            B = em / np.cos(D) ** 2
            theta = 0.5 * rc * t + D
            cs = np.cos(theta)
            x = B * cs * cs
            p = rc * np.tan(theta)
            u = 0.25 * rc * B * np.sin(2.0 * theta) / (1.0 + x)
        else:
            tau = 0.5 * (2.0 - t * p0)
            x = tau * tau * em
            p = p0 / tau
            u = p0 * 0.5 * tau * em / (1.0 + x)
        p = np.where(x == 0.0, np.inf, p)
    return _point(case, t, p, x, u)


def period(case: AntisymCase) -> float:
    if case.regime is not Regime.SUPERCRITICAL:
        raise ValueError(f"{case.regime.value} solutions are not periodic")
    return float(2.0 * np.pi / case.sqrt_abs_C)


def asymptotics(case: AntisymCase) -> Asymptotics:
    if case.regime is Regime.SUPERCRITICAL:
        return Asymptotics(None, None, limit_circle=False, periodic=True)
    if case.regime is Regime.CRITICAL:
        return Asymptotics((0.0, 0.0), (0.5 * case.s, 0.5 * case.s),
                           limit_circle=True, periodic=False)
    half = 0.5 * case.p_inf
    return Asymptotics((half, -half), (0.5 * case.s, 0.5 * case.s),
                       limit_circle=True, periodic=False)


def circle_residual(point: AntisymPoint, s: float):
    """``u^2 + (rho - 1/(4s))^2 - (1/(4s))^2`` at the peak values.

    Evaluated in the expanded form ``u^2 + rho^2 - rho / (2s)``.
    """
    if not s > 0.0:
        raise ValueError("circle residual needs s > 0")
    u, r = point.u_peak, point.rho_bar_peak
    return u * u + r * r - r / (2.0 * s)


def to_peakon_state(case: AntisymCase, p: float, q: float,
                    t: float = 0.0) -> PeakonState:
    """Two-peak state with ``q1 = q/2``, ``p1 = p/2``, ``s1 = s/2``."""
    return PeakonState(q=[0.5 * q, -0.5 * q], p=[0.5 * p, -0.5 * p],
                       s=[0.5 * case.s, -0.5 * case.s], t=t)


def from_peakon_state(state: PeakonState):
    """Reduced ``(p, q, s)`` of a two-peak state."""
    if state.n != 2:
        raise ValueError("reduced variables need exactly two peaks")
    return (float(state.p[0] - state.p[1]), float(state.q[0] - state.q[1]),
            float(state.s[0] - state.s[1]))
