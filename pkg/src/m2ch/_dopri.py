"""Dormand-Prince 5(4) stepper with PI step-size control and dense output.

Only the pieces needed by :mod:`m2ch.peakons` are implemented: a single
adaptive step, the quartic continuous extension, and the step controller.
Integration direction is carried by the sign of ``h``.
"""

from __future__ import annotations

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200,
              -22 / 525, 1 / 40])
# quartic dense output (Shampine), columns multiply theta, theta^2, ...
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423,
     69997945 / 29380423],
])

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents (Gustafsson / Hairer-Wanner II, IV.2)
ALPHA = 0.7 / ORDER
BETA = 0.4 / ORDER


class StageError(Exception):
    """Raised by a right-hand side that cannot be evaluated at a stage."""


def step(fun, t, y, f0, h):
    """One Dormand-Prince step.

    Returns ``(y_new, f_new, K, err_vec)`` where ``K`` holds the seven stage
    derivatives used for dense output. ``fun`` may raise :class:`StageError`.
    """
    K = np.empty((7, y.size))
    K[0] = f0
    for i in range(1, 6):
        dy = h * (np.asarray(A[i]) @ K[:i])
        K[i] = fun(t + C[i] * h, y + dy)
    y_new = y + h * (B @ K[:6])
    f_new = fun(t + h, y_new)
    K[6] = f_new
    err = h * (E @ K)
    return y_new, f_new, K, err


def error_norm(err, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def initial_step(fun, t, y, f0, direction, rtol, atol):
    """Starting step size after Hairer, Norsett & Wanner (II.4)."""
    scale = atol + np.abs(y) * rtol
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    try:
        f1 = fun(t + direction * h0, y + direction * h0 * f0)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    except StageError:
        return h0 * 1e-3
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / ORDER)
    return min(100 * h0, h1)


def next_factor(err, err_prev):
    """PI step factor after an accepted step."""
    if err == 0.0:
        return MAX_FACTOR
    fac = SAFETY * err ** -ALPHA * err_prev ** BETA
    return min(MAX_FACTOR, max(MIN_FACTOR, fac))


def reject_factor(err):
    if not np.isfinite(err):
        return MIN_FACTOR
    return max(MIN_FACTOR, SAFETY * err ** (-1 / ORDER))


class DenseStep:
    """Continuous extension over one accepted step ``[t_old, t_old + h]``."""

    def __init__(self, t_old, y_old, h, K):
        self.t_old = t_old
        self.h = h
        self.y_old = y_old
        self._Q = K.T @ P

    def __call__(self, t):
        theta = (t - self.t_old) / self.h
        powers = np.cumprod(np.full(4, theta))
        return self.y_old + self.h * (self._Q @ powers)
