"""Peakon configurations, field evaluation and the total energy.

A double multipeakon is described by positions ``q``, momenta ``p`` and
density amplitudes ``s``::

    u(x)    = sum_i p_i exp(-|x - q_i|)
    rbar(x) = sum_i s_i exp(-|x - q_i|)

Derivatives use the convention ``sign(0) = 0``, so at a peak they return
the average of the one-sided limits.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field

import numpy as np

__all__ = [
    "PeakonState",
    "EulerianSample",
    "eval_u",
    "eval_rho_bar",
    "eval_derivatives",
    "sample",
    "total_energy",
]


def _as_readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float, ndmin=1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PeakonState:
    """Positions, momenta and density amplitudes of ``n`` peaks at time ``t``.

    ``q`` must be strictly increasing; two equal positions mean the peaks
    have collided and the configuration is no longer a valid state. Pass
    ``validate=False`` to hold a raw integrator state (e.g. one that stepped
    onto or over a collision) for inspection.
    """

    q: np.ndarray
    p: np.ndarray
    s: np.ndarray = None
    t: float = 0.0
    validate: InitVar[bool] = True
    n: int = field(init=False)

    def __post_init__(self, validate):
        q = _as_readonly(self.q)
        p = _as_readonly(self.p)
        s = _as_readonly(np.zeros_like(q) if self.s is None else self.s)
        if q.ndim != 1 or q.shape != p.shape or q.shape != s.shape:
            raise ValueError(
                f"q, p, s must be 1-d arrays of equal length, got "
                f"{q.shape}, {p.shape}, {s.shape}")
        if validate:
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))
                    and np.all(np.isfinite(s))):
                raise ValueError("peakon state contains non-finite values")
            if q.size > 1 and np.any(np.diff(q) <= 0):
                raise ValueError("peak positions must be strictly increasing")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "n", int(q.size))

    @classmethod
    def empty(cls, t: float = 0.0) -> "PeakonState":
        return cls(q=[], p=[], s=[], t=t)

    def replace(self, **kw) -> "PeakonState":
        args = dict(q=self.q, p=self.p, s=self.s, t=self.t)
        args.update(kw)
        return PeakonState(**args)

    def gaps(self) -> np.ndarray:
        return np.diff(self.q)


@dataclass(frozen=True)
class EulerianSample:
    x: float
    u: float
    u_x: float
    rho_bar: float
    rho_bar_x: float


def _kernel(state: PeakonState, x):
    x = np.asarray(x, dtype=float)
    d = x[..., None] - state.q
    return d, np.exp(-np.abs(d))


def eval_u(state: PeakonState, x):
    """Velocity ``u(x) = sum_i p_i exp(-|x - q_i|)``; ``x`` may be an array."""
    _, k = _kernel(state, x)
    return k @ state.p


def eval_rho_bar(state: PeakonState, x):
    """Regularized density ``rbar(x) = sum_i s_i exp(-|x - q_i|)``."""
    _, k = _kernel(state, x)
    return k @ state.s


def eval_derivatives(state: PeakonState, x):
    """Return ``(u_x, rho_bar_x)`` at ``x`` with ``sign(0) = 0`` at the peaks."""
    d, k = _kernel(state, x)
    sk = np.sign(-d) * k
    return sk @ state.p, sk @ state.s


def sample(state: PeakonState, x: float) -> EulerianSample:
    ux, rx = eval_derivatives(state, x)
    return EulerianSample(
        x=float(x),
        u=float(eval_u(state, x)),
        u_x=float(ux),
        rho_bar=float(eval_rho_bar(state, x)),
        rho_bar_x=float(rx),
    )


def total_energy(state: PeakonState) -> float:
    """Total energy ``sum_ij (p_i p_j + s_i s_j) exp(-|q_i - q_j|)``.

    This is half of ``int (u^2 + u_x^2 + rbar^2 + rbar_x^2) dx``. The sum is
    split into the diagonal and twice the strict upper triangle so that for
    two peaks the arithmetic matches the familiar closed expression.
    """
    p, s, q = state.p, state.s, state.q
    diag = np.sum(p * p) + np.sum(s * s)
    if state.n < 2:
        return float(diag)
    i, j = np.triu_indices(state.n, k=1)
    cross = (p[i] * p[j] + s[i] * s[j]) * np.exp(-np.abs(q[i] - q[j]))
    return float(diag + 2.0 * np.sum(cross))
