"""Semi-linear Lagrangian solver that continues solutions through wave breaking.

A uniform grid of labels ``xi`` carries the characteristics ``y``, the
Lagrangian velocity ``U``, the cumulative energy ``H``, the values
``rbar``/``sbar`` of the regularized density and its derivative, the
multiplier ``lam``, and the derivative fields ``y_xi, U_xi, H_xi, rbar_xi,
lam_xi``. The derivative fields are evolved as unknowns of their own, which
makes the system semi-linear: ``y_xi -> 0`` at a collision is harmless.

The nonlocal terms are exponential-kernel integrals over the labels::

    P = 1/4 int e^{-|y(xi)-y(eta)|} (H_xi + (U^2 - 2 sbar^2) y_xi) deta
    Q = -1/4 int sign(xi-eta) e^{-|y(xi)-y(eta)|} (same) deta
    R, V = +-1/2 int [1, -sign] e^{...} U_xi rbar deta
    S, W = +-1/2 int [1, -sign] e^{...} U_xi sbar deta

computed in O(N) by :func:`m2ch.kernel.kernel_convolve`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .core import PeakonState, eval_derivatives, eval_rho_bar, eval_u
from .kernel import kernel_convolve

__all__ = [
    "FIELDS",
    "GridSpec",
    "LagrangianGrid",
    "IntegralBundle",
    "EulerianField",
    "SolverAbort",
    "peakon_gridspec",
    "init_from_eulerian",
    "init_from_peakons",
    "compute_integrals",
    "rhs",
    "step",
    "evolve",
    "constraint_residual",
    "compute_r",
    "rbar_consistency",
    "pointwise_invariant",
    "to_eulerian",
    "peak_value",
    "off_peak_mask",
]

FIELDS = ("y", "U", "H", "rbar", "sbar", "lam",
          "y_xi", "U_xi", "H_xi", "rbar_xi", "lam_xi")
_IX = {name: i for i, name in enumerate(FIELDS)}
_DERIV_OF = {"y": "y_xi", "U": "U_xi", "H": "H_xi", "rbar": "rbar_xi",
             "lam": "lam_xi"}

MASK_EPS = 1e-6
MIN_MARGIN = 20.0
GROWTH_LIMIT = 10.0


class GridSpec(NamedTuple):
    xi_min: float
    xi_max: float
    n: int

    @property
    def dxi(self) -> float:
        return (self.xi_max - self.xi_min) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return self.xi_min + self.dxi * np.arange(self.n)


class SolverAbort(RuntimeError):
    """Raised by :func:`step`; ``grid`` is the last valid state."""

    def __init__(self, reason: str, grid: "LagrangianGrid"):
        super().__init__(f"{reason} (t={grid.t:.17g})")
        self.reason = reason
        self.grid = grid


@dataclass(frozen=True, eq=False)
class LagrangianGrid:
    """All Lagrangian fields on the label grid at time ``t``.

    ``fields`` has shape ``(11, N)`` in the order of :data:`FIELDS`; each
    field is also available as a read-only attribute.
    """

    xi: np.ndarray
    fields: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        f = np.array(self.fields, dtype=float)
        if f.shape != (len(FIELDS), xi.size):
            raise ValueError(f"fields must have shape {(len(FIELDS), xi.size)}")
        xi.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "fields", f)
        object.__setattr__(self, "t", float(self.t))

    def __getattr__(self, name):
        if name in _IX:
            return self.fields[_IX[name]]
        raise AttributeError(name)

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def n(self) -> int:
        return self.xi.size

    def evolved(self, fields, t) -> "LagrangianGrid":
        return LagrangianGrid(self.xi, fields, t)

    def energy(self) -> float:
        """Total energy ``H(xi_max)``, twice the Eulerian energy."""
        return float(self.fields[_IX["H"], -1])


class IntegralBundle(NamedTuple):
    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    V: np.ndarray
    W: np.ndarray


class EulerianField(NamedTuple):
    x: np.ndarray
    u: np.ndarray
    rho_bar: np.ndarray
    rho_bar_x: np.ndarray
    energy_density: np.ndarray


def peakon_gridspec(q, n: int, margin: float = MIN_MARGIN,
                    align: str = "midpoint") -> GridSpec:
    """Grid covering the peaks ``q`` with ``margin`` on both sides.

    ``align="node"`` puts the first and last peak exactly on grid nodes;
    ``align="midpoint"`` puts them halfway between two nodes, which keeps the
    trapezoidal quadrature second order across the kinks. Peaks in between
    land wherever the spacing puts them, and so does the last peak when it is
    closer than one cell to the first.
    """
    q = np.sort(np.asarray(q, dtype=float))
    if q.size == 0:
        return GridSpec(-margin, margin, n)
    if align not in ("node", "midpoint"):
        raise ValueError(f"unknown alignment {align!r}")
    lo, hi = q[0], q[-1]
    span = hi - lo
    # two spare cells so the margins survive rounding and the half shift
    d = (span + 2.0 * margin) / (n - 3)
    cells = int(np.floor(span / d)) if span > 0 else 0
    if cells > 0:
        d = span / cells
    frac = 0.5 if align == "midpoint" else 0.0
    free = n - 1 - cells
    need = np.ceil(margin / d - frac - 1e-9) + frac
    left = max(np.floor(0.5 * free - frac) + frac, need)
    if free - left < margin / d - 1e-9:
        left = free - need
    xi_min = lo - left * d
    return GridSpec(float(xi_min), float(xi_min + (n - 1) * d), int(n))


def init_from_eulerian(xi, u, u_x, rho_bar, rho_bar_x, t: float = 0.0):
    """Grid for Eulerian data given as callables, with ``y = xi`` at start.

    ``H_xi`` is built to satisfy the constraint ``y_xi H_xi = (U^2 + rbar^2 +
    sbar^2) y_xi^2 + U_xi^2`` and ``H`` is its cumulative trapezoidal sum with
    ``H(xi_min) = 0``; ``lam`` starts at zero.
    """
    xi = np.asarray(xi, dtype=float)
    F = np.zeros((len(FIELDS), xi.size))
    F[_IX["y"]] = xi
    F[_IX["U"]] = u(xi)
    F[_IX["rbar"]] = rho_bar(xi)
    F[_IX["sbar"]] = rho_bar_x(xi)
    F[_IX["y_xi"]] = 1.0
    F[_IX["U_xi"]] = u_x(xi)
    F[_IX["rbar_xi"]] = F[_IX["sbar"]]
    U, rb, sb, Ux = F[1], F[3], F[4], F[7]
    F[_IX["H_xi"]] = U * U + rb * rb + sb * sb + Ux * Ux
    F[_IX["H"]] = cumulative_trapezoid(F[_IX["H_xi"]], xi, initial=0.0)
    return LagrangianGrid(xi, F, t)


def init_from_peakons(state: PeakonState, gridspec: GridSpec,
                      margin: float = MIN_MARGIN) -> LagrangianGrid:
    """Lagrangian grid for a multipeakon, derivatives with ``sign(0) = 0``."""
    xi_min, xi_max, n = gridspec
    slack = 1e-9 * max(1.0, margin)
    if state.n and (state.q[0] - xi_min < margin - slack
                    or xi_max - state.q[-1] < margin - slack):
        raise ValueError(
            f"grid [{xi_min}, {xi_max}] leaves less than {margin} around the "
            f"peaks [{state.q[0]}, {state.q[-1]}]")
    if state.n == 0:
        zero = np.zeros_like
        return init_from_eulerian(GridSpec(*gridspec).nodes(), zero, zero,
                                  zero, zero, t=state.t)
    return init_from_eulerian(
        GridSpec(*gridspec).nodes(),
        u=lambda x: eval_u(state, x),
        u_x=lambda x: eval_derivatives(state, x)[0],
        rho_bar=lambda x: eval_rho_bar(state, x),
        rho_bar_x=lambda x: eval_derivatives(state, x)[1],
        t=state.t,
    )


def _integrals(F, dxi):
    U, sb, rb = F[1], F[4], F[3]
    yx, Ux, Hx = F[6], F[7], F[8]
    w = np.empty((3, U.size))
    w[0] = Hx + (U * U - 2.0 * sb * sb) * yx
    w[1] = Ux * rb
    w[2] = Ux * sb
    sym, asym = kernel_convolve(F[0], w, dxi)
    return IntegralBundle(P=0.25 * sym[0], Q=-0.25 * asym[0],
                          R=0.5 * sym[1], S=0.5 * sym[2],
                          V=-0.5 * asym[1], W=-0.5 * asym[2])


def compute_integrals(grid: LagrangianGrid) -> IntegralBundle:
    return _integrals(grid.fields, grid.dxi)


def _rhs(F, dxi):
    U, H, rb, sb = F[1], F[2], F[3], F[4]
    yx, Ux, Hx, rbx = F[6], F[7], F[8], F[9]
    P, Q, R, S, V, W = _integrals(F, dxi)
    SV = S + V
    RW = R + W
    out = np.empty_like(F)
    out[0] = U
    out[1] = -Q
    out[2] = U * U * U - 2.0 * P * U - 2.0 * rb * SV
    out[3] = -RW
    out[4] = -SV
    out[5] = rb
    out[6] = Ux
    out[7] = 0.5 * Hx + (0.5 * U * U - sb * sb - P) * yx
    # xi-derivative of the H equation; uses R_xi = V y_xi and
    # V_xi = -U_xi rbar + R y_xi, hence rbar (R + W)
    out[8] = ((3.0 * U * U - 2.0 * P + 2.0 * rb * rb) * Ux
              - 2.0 * (Q * U + rb * RW) * yx - 2.0 * SV * rbx)
    out[9] = sb * Ux - SV * yx
    out[10] = rbx
    return out


def rhs(grid: LagrangianGrid) -> np.ndarray:
    """Time derivative of every field, shape ``(11, N)`` in :data:`FIELDS` order."""
    return _rhs(grid.fields, grid.dxi)


def step(grid: LagrangianGrid, dt: float) -> LagrangianGrid:
    """One classical RK4 step of all fields (no projection onto the constraint).

    Raises :class:`SolverAbort` carrying ``grid`` if the result is not
    finite or ``max|U_xi|`` grows more than tenfold. The growth is measured
    against ``max(max|U_xi|, max (y_xi + H_xi) / 2)`` so that a state where
    the velocity vanishes identically (the instant of an antisymmetric collision)
    does not trip it.
    """
    F, h = grid.fields, grid.dxi
    try:
        with np.errstate(over="raise", invalid="raise"):
            k1 = _rhs(F, h)
            k2 = _rhs(F + 0.5 * dt * k1, h)
            k3 = _rhs(F + 0.5 * dt * k2, h)
            k4 = _rhs(F + dt * k3, h)
            new = F + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    except (FloatingPointError, ValueError) as exc:
        raise SolverAbort(f"step failed: {exc}", grid) from exc
    if not np.all(np.isfinite(new)):
        raise SolverAbort("non-finite fields", grid)
    ux_old = np.abs(F[_IX["U_xi"]]).max(initial=0.0)
    ux_new = np.abs(new[_IX["U_xi"]]).max(initial=0.0)
    # |U_xi| <= (y_xi + H_xi) / 2 on the constraint manifold; this bound
    # stays positive when U_xi passes through zero everywhere
    scale = 0.5 * (F[_IX["y_xi"]] + F[_IX["H_xi"]]).max(initial=0.0)
    if ux_new > GROWTH_LIMIT * max(ux_old, scale, 1e-12):
        raise SolverAbort(f"max|U_xi| grew from {ux_old:.3g} to {ux_new:.3g}",
                          grid)
    return grid.evolved(new, grid.t + dt)


def evolve(grid: LagrangianGrid, t_end: float, dt: float, observer=None,
           every: int = 1) -> LagrangianGrid:
    """Fixed-step RK4 from ``grid.t`` to ``t_end``.

    The step is shrunk slightly so that an integer number of steps lands on
    ``t_end``; times are computed as ``t0 + k h``. ``observer(grid)`` is
    called on the initial grid, every ``every`` steps and at the end.
    """
    t0 = grid.t
    span = t_end - t0
    nsteps = int(np.ceil(abs(span) / dt - 1e-9)) if span else 0
    h = span / nsteps if nsteps else 0.0
    if observer is not None:
        observer(grid)
    for k in range(1, nsteps + 1):
        grid = step(grid, h)
        grid = grid.evolved(grid.fields, t0 + k * h if k < nsteps else t_end)
        if observer is not None and (k % every == 0 or k == nsteps):
            observer(grid)
    return grid


def constraint_residual(grid: LagrangianGrid) -> float:
    """Max node-wise violation of ``y_xi H_xi = (U^2+rbar^2+sbar^2) y_xi^2 + U_xi^2``,
    scaled by ``max(1, max H_xi)``.
    """
    U, rb, sb = grid.U, grid.rbar, grid.sbar
    yx, Hx, Ux = grid.y_xi, grid.H_xi, grid.U_xi
    res = yx * Hx - (U * U + rb * rb + sb * sb) * yx * yx - Ux * Ux
    return float(np.abs(res).max() / max(1.0, np.abs(Hx).max()))


def _d(f, dxi):
    return np.gradient(f, dxi, edge_order=2)


def compute_r(grid: LagrangianGrid) -> np.ndarray:
    """Lagrangian density ``r = -sbar_xi + rbar y_xi`` (central differences).

    Conserved in time node by node; it is a spike at the peaks of a
    multipeakon and vanishes between them.
    """
    return -_d(grid.sbar, grid.dxi) + grid.rbar * grid.y_xi


def rbar_consistency(grid: LagrangianGrid) -> np.ndarray:
    """Residual ``d(rbar)/dxi - sbar y_xi`` with the derivative differenced."""
    return _d(grid.rbar, grid.dxi) - grid.sbar * grid.y_xi


def pointwise_invariant(grid: LagrangianGrid, mask_eps: float = MASK_EPS):
    """Node-wise conserved quantity ``(m o y) y_xi^2 + lam_xi r``.

    ``(m o y) y_xi^2 = U y_xi^2 - U_xixi + (y_xixi / y_xi) U_xi`` with the
    second derivatives taken by central differences of the evolved
    derivative fields. Nodes with ``y_xi < mask_eps`` are returned as NaN.
    """
    h = grid.dxi
    yx, Ux = grid.y_xi, grid.U_xi
    masked = yx < mask_eps
    with np.errstate(divide="ignore", invalid="ignore"):
        K = grid.U * yx * yx - _d(Ux, h) + _d(yx, h) / yx * Ux
    inv = K + grid.lam_xi * compute_r(grid)
    return np.where(masked, np.nan, inv)


def _kink_aware(f, slope, y, i, x, theta, inside, exact):
    """Interpolate ``f`` in cell ``[i-1, i]`` allowing one kink inside it.

    Both end nodes are extended with their own slope. Where the slope drops
    across the cell (a peak) the smaller extension is the better one on
    either side of the kink, where it rises (a trough) the larger one. For
    smooth data both extensions are second order, so the choice is harmless.
    Cells where a slope is not available fall back to linear interpolation.
    """
    left = f[i - 1] + (x - y[i - 1]) * slope[i - 1]
    right = f[i] - (y[i] - x) * slope[i]
    rec = np.where(slope[i - 1] > slope[i], np.minimum(left, right),
                   np.maximum(left, right))
    lin = (1.0 - theta) * f[i - 1] + theta * f[i]
    rec = np.where(np.isfinite(slope[i - 1]) & np.isfinite(slope[i]), rec, lin)
    rec = np.where(exact, f[i], rec)
    rec = np.where(x == y[0], f[0], rec)
    return np.where(inside, rec, 0.0)


def to_eulerian(grid: LagrangianGrid, x, mask_eps: float = MASK_EPS
                ) -> EulerianField:
    """Read ``u``, ``rho_bar``, ``rho_bar_x`` back at Eulerian points ``x``.

    Each ``x`` is matched to a label with ``y(xi) = x`` by binary search
    between nodes; on a plateau of ``y`` (collapsed interval) the leftmost
    node wins. Outside ``[y(xi_min), y(xi_max)]`` the fields are zero.

    ``u`` and ``rho_bar`` are reconstructed from the nodes with their slopes
    ``U_xi / y_xi`` and ``sbar`` so that a peak inside a cell keeps second
    order accuracy (see :func:`_kink_aware`); ``rho_bar_x`` and the energy
    density ``H_xi / y_xi`` are interpolated linearly. Slopes and the energy
    density are treated as unavailable where ``y_xi < mask_eps``, i.e. where
    energy is concentrated; there the density is NaN.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.maximum.accumulate(grid.y)
    i = np.searchsorted(y, x, side="left")
    inside = (x >= y[0]) & (x <= y[-1])
    i = np.clip(i, 1, y.size - 1)
    y0, y1 = y[i - 1], y[i]
    exact = y1 == x
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(exact | (y1 == y0), 1.0, (x - y0) / (y1 - y0))
    theta = np.where(x == y[0], 0.0, theta)

    def interp(f):
        return np.where(inside, (1.0 - theta) * f[i - 1] + theta * f[i], 0.0)

    ok = grid.y_xi >= mask_eps
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = np.where(ok, grid.H_xi / grid.y_xi, np.nan)
        ux = np.where(ok, grid.U_xi / grid.y_xi, np.nan)
    rx = np.where(ok, grid.sbar, np.nan)
    return EulerianField(
        x=x,
        u=_kink_aware(grid.U, ux, y, i, x, theta, inside, exact),
        rho_bar=_kink_aware(grid.rbar, rx, y, i, x, theta, inside, exact),
        rho_bar_x=interp(grid.sbar),
        energy_density=interp(dens),
    )


def peak_value(grid: LagrangianGrid, name: str, xi0: float) -> float:
    """Value of a field at label ``xi0`` that may sit on a kink.

    On a node the node value is returned. Otherwise the two neighbouring
    nodes are extrapolated to ``xi0`` with their own derivative field and
    averaged, which stays second order across a kink.
    """
    f = getattr(grid, name)
    h = grid.dxi
    pos = (xi0 - grid.xi[0]) / h
    j = int(np.floor(pos + 1e-9))
    if abs(pos - round(pos)) < 1e-9:
        return float(f[int(round(pos))])
    if name not in _DERIV_OF:
        frac = pos - j
        return float((1 - frac) * f[j] + frac * f[j + 1])
    df = getattr(grid, _DERIV_OF[name])
    left = f[j] + (xi0 - grid.xi[j]) * df[j]
    right = f[j + 1] - (grid.xi[j + 1] - xi0) * df[j + 1]
    return float(0.5 * (left + right))


def off_peak_mask(grid: LagrangianGrid, xi_peaks) -> np.ndarray:
    """True at nodes whose three-point stencil does not touch a kink."""
    xi_peaks = np.atleast_1d(np.asarray(xi_peaks, dtype=float))
    if xi_peaks.size == 0:
        return np.ones(grid.n, dtype=bool)
    dist = np.abs(grid.xi[:, None] - xi_peaks[None, :]).min(axis=1)
    keep = dist > grid.dxi * (1.0 + 1e-9)
    keep[[0, -1]] = False
    return keep
