import math

import numpy as np
import pytest

from m2ch import lagrangian as lg
from m2ch import peakons as pk
from m2ch.core import PeakonState, eval_u, total_energy
from m2ch.kernel import kernel_direct

from conftest import antisym_state


def gaussian_grid(n, L=15.0, amp_rho=0.5):
    xi = np.linspace(-L, L, n)
    return lg.init_from_eulerian(
        xi,
        u=lambda x: np.exp(-x * x),
        u_x=lambda x: -2 * x * np.exp(-x * x),
        rho_bar=lambda x: amp_rho * np.exp(-(x - 0.5) ** 2),
        rho_bar_x=lambda x: -2 * amp_rho * (x - 0.5) * np.exp(-(x - 0.5) ** 2),
    )


def peakon_grid(state, n=2048, align="midpoint"):
    return lg.init_from_peakons(state, lg.peakon_gridspec(state.q, n, align=align))


# -------------------------------------------------------------- init

def test_init_zero_state():
    g = peakon_grid(PeakonState.empty(), n=256)
    assert np.array_equal(g.y, g.xi)
    assert not np.any(g.fields[1:6]) and not np.any(g.fields[7:])
    assert lg.constraint_residual(g) == 0.0


def test_init_single_peakon_energy():
    g = peakon_grid(PeakonState(q=[0.0], p=[1.0]))
    assert g.energy() == pytest.approx(2.0, abs=2e-4)
    # second-order quadrature of the energy
    g2 = peakon_grid(PeakonState(q=[0.0], p=[1.0]), n=4096)
    assert abs(g2.energy() - 2.0) < abs(g.energy() - 2.0) / 3.5


def test_init_antisym_energy():
    _, st = antisym_state(0.5, -3.0)
    assert total_energy(st) == pytest.approx(0.5, rel=1e-14)
    assert peakon_grid(st).energy() == pytest.approx(1.0, abs=2e-4)


def test_init_margin_enforced():
    st = PeakonState(q=[0.0], p=[1.0])
    with pytest.raises(ValueError):
        lg.init_from_peakons(st, lg.GridSpec(-10.0, 30.0, 512))
    lg.init_from_peakons(st, lg.GridSpec(-20.0, 20.0, 513))


def test_init_satisfies_constraint():
    st = PeakonState(q=[-1.0, 0.7], p=[1.0, -0.3], s=[0.4, 0.2])
    g = peakon_grid(st, 1024)
    assert lg.constraint_residual(g) < 1e-15
    assert np.all(np.diff(g.H) >= 0)


@pytest.mark.parametrize("align", ["node", "midpoint"])
def test_gridspec_alignment(align):
    q = np.array([-1.3, 0.4, 2.9])
    gs = lg.peakon_gridspec(q, 1500, align=align)
    pos = (q - gs.xi_min) / gs.dxi
    frac = 0.5 if align == "midpoint" else 0.0
    for k in (0, -1):
        assert abs((pos[k] - frac) - round(pos[k] - frac)) < 1e-9
    assert q[0] - gs.xi_min >= 20 - 1e-9 and gs.xi_max - q[-1] >= 20 - 1e-9


# -------------------------------------------------------------- integrals

def test_integrals_zero():
    g = lg.init_from_eulerian(np.linspace(-3, 3, 64), *(np.zeros_like,) * 4)
    assert all(not np.any(a) for a in lg.compute_integrals(g))


def test_integrals_match_direct_sums():
    g = gaussian_grid(301)
    ib = lg.compute_integrals(g)
    wP = g.H_xi + (g.U**2 - 2 * g.sbar**2) * g.y_xi
    sym, asym = kernel_direct(g.y, wP, g.dxi)
    assert np.allclose(ib.P, 0.25 * sym, atol=1e-14)
    assert np.allclose(ib.Q, -0.25 * asym, atol=1e-14)
    sym, asym = kernel_direct(g.y, g.U_xi * g.rbar, g.dxi)
    assert np.allclose(ib.R, 0.5 * sym, atol=1e-14)
    assert np.allclose(ib.V, -0.5 * asym, atol=1e-14)
    sym, asym = kernel_direct(g.y, g.U_xi * g.sbar, g.dxi)
    assert np.allclose(ib.S, 0.5 * sym, atol=1e-14)
    assert np.allclose(ib.W, -0.5 * asym, atol=1e-14)


def test_integral_identities_converge():
    errs = []
    for n in (401, 801, 1601):
        g = gaussian_grid(n)
        ib = lg.compute_integrals(g)
        d = lambda f: np.gradient(f, g.dxi)
        inner = slice(2, -2)
        errs.append(max(
            np.abs(d(ib.P) - ib.Q * g.y_xi)[inner].max(),
            np.abs(d(ib.R) - ib.V * g.y_xi)[inner].max(),
            np.abs(d(ib.S) - ib.W * g.y_xi)[inner].max(),
            np.abs(d(ib.Q) + 0.5 * g.H_xi + (0.5 * g.U**2 - g.sbar**2 - ib.P) * g.y_xi)[inner].max(),
        ))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_q_xi_identity_single_peakon():
    g = peakon_grid(PeakonState(q=[0.0], p=[1.0]), 2048)
    ib = lg.compute_integrals(g)
    res = np.gradient(ib.Q, g.dxi) + 0.5 * g.H_xi + (0.5 * g.U**2 - g.sbar**2 - ib.P) * g.y_xi
    mask = lg.off_peak_mask(g, [0.0])
    assert np.abs(res[mask]).max() < 10 * g.dxi**2


def test_p_positive():
    ib = lg.compute_integrals(gaussian_grid(201, amp_rho=0.2))
    assert np.all(ib.P > 0)


# -------------------------------------------------------------- rhs

def test_rhs_zero_state():
    g = lg.init_from_eulerian(np.linspace(-3, 3, 64), *(np.zeros_like,) * 4)
    assert not np.any(lg.rhs(g))


def test_rhs_without_density_is_camassa_holm():
    g = peakon_grid(PeakonState(q=[0.0], p=[1.0]), 512)
    d = lg.rhs(g)
    ix = {k: i for i, k in enumerate(lg.FIELDS)}
    for k in ("rbar", "sbar", "lam", "rbar_xi", "lam_xi"):
        assert not np.any(d[ix[k]])
    # separately coded CH Lagrangian right-hand side with direct sums
    wP = g.H_xi + g.U**2 * g.y_xi
    sym, asym = kernel_direct(g.y, wP, g.dxi)
    P, Q = 0.25 * sym, -0.25 * asym
    assert np.allclose(d[ix["U"]], -Q, atol=1e-14)
    assert np.allclose(d[ix["H"]], g.U**3 - 2 * P * g.U, atol=1e-14)
    assert np.allclose(d[ix["U_xi"]], 0.5 * g.H_xi + (0.5 * g.U**2 - P) * g.y_xi, atol=1e-14)
    assert np.allclose(d[ix["H_xi"]], (3 * g.U**2 - 2 * P) * g.U_xi - 2 * Q * g.U * g.y_xi,
                       atol=1e-13)


def test_rhs_keeps_constraint_pointwise():
    # d/dt [y_xi H_xi - (U^2 + rbar^2 + sbar^2) y_xi^2 - U_xi^2] = 0 at every node
    g = gaussian_grid(257)
    d = lg.rhs(g)
    ix = {k: i for i, k in enumerate(lg.FIELDS)}
    U, rb, sb, yx, Ux, Hx = g.U, g.rbar, g.sbar, g.y_xi, g.U_xi, g.H_xi
    rate = (d[ix["y_xi"]] * Hx + yx * d[ix["H_xi"]]
            - 2 * (U * d[ix["U"]] + rb * d[ix["rbar"]] + sb * d[ix["sbar"]]) * yx**2
            - 2 * (U**2 + rb**2 + sb**2) * yx * d[ix["y_xi"]]
            - 2 * Ux * d[ix["U_xi"]])
    assert np.abs(rate).max() < 1e-13


def test_rhs_velocity_matches_peakon_dynamics():
    # U_t = -Q at a peak label must equal d/dt u(t, q_1(t)) from the peakon ODEs
    _, st = antisym_state(0.5, -1.5)
    g = peakon_grid(st, 4096)
    dq = pk.rhs(st)
    i = 0
    rate = sum((dq.dp[j] - st.p[j] * np.sign(st.q[i] - st.q[j]) * (dq.dq[i] - dq.dq[j]))
               * math.exp(-abs(st.q[i] - st.q[j])) for j in range(2))
    ib = lg.compute_integrals(g)
    k = int(np.floor((st.q[i] - g.xi[0]) / g.dxi))
    minus_q = -0.5 * (ib.Q[k] + ib.Q[k + 1])
    assert minus_q == pytest.approx(rate, abs=20 * g.dxi**2)


# -------------------------------------------------------------- step / evolve

def test_step_zero_state():
    g = lg.init_from_eulerian(np.linspace(-3, 3, 64), *(np.zeros_like,) * 4)
    g1 = lg.step(g, 0.1)
    assert np.array_equal(g1.fields[1:], g.fields[1:]) and g1.t == 0.1


def test_step_free_peakon_translation():
    g = peakon_grid(PeakonState(q=[0.0], p=[1.0]), 2048)
    for _ in range(100):
        g = lg.step(g, 0.01)
    assert lg.peak_value(g, "y", 0.0) == pytest.approx(1.0, abs=1e-4)


def test_step_returns_new_value():
    g = gaussian_grid(65)
    before = g.fields.copy()
    g1 = lg.step(g, 0.01)
    assert np.array_equal(g.fields, before) and g1 is not g
    assert not g1.fields.flags.writeable


def test_step_aborts_on_nan():
    g = gaussian_grid(65)
    f = g.fields.copy()
    f[1, 10] = np.nan
    bad = g.evolved(f, 0.0)
    with pytest.raises(lg.SolverAbort) as exc:
        lg.step(bad, 0.01)
    assert exc.value.grid is bad


def test_step_aborts_on_blowup():
    g = gaussian_grid(65)
    with pytest.raises(lg.SolverAbort) as exc:
        lg.step(g, 1e3)
    assert exc.value.grid is g


def test_evolve_lands_on_end_time_and_observes():
    g = gaussian_grid(65)
    seen = []
    out = lg.evolve(g, 0.1, 0.03, seen.append)
    assert out.t == 0.1 and seen[0] is g and seen[-1] is out and len(seen) == 5


def test_evolve_backward():
    g = gaussian_grid(129)
    back = lg.evolve(lg.evolve(g, 0.2, 0.01), 0.0, 0.01)
    assert np.abs(back.fields - g.fields).max() < 1e-7


# -------------------------------------------------------------- diagnostics

def test_constraint_sensitivity():
    g = peakon_grid(PeakonState(q=[0.0], p=[1.0]), 512)
    f = g.fields.copy()
    j = 100
    ux = f[7, j]
    f[7, j] += 1e-3
    res = lg.constraint_residual(g.evolved(f, 0.0))
    assert res >= 1e-3 * abs(2 * ux) / max(1.0, np.abs(g.H_xi).max())


def test_r_vanishes_without_density():
    g = peakon_grid(PeakonState(q=[-1.0, 1.0], p=[1.0, 0.5]), 512)
    assert not np.any(lg.compute_r(g))
    g = lg.evolve(g, 1.0, 1e-2)
    assert not np.any(lg.compute_r(g))


def test_r_is_a_spike_for_a_density_peak():
    st = PeakonState(q=[0.0], p=[0.0], s=[1.0])
    g = peakon_grid(st, 2048)
    r = lg.compute_r(g)
    mask = lg.off_peak_mask(g, [0.0])
    assert np.abs(r[mask]).max() < 10 * g.dxi**2
    assert r.sum() * g.dxi == pytest.approx(2.0, abs=1e-3)


def test_r_conserved_double_peakon():
    st = PeakonState(q=[-1.0, 1.0], p=[1.0, 0.5], s=[0.4, 0.3])
    g = peakon_grid(st, 2048)
    r0 = lg.compute_r(g)
    mask = lg.off_peak_mask(g, st.q)
    worst = 0.0
    for _ in range(10):
        g = lg.evolve(g, g.t + 0.1, 1e-2)
        worst = max(worst, np.abs(lg.compute_r(g) - r0)[mask].max())
    assert worst <= 1e-8 + 10 * g.dxi**2


def test_r_drift_converges_under_refinement():
    # behind the faster peak the grid is stretched sevenfold by t = 2, so the
    # drift next to the kink is large but still shrinks with the cell size
    st = PeakonState(q=[-1.0, 1.0], p=[1.0, 0.5], s=[0.4, 0.3])
    errs = []
    for n in (1024, 2048, 4096):
        g = peakon_grid(st, n)
        r0 = lg.compute_r(g)
        far = np.min(np.abs(g.xi[:, None] - st.q[None, :]), axis=1) >= 0.2
        g = lg.evolve(g, 2.0, 1e-2)
        errs.append(np.abs(lg.compute_r(g) - r0)[far].max())
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_rbar_consistency_second_order():
    errs = []
    for n in (201, 401, 801):
        g = lg.evolve(gaussian_grid(n), 0.5, 0.02)
        errs.append(np.abs(lg.rbar_consistency(g)[1:-1]).max())
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_invariant_masks_collapsed_nodes():
    g = gaussian_grid(65)
    f = g.fields.copy()
    f[6, 30] = 1e-8
    I = lg.pointwise_invariant(g.evolved(f, 0.0))
    assert np.isnan(I[30]) and np.isfinite(I[29])


def test_invariant_ch_peakon_off_peak():
    st = PeakonState(q=[0.0], p=[1.0])
    g = peakon_grid(st, 2048)
    far = np.abs(g.xi) >= 1.0
    for _ in range(4):
        g = lg.evolve(g, g.t + 0.25, 1e-2)
        I = lg.pointwise_invariant(g)
        assert np.nanmax(np.abs(I[far])) < 1e-3


def test_invariant_double_peakon_zero_off_peak():
    st = PeakonState(q=[-1.0, 1.0], p=[1.0, 0.5], s=[0.4, 0.3])
    g = peakon_grid(st, 2048)
    far = np.min(np.abs(g.xi[:, None] - st.q[None, :]), axis=1) >= 1.0
    I0 = lg.pointwise_invariant(g)
    assert np.abs(I0[far]).max() < 1e-3
    g = lg.evolve(g, 1.0, 1e-2)
    assert np.nanmax(np.abs(lg.pointwise_invariant(g)[far])) < 1e-3


def test_to_eulerian_identity_flow():
    g = gaussian_grid(101)
    ef = lg.to_eulerian(g, g.xi)
    assert np.array_equal(ef.u, g.U)
    assert np.array_equal(ef.rho_bar, g.rbar)
    assert np.array_equal(ef.rho_bar_x, g.sbar)


def test_to_eulerian_outside_is_zero():
    g = gaussian_grid(101)
    ef = lg.to_eulerian(g, [-100.0, 100.0])
    assert not np.any(ef.u) and not np.any(ef.rho_bar)


def test_to_eulerian_plateau_takes_leftmost():
    g = gaussian_grid(11, L=5.0)
    f = g.fields.copy()
    f[0, 4:7] = f[0, 4]
    ef = lg.to_eulerian(g.evolved(f, 0.0), [f[0, 4]])
    assert ef.u[0] == f[1, 4]


def _peakon_readback_error(n):
    g = lg.evolve(peakon_grid(PeakonState(q=[0.0], p=[1.0]), n), 1.0, 1e-2)
    x = np.linspace(-5, 7, 2401)
    return np.abs(lg.to_eulerian(g, x).u - np.exp(-np.abs(x - 1))).max()


def test_to_eulerian_peakon_converges():
    e1, e2 = _peakon_readback_error(1024), _peakon_readback_error(2048)
    assert e1 / e2 > 3.5
    assert _peakon_readback_error(4096) < 1e-4


@pytest.mark.xfail(reason="solver error next to the kink is O(dxi^2) ~ 3e-4 at N=2048 "
                          "with the required 20-unit margins; 1e-4 is reached at N=4096",
                   strict=True)
def test_to_eulerian_peakon_example_at_2048():
    assert _peakon_readback_error(2048) < 1e-4


def test_peak_value_on_node_and_between():
    g = gaussian_grid(101, L=5.0)
    assert lg.peak_value(g, "U", g.xi[40]) == g.U[40]
    mid = 0.5 * (g.xi[40] + g.xi[41])
    assert lg.peak_value(g, "U", mid) == pytest.approx(math.exp(-mid * mid), abs=1e-3)
    assert lg.peak_value(g, "sbar", mid) == pytest.approx(0.5 * (g.sbar[40] + g.sbar[41]))


def test_off_peak_mask():
    g = gaussian_grid(11, L=5.0)
    m = lg.off_peak_mask(g, [0.5])
    assert list(np.flatnonzero(~m)) == [0, 5, 6, 10]
