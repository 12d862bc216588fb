import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from m2ch.core import (PeakonState, eval_derivatives, eval_rho_bar, eval_u,
                       sample, total_energy)


def test_eval_u_examples():
    one = PeakonState(q=[0.0], p=[1.0])
    assert eval_u(one, 0.0) == 1.0
    assert eval_u(PeakonState.empty(), 1.7) == 0.0
    assert eval_u(one, 1.0) == pytest.approx(0.3678794, abs=1e-7)


def test_eval_rho_bar_examples():
    pair = PeakonState(q=[-1.0, 1.0], p=[0.0, 0.0], s=[1.0, -1.0])
    assert eval_rho_bar(pair, 0.0) == 0.0
    one = PeakonState(q=[2.0], p=[0.0], s=[0.5])
    assert eval_rho_bar(one, 2.0) == 0.5
    assert eval_rho_bar(one, 0.0) == pytest.approx(0.0676676, abs=1e-7)


def test_eval_derivatives_examples():
    one = PeakonState(q=[0.0], p=[1.0])
    assert eval_derivatives(one, 0.0)[0] == 0.0
    assert eval_derivatives(one, 1.0)[0] == pytest.approx(-math.exp(-1), rel=1e-15)
    assert eval_derivatives(PeakonState.empty(), 0.3) == (0.0, 0.0)


def test_total_energy_examples():
    assert total_energy(PeakonState(q=[0.0], p=[1.0])) == 1.0
    assert total_energy(PeakonState(q=[0.0, math.log(2)], p=[1.0, 1.0])) == pytest.approx(3.0, rel=1e-15)
    q1, q2, p1, p2, s1, s2 = -0.3, 1.1, 0.7, -0.2, 0.4, 0.9
    ref = p1**2 + p2**2 + s1**2 + s2**2 + 2 * (p1 * p2 + s1 * s2) * math.exp(q1 - q2)
    assert total_energy(PeakonState(q=[q1, q2], p=[p1, p2], s=[s1, s2])) == pytest.approx(ref, rel=1e-15)


def test_state_validation():
    with pytest.raises(ValueError):
        PeakonState(q=[1.0, 1.0], p=[0.0, 0.0])
    with pytest.raises(ValueError):
        PeakonState(q=[0.0, 1.0], p=[0.0])
    with pytest.raises(ValueError):
        PeakonState(q=[np.nan], p=[0.0])
    raw = PeakonState(q=[1.0, 1.0], p=[0.0, 0.0], validate=False)
    assert raw.n == 2
    st_ = PeakonState(q=[0.0], p=[1.0])
    with pytest.raises(ValueError):
        st_.q[0] = 3.0


def test_sample_matches_evaluators():
    st_ = PeakonState(q=[-1.0, 0.5], p=[1.0, -0.4], s=[0.2, 0.3])
    smp = sample(st_, 0.1)
    ux, rx = eval_derivatives(st_, 0.1)
    assert (smp.u, smp.u_x, smp.rho_bar, smp.rho_bar_x) == (
        eval_u(st_, 0.1), ux, eval_rho_bar(st_, 0.1), rx)


def test_vectorized_evaluation():
    st_ = PeakonState(q=[-1.0, 0.5], p=[1.0, -0.4], s=[0.2, 0.3])
    x = np.linspace(-3, 3, 7)
    assert np.allclose(eval_u(st_, x), [eval_u(st_, xx) for xx in x], rtol=1e-15, atol=1e-16)


states = st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-4, 4), min_size=n, max_size=n, unique=True),
    st.lists(st.floats(-2, 2), min_size=n, max_size=n),
    st.lists(st.floats(-2, 2), min_size=n, max_size=n),
)).filter(lambda t: len(t[0]) < 2 or np.diff(np.sort(t[0])).min() > 1e-3)


def _energy_quadrature(state):
    """Half the integral of u^2 + u_x^2 + rbar^2 + rbar_x^2, piece by piece."""
    def f(x):
        ux, rx = eval_derivatives(state, x)
        return float(eval_u(state, x) ** 2 + ux**2 + eval_rho_bar(state, x) ** 2 + rx**2)
    pts = [-np.inf, *state.q, np.inf]
    total = sum(quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
                for a, b in zip(pts[:-1], pts[1:]))
    return 0.5 * total


@settings(max_examples=40, deadline=None)
@given(states)
def test_energy_equals_field_integral(data):
    q, p, s = data
    order = np.argsort(q)
    state = PeakonState(q=np.array(q)[order], p=np.array(p)[order], s=np.array(s)[order])
    E = total_energy(state)
    assert E == pytest.approx(_energy_quadrature(state), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(states, st.floats(-5, 5))
def test_fields_linear_in_amplitudes(data, x):
    q, p, s = data
    order = np.argsort(q)
    q, p, s = (np.array(a)[order] for a in (q, p, s))
    a = PeakonState(q=q, p=p, s=s)
    b = PeakonState(q=q, p=2 * p, s=-s)
    assert eval_u(b, x) == pytest.approx(2 * eval_u(a, x), abs=1e-14)
    assert eval_rho_bar(b, x) == pytest.approx(-eval_rho_bar(a, x), abs=1e-14)
    assert total_energy(a) >= -1e-12
