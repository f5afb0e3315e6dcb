import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from sblattice.errors import NonconvergentTau
from sblattice.periods import (
    ThetaParams,
    compute_periods,
    normalization_residual,
    reduce_argument,
    tail_bound,
    theta,
    theta_log,
)

TAU2 = np.array([[1.2 + 0.9j, 0.3 + 0.2j], [0.3 + 0.2j, 1.1 + 1.3j]])

_coord = st.floats(-1.0, 1.0)


def _vec(draw_re, draw_im):
    return np.array(draw_re) + 1j * np.array(draw_im)


@pytest.fixture(scope="module")
def periods1(genus1_spec):
    return compute_periods(genus1_spec)


@pytest.fixture(scope="module")
def periods2(genus2_spec):
    return compute_periods(genus2_spec)


def test_genus1_tau_matches_agm_oracle(periods1):
    tau = periods1.tau[0, 0]
    assert abs(tau - oracles.TAU_GENUS1) <= 1e-8


@pytest.mark.parametrize("which", ["periods1", "periods2"])
def test_normalisation_and_riemann_relations(which, request):
    per = request.getfixturevalue(which)
    assert normalization_residual(per) <= 1e-10
    assert per.tau_asymmetry <= 1e-9
    assert np.linalg.eigvalsh(per.tau.imag)[0] > 0


def test_genus2_period_matrix_is_symmetric(periods2):
    assert np.array_equal(periods2.tau, periods2.tau.T)
    assert periods2.tau.shape == (2, 2)


def test_theta_at_origin_tau_i():
    assert abs(theta(np.array([0j]), ThetaParams(np.array([[1j]]))) - oracles.THETA_0_I) <= 1e-12


@pytest.mark.parametrize("z", [0.1 + 0.05j, -0.4 + 0.3j, 0.25 - 0.2j])
def test_theta_against_direct_sum(z):
    tau = np.array([[0.3 + 1.1j]])
    assert abs(theta(np.array([z]), ThetaParams(tau)) - oracles.theta_direct(z, tau)) <= 1e-13


def test_genus2_theta_against_direct_sum():
    z = np.array([0.1 - 0.1j, -0.2 + 0.15j])
    ref = oracles.theta_direct(z, TAU2, N=15)
    assert abs(theta(z, ThetaParams(TAU2)) - ref) <= 1e-13 * abs(ref)


def test_non_positive_imaginary_part_rejected():
    with pytest.raises(NonconvergentTau):
        ThetaParams(np.array([[0.5 - 0.1j]]))


def test_truncation_tail_below_tolerance():
    params = ThetaParams(TAU2, tol=1e-14)
    assert tail_bound(params) <= 1e-14


@settings(max_examples=40, deadline=None)
@given(re=st.lists(_coord, min_size=2, max_size=2), im=st.lists(_coord, min_size=2, max_size=2))
def test_parity(re, im):
    z = _vec(re, im)
    params = ThetaParams(TAU2)
    a, b = theta(z, params), theta(-z, params)
    assert abs(a - b) <= 1e-14 * max(abs(a), 1.0)


@settings(max_examples=40, deadline=None)
@given(
    re=st.lists(_coord, min_size=2, max_size=2),
    im=st.lists(_coord, min_size=2, max_size=2),
    m=st.lists(st.integers(-3, 3), min_size=2, max_size=2),
)
def test_integer_shift_invariance(re, im, m):
    z = _vec(re, im)
    params = ThetaParams(TAU2)
    a, b = theta(z, params), theta(z + np.array(m), params)
    assert abs(a - b) <= 1e-13 * max(abs(a), 1.0)


@settings(max_examples=40, deadline=None)
@given(
    re=st.lists(_coord, min_size=2, max_size=2),
    im=st.lists(_coord, min_size=2, max_size=2),
    m=st.lists(st.integers(-2, 2), min_size=2, max_size=2),
    n=st.lists(st.integers(-2, 2), min_size=2, max_size=2),
)
def test_quasi_periodicity_factor(re, im, m, n):
    # compare in the log-factor representation, where the factor is exact
    z = _vec(re, im)
    m, n = np.array(m, float), np.array(n, float)
    params = ThetaParams(TAU2)
    expo = -2j * np.pi * (n @ z) - 1j * np.pi * (n @ TAU2 @ n)
    l1, v1 = theta_log(z + m + TAU2 @ n, params)
    l0, v0 = theta_log(z, params)
    assert abs(np.exp(l1 - l0 - expo) * v1 - v0) <= 1e-12 * abs(v0)


def test_reduction_recovers_argument():
    z = np.array([[3.3 + 2.7j, -1.2 - 4.1j]])
    zr, m, n = reduce_argument(z, TAU2)
    assert np.allclose(zr + m + n @ TAU2.T, z, atol=1e-13)
    y = np.linalg.solve(TAU2.imag, zr.imag.T).T
    assert np.all(np.abs(y) <= 0.5 + 1e-12)
    assert np.all(np.abs(zr.real) <= 0.5 + 1e-12)
