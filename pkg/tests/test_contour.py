import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sblattice import contour
from sblattice.contour import Arc, Line, Path, adaptive_quad, build_cuts, continue_y, integrate
from sblattice.curve import validate_spec, y_on_sheet
from sblattice.errors import IntersectingCuts


def _circle(center, radius):
    return Path((Arc(center, radius, 0.0, 2 * np.pi),))


def _holo(z, y):
    return (1.0 / y)[None, :]


def test_default_cuts_pair_consecutive_points():
    spec = validate_spec([4, 3, 2, 1])
    assert build_cuts(spec) == [(1, 2), (3, 4)]


def test_crossing_pairing_is_rejected():
    spec = validate_spec([1, 2, 3, 4], pairing=[(1, 3), (2, 4)])
    with pytest.raises(IntersectingCuts):
        build_cuts(spec)


@pytest.mark.parametrize(
    "center, radius, flips",
    [
        (1.0, 0.3, True),  # one branch point
        (1.5, 0.8, False),  # a whole cut
        (5.0, 0.5, False),  # nothing
        (2.5, 2.0, False),  # all four
    ],
)
def test_monodromy_of_y(center, radius, flips):
    spec = validate_spec([1, 2, 3, 4])
    path = _circle(center, radius)
    y0 = y_on_sheet(spec, path.start, 1)
    _, ys = continue_y(spec, path, y0)
    assert ys[-1] == pytest.approx(-y0 if flips else y0, rel=1e-12)


def test_contour_integral_of_dz_over_z():
    spec = validate_spec([1, 2, 3, 4])
    val, _ = integrate(spec, _circle(0j, 0.5), lambda z, y: (1.0 / z)[None, :])
    assert abs(val[0] - 2j * np.pi) <= 1e-12


def test_reversal_negates_and_concatenation_adds():
    spec = validate_spec([1, 2, 3, 4])
    a, m, b = 0.5 + 1j, 2.5 + 1.5j, 5 + 1j
    whole = Path((Line(a, m, -1), Line(m, b, -1)))
    v, _ = integrate(spec, whole, _holo)
    v1, _ = integrate(spec, Path((Line(a, m, -1),)), _holo)
    v2, _ = integrate(spec, Path((Line(m, b, -1),)), _holo)
    vr, _ = integrate(spec, whole.reversed(), _holo)
    # quadrature tolerance is 1e-12
    assert abs(v - (v1 + v2))[0] <= 1e-12
    assert abs(v + vr)[0] <= 1e-12


def test_cut_free_loop_integrates_to_zero():
    spec = validate_spec([1, 2, 3, 4])
    val, _ = integrate(spec, _circle(5.0, 0.5), _holo)
    assert abs(val[0]) <= 1e-13


def test_a_cycle_encircles_its_cut_only():
    spec = validate_spec([1, 2, 3, 4, 5, 6])
    geom = contour.make_geometry(spec)
    for j, (a, b) in enumerate(geom.cuts[: spec.genus]):
        cyc = contour.a_cycle(geom, j)
        z, _ = contour.continue_y(spec, cyc, y_on_sheet(spec, cyc.start, 1))
        assert np.min(np.abs(z[:, None] - np.array(spec.branch_points)[None, :])) >= geom.margin * 0.99


@settings(max_examples=20, deadline=None)
@given(k=st.integers(0, 6), w=st.floats(0.5, 20.0))
def test_halving_tolerance_stays_within_error_estimate(k, w):
    def f(s):
        return np.exp(1j * w * s)[None, :] * s[None, :] ** k

    v1, e1 = adaptive_quad(f, 1e-8)
    v2, _ = adaptive_quad(f, 5e-9)
    assert abs(v1 - v2)[0] <= e1 + 1e-15
