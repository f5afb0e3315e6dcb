import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sblattice.curve import (
    curve_residual,
    infinity,
    involute,
    p_zero,
    point,
    point_from_y,
    validate_spec,
    y_on_sheet,
)
from sblattice.errors import AtBranchPoint, DuplicateBranchPoint, OddCount, ZeroBranchPoint


def test_two_point_curve_g1():
    spec = validate_spec([4, 1])
    assert spec.genus == 0
    assert spec.branch_points == (1 + 0j, 4 + 0j)
    assert spec.g_top == pytest.approx(2.0)
    assert validate_spec([4, 1], g_sign=-1).g_top == pytest.approx(-2.0)


def test_value_of_y_squared():
    spec = validate_spec([1, 4])
    y = y_on_sheet(spec, 9.0, 1)
    assert y * y == pytest.approx(40.0, rel=1e-15)


def test_y_at_origin_is_g_top():
    spec = validate_spec([1, 2, 3, 4])
    assert abs(y_on_sheet(spec, 0.0, 1)) == pytest.approx(np.sqrt(24.0), rel=1e-15)
    P = p_zero(spec, 1)
    assert P.y == pytest.approx(spec.g_top)
    assert p_zero(spec, -1).y == pytest.approx(-spec.g_top)


def test_base_point_is_lexicographic_minimum():
    spec = validate_spec([2 + 1j, 2 - 1j, -1 + 5j, -1 - 5j])
    assert spec.base_point == -1 - 5j
    assert spec.branch_points[1] == -1 + 5j


@pytest.mark.parametrize(
    "pts, err",
    [
        ([1, 1, 2, 3], DuplicateBranchPoint),
        ([0, 1, 2, 3], ZeroBranchPoint),
        ([1, 2, 3], OddCount),
    ],
)
def test_invalid_branch_points(pts, err):
    with pytest.raises(err):
        validate_spec(pts)


def test_sheet_label_at_branch_point():
    spec = validate_spec([1, 2, 3, 4])
    with pytest.raises(AtBranchPoint):
        y_on_sheet(spec, 2.0, 1)
    P = point(spec, 2.0, -1)
    assert P.branch and P.y == 0


def test_sheet_convention_at_infinity():
    # on sheet +1, y / z^{p+1} -> -1
    spec = validate_spec([1, 2, 3, 4, 5, 6])
    z = 1e5 * np.exp(0.3j)
    expansion = -(1 - sum(spec.branch_points) / (2 * z))
    assert y_on_sheet(spec, z, 1) / z**3 == pytest.approx(expansion, abs=1e-8)


def test_infinity_points_swap_under_involution():
    assert involute(infinity(1)) == infinity(-1)


@settings(max_examples=50, deadline=None)
@given(
    x=st.floats(-6, 6),
    y=st.floats(-6, 6),
    sheet=st.sampled_from([1, -1]),
)
def test_points_lie_on_curve_and_involution_is_an_involution(x, y, sheet):
    spec = validate_spec([1, 2, 3, 4, 2 + 3j, 2 - 3j])
    z = complex(x, y)
    if min(abs(z - e) for e in spec.branch_points) < 1e-3:
        return
    P = point(spec, z, sheet)
    assert curve_residual(spec, P) <= 1e-14
    Q = involute(P)
    assert Q.y == -P.y and Q.sheet == -P.sheet
    assert involute(Q) == P
    assert point_from_y(spec, z, P.y) == P
