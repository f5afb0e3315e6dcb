import numpy as np
import pytest

from sblattice.curve import validate_spec
from sblattice.errors import IllConditionedInterpolation
from sblattice.hierarchy import sorted_roots
from sblattice.solution import LatticeSolution, genus0_solution
from sblattice.verification import (
    check_transfer,
    full_report,
    generic_points,
    genus0_report,
    genus0_transfer_residual,
    is_unit_circle_symmetric,
    reconstruct_FGH,
)


@pytest.fixture(scope="module")
def genus1_report(genus1_state):
    return full_report(genus1_state, (-5, 5))


def test_genus1_report_passes(genus1_report):
    rep = genus1_report
    assert rep.passed
    for name, r in rep.residuals.items():
        if name == "quasiperiodicity":
            assert r.skipped
        else:
            assert not r.skipped and r.max <= 1e-6, name


def test_report_is_deterministic(genus1_state, genus1_report):
    again = full_report(genus1_state, (-5, 5))
    assert again.as_dict() == genus1_report.as_dict()


def test_unit_circle_report(unit_state):
    rep = full_report(unit_state, (-3, 3))
    assert rep.passed
    q = rep.residuals["quasiperiodicity"]
    assert not q.skipped and q.max <= 1e-6
    assert abs(rep.extras["re_growth_log"]) <= 1e-6


def test_genus2_report(genus2_state):
    assert full_report(genus2_state, (-3, 3), n_points=4, n_transfer_points=2).passed


def test_genus0_report():
    spec = validate_spec([1, 4])
    rep = genus0_report(spec, genus0_solution(1, 4))
    assert rep.passed
    for r in rep.residuals.values():
        assert r.max <= 1e-10


def _genus0_points(spec, count=5):
    rng = np.random.default_rng(3)
    from sblattice.curve import point

    return [point(spec, complex(rng.uniform(-3, 3), rng.uniform(0.5, 3)), 1 if k % 2 else -1) for k in range(count)]


def test_genus0_transfer_exact():
    spec = validate_spec([1, 4])
    sol = genus0_solution(1, 4)
    tr, ev = genus0_transfer_residual(spec, sol, _genus0_points(spec), (-5, 5))
    assert max(tr) <= 1e-12 and max(ev) <= 1e-12


def test_corrupted_alpha_is_detected():
    spec = validate_spec([1, 4])
    sol = genus0_solution(1, 4)
    a = sol.alpha.copy()
    a[sol.sites.tolist().index(2)] *= 1 + 1e-3
    bad = LatticeSolution(sol.n0, sol.sites, a, sol.beta, sol.diagnostics)
    tr, ev = genus0_transfer_residual(spec, bad, _genus0_points(spec), (-5, 5))
    assert max(max(tr), max(ev)) >= 1e-4


def test_transfer_genus1(genus1_state):
    pts = generic_points(genus1_state.spec, 5, 9)
    tr, ev = check_transfer(genus1_state, pts, (-3, 3))
    assert max(tr) <= 1e-6 and max(ev) <= 1e-6


@pytest.mark.parametrize("name", ["genus1_state", "genus2_state"])
def test_reconstruction_round_trip(name, request):
    st = request.getfixturevalue(name)
    t = reconstruct_FGH(st, st.n0)
    roots = sorted_roots(t.F)
    given = sorted((P.z for P in st.mu_hat), key=lambda v: (v.real, v.imag))
    assert np.max(np.abs(roots - np.array(given))) <= 1e-7
    assert abs(t.H[0]) <= 1e-9
    R = st.spec.R_coefficients()
    assert np.max(np.abs(t.invariant() - R) / np.maximum(1, np.abs(R))) <= 1e-7


def test_ill_conditioned_reconstruction(genus1_state):
    with pytest.raises(IllConditionedInterpolation):
        reconstruct_FGH(genus1_state, 0, cond_limit=1.0)


def test_unit_circle_detection(unit_spec, genus1_spec):
    assert is_unit_circle_symmetric(unit_spec)
    assert not is_unit_circle_symmetric(genus1_spec)
