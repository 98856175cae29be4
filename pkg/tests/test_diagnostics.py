"""Geometric certificates on converged solutions: endpoint constants, cone
monitoring, Kaehler detection, eigenvalue gaps, characteristic-number
quadratures, ratio extremum checks, and the finite-difference curvature
cross-check.
"""

import numpy as np
import pytest

from c1einstein.diagnostics import (ConeSpec, characteristic_numbers,
                                    cone_monitor, eigen_gap_report,
                                    fd_curvature_oracle, invariant_constants,
                                    kahler_detector, max_principle_check)
from c1einstein.germs import get_diagram
from c1einstein.oracles import oracle
from c1einstein.presets import initial_guess
from c1einstein.shooting import ShootingProblem, solve

S3 = np.sqrt(3.0)


# ---------------------------------------------------------------------------
# endpoint constants
# ---------------------------------------------------------------------------

def test_constants_round_quotient(solutions):
    c = invariant_constants(solutions("so3_s4"))
    assert c.alpha == pytest.approx(36.0, abs=1e-8)
    assert c.beta is None and c.delta is None and c.theta_k is None
    assert c.as_dict() == {"alpha": c.alpha}


def test_constants_conic_cases(solutions):
    assert invariant_constants(solutions("su2_cp2")).beta == pytest.approx(6.0, abs=1e-8)
    c = invariant_constants(solutions("so3_cp2"))
    assert c.beta == pytest.approx(12.0, abs=1e-8)
    assert c.alpha is None and c.delta is None


def test_constants_product(solutions):
    c = invariant_constants(solutions("so3_s2xs2"))
    assert c.delta == pytest.approx(0.0, abs=1e-8)


def test_constants_orbifold(solutions):
    c = invariant_constants(solutions("so3_hitchin", 2))
    assert c.alpha == pytest.approx(12.0, abs=1e-7)
    assert c.beta == pytest.approx(24.0, abs=1e-7)
    assert c.theta_k == 8.0
    assert c.beta > c.theta_k


def test_constants_undefined_for_doubly_smooth_diagram(solutions):
    with pytest.raises(ValueError):
        invariant_constants(solutions("su2_s4"))


def test_constants_scale_invariant():
    # re-solve the quotient sphere in a different normalization; alpha must
    # not move.  unknowns scale as (s h, c, s h, c, s T) with s = sqrt(3/lam)
    lam = 1.5
    s = np.sqrt(3.0 / lam)
    pr = ShootingProblem(get_diagram("so3_s4"), lam=lam)
    g = initial_guess("so3_s4") * np.array([s, 1, s, 1, s])
    sr = solve(pr, g)
    assert invariant_constants(sr).alpha == pytest.approx(36.0, abs=1e-8)


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

def test_cone_spec_validation():
    with pytest.raises(ValueError):
        ConeSpec("C", ("+", "-", "-"))
    with pytest.raises(ValueError):
        ConeSpec("A", ("free", "free", "free"))
    with pytest.raises(ValueError):
        ConeSpec("A", ("+", "-"))


def test_cone_holds_on_quotient_sphere(solutions):
    sr = solutions("so3_s4")
    rep = cone_monitor(sr, ConeSpec("A", ("+", "-", "-")))
    assert rep["satisfied"]
    assert rep["worst_margin"] > 0


def test_cone_negative_control(solutions):
    sr = solutions("so3_s4")
    rep = cone_monitor(sr, ConeSpec("A", ("-", "free", "free")))
    assert not rep["satisfied"]
    assert rep["worst_margin"] < 0


def test_cone_zero_entries_and_window(solutions):
    sr = solutions("so3_s2xs2")
    rep = cone_monitor(sr, ConeSpec("A", ("0", "0", "+")),
                       window=(0.05, sr.T - 0.05))
    assert rep["satisfied"]
    with pytest.raises(ValueError):
        cone_monitor(sr, ConeSpec("A", ("0", "0", "+")), window=(9.0, 10.0))


# ---------------------------------------------------------------------------
# Kaehler detection and eigenvalue gaps
# ---------------------------------------------------------------------------

def test_kahler_detector(solutions):
    assert kahler_detector(solutions("so3_cp2"))["is_kahler"]
    assert kahler_detector(solutions("su2_cp2"))["is_kahler"]
    assert kahler_detector(solutions("so3_s2xs2"))["is_kahler"]
    page = kahler_detector(solutions("su2_cp2bar"))
    assert not page["is_kahler"]
    assert min(page["sup_norms"]) > 1e-3


def test_eigen_gaps_round_vs_conic(solutions):
    round_rep = eigen_gap_report(solutions("su2_s4"))
    assert round_rep["a_spread"] < 1e-6
    assert round_rep["b_spread"] < 1e-6
    fs_rep = eigen_gap_report(solutions("su2_cp2"))
    assert fs_rep["a_spread"] < 1e-6       # half of the curvature stays round
    assert fs_rep["b_spread"] == pytest.approx(3.0, abs=1e-6)


# ---------------------------------------------------------------------------
# characteristic numbers
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("case_id,chi,tau", [
    ("su2_s4", 2.0, 0.0), ("so3_s4", 2.0, 0.0),
    ("su2_cp2", 3.0, 1.0), ("so3_cp2", 3.0, 1.0),
    ("su2_cp2bar", 4.0, 0.0), ("so3_s2xs2", 4.0, 0.0),
])
def test_characteristic_numbers(case_id, chi, tau, solutions):
    rep = characteristic_numbers(solutions(case_id))
    assert rep.chi == pytest.approx(chi, abs=2e-4)
    assert rep.tau == pytest.approx(tau, abs=2e-4)
    assert rep.node_doubling_change < 1e-8


def test_characteristic_numbers_unsupported_for_orbifolds(solutions):
    with pytest.raises(ValueError):
        characteristic_numbers(solutions("so3_hitchin", 2))


# ---------------------------------------------------------------------------
# ratio extrema
# ---------------------------------------------------------------------------

def test_max_principle_on_conic_solution(solutions):
    rep = max_principle_check(solutions("so3_cp2"))
    for pair, r in rep.items():
        assert r["eq_ok"], (pair, r["eq_residual"])
        assert r["sup"] <= 1e-6 or r["sup"] > 0  # well-defined either way


def test_ratio_bounds_on_conic_solution(solutions):
    # the profiles that collapse at either end never exceed the persisting one
    sr = solutions("so3_cp2")
    rep = max_principle_check(sr, pairs=((1, 2), (3, 2)))
    assert rep[(1, 2)]["nonpositive"]
    assert rep[(3, 2)]["nonpositive"]


def test_argmax_stable_under_resampling(solutions):
    sr = solutions("su2_cp2bar")
    r1 = max_principle_check(sr)
    r2 = max_principle_check(sr)
    for pair in r1:
        assert r1[pair]["argmax"] == r2[pair]["argmax"]


# ---------------------------------------------------------------------------
# finite-difference cross-check
# ---------------------------------------------------------------------------

def test_fd_oracle_matches_analytic_pipeline():
    prof = oracle("fs_su2", lam=3.0)
    from c1einstein import core
    t = 0.7
    L, R, _ = core.lr_from_frame(prof.f(t), prof.df(t))
    A, B = core.ab_coeffs(L, R)
    a_ref, b_ref = core.curv_eigs(R, A, B)
    errs = []
    for h in (1e-3, 5e-4):
        a, b, con = fd_curvature_oracle(lambda s: prof.f(s), t, h, 3.0)
        errs.append(max(np.max(np.abs(a - a_ref)), np.max(np.abs(b - b_ref))))
        assert abs(con) < 1e-5
    # centered differences: quartering the error when halving the step
    assert errs[1] < errs[0] / 3.0
    assert errs[1] < 1e-6


def test_fd_oracle_rejects_bad_step():
    prof = oracle("round_su2", lam=3.0)
    with pytest.raises(ValueError):
        fd_curvature_oracle(lambda s: prof.f(s), 1.0, 0.0, 3.0)
