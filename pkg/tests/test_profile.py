import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srgrobust import profile as prof
from srgrobust.lti import StateSpaceSystem


@pytest.fixture(scope="module")
def low_pass_profile():
    sys = StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    return prof.compute_profile(sys, n_theta=4, n_gamma=8, err=1e-3)


@pytest.fixture(scope="module")
def lead_profile():
    sys = StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    return prof.compute_profile(sys, n_theta=4, n_gamma=6, err=1e-3)


# ---------------------------------------------------------------------------
# bracket refinement formulas
# ---------------------------------------------------------------------------


def test_refine_brackets_equal_gains():
    gamma = np.array([1.0, 1.0, 2.0])
    phi = np.array([0.8, 0.0, 0.0])
    lam = np.array([0.5, 0.0, 0.0])
    _, phi_wst = prof.refine_brackets(gamma, phi, lam, 1)
    assert phi_wst == pytest.approx(0.8)  # zeta = 1 keeps the previous angle


def test_refine_brackets_best_case_tangency():
    # gamma ratio 1: the corner disc already reaches the top circle
    gamma = np.array([1.0, 2.0, 2.0])
    phi = np.array([0.9, 0.0, 0.0])
    lam = np.array([0.7, 0.0, 0.0])
    phi_bst, _ = prof.refine_brackets(gamma, phi, lam, 2)
    assert phi_bst == pytest.approx(0.0, abs=1e-9)


def test_refine_brackets_quarter_angle_root():
    ratio = 1.0 + math.sqrt(2.0)
    gamma = np.array([0.5, 1.0, ratio])
    phi = np.array([1.2, 0.0, 0.0])
    lam = np.array([0.9, 0.0, 0.0])
    phi_bst, _ = prof.refine_brackets(gamma, phi, lam, 1)
    assert phi_bst == pytest.approx(math.pi / 4, abs=1e-9)


def test_refine_brackets_zero_weight_full_bracket():
    gamma = np.array([0.5, 1.0, 2.0])
    phi = np.array([1.0, 0.0, 0.0])
    lam = np.array([0.0, 0.0, 0.0])
    assert prof.refine_brackets(gamma, phi, lam, 1) == (0.0, math.pi / 2)


@settings(max_examples=200, deadline=None)
@given(
    g_prev=st.floats(0.05, 10.0),
    ratio=st.floats(1.0, 8.0),
    top=st.floats(1.0, 4.0),
    lam_prev=st.floats(0.01, 1.0),
    phi_prev=st.floats(0.0, math.pi / 2),
)
def test_refine_brackets_orders_and_amgm(g_prev, ratio, top, lam_prev, phi_prev):
    g_k = g_prev * ratio
    gamma = np.array([g_prev, g_k, g_k * top])
    phi = np.array([phi_prev, 0.0, 0.0])
    lam = np.array([lam_prev, 0.0, 0.0])
    phi_bst, phi_wst = prof.refine_brackets(gamma, phi, lam, 1)
    assert 0.0 <= phi_bst <= phi_wst + 1e-12
    # the gain-ratio factor is at least 1, so the bracket top never
    # exceeds the previous angle (except when clamped up to the lower end)
    assert phi_wst <= max(phi_prev, phi_bst) + 1e-9


# ---------------------------------------------------------------------------
# whole profiles on first-order plants
# ---------------------------------------------------------------------------


def test_low_pass_axis_slice_matches_analytic_cover(low_pass_profile):
    # union of D_gamma and the cone about 0 covers the circle through 0
    # and 1 iff the half-angle reaches arccos(gamma)
    s = low_pass_profile.slice_at(0.0)
    assert s.flag == prof.FLAG_REGULAR
    assert s.gamma[0] <= 2e-3                      # bisection floor near zero
    assert s.lam[0] == pytest.approx(1.0, abs=1e-3)  # pure half-plane weight
    for k in range(1, len(s.gamma) - 1):
        assert s.phi[k] == pytest.approx(math.acos(s.gamma[k]), abs=5e-3)
    assert s.phi[-1] == 0.0
    assert s.gamma[-1] == pytest.approx(1.0, abs=1e-5)


def test_low_pass_mirror_slice_degenerate(low_pass_profile):
    s = low_pass_profile.slice_at(math.pi)
    assert s.flag == prof.FLAG_DEGENERATE
    assert np.allclose(s.gamma, [0.0, s.gamma[-1], s.gamma[-1]])
    assert np.allclose(s.phi, [math.pi / 2, math.pi / 2, math.pi])
    assert s.gamma[-1] == pytest.approx(1.0, abs=1e-5)


def test_lead_axis_slice_is_conic(lead_profile):
    s = lead_profile.slice_at(0.0)
    assert s.flag == prof.FLAG_CONIC
    phi_star = math.asin(1.0 / 3.0)
    assert s.phi[0] == pytest.approx(phi_star, abs=2e-3)
    # the smallest certified gain level is the circle radius 0.5
    assert s.gamma[0] == pytest.approx(0.5, abs=5e-3)
    assert s.lam[0] == 1.0
    assert s.gamma[-1] == pytest.approx(2.0, abs=1e-5)


def test_profile_invariants(low_pass_profile, lead_profile):
    for p in (low_pass_profile, lead_profile):
        for s in p.slices:
            assert np.all(np.diff(s.gamma) >= -1e-12)
            assert np.all((s.phi >= -1e-12) & (s.phi <= math.pi + 1e-12))
            assert np.all((s.lam >= -1e-9) & (s.lam <= 1 + 1e-9))
            if s.flag in (prof.FLAG_REGULAR, prof.FLAG_CONIC):
                assert s.gamma[-1] == pytest.approx(p.meta["hinf"], abs=1e-12)


def test_bracket_containment_on_recomputation(lead_profile):
    # replaying the bracket formulas over the computed slice: every
    # accepted angle lies within its bracket up to the error bound
    err = lead_profile.meta["err"]
    for s in lead_profile.slices:
        if s.flag not in (prof.FLAG_REGULAR, prof.FLAG_CONIC):
            continue
        for k in range(1, len(s.gamma) - 1):
            phi_bst, phi_wst = prof.refine_brackets(s.gamma, s.phi, s.lam, k)
            assert s.phi[k] >= phi_bst - err - 1e-9
            assert s.phi[k] <= phi_wst + err + 1e-9


# ---------------------------------------------------------------------------
# complementary profile and export
# ---------------------------------------------------------------------------


def test_complementary_mapping_examples(low_pass_profile):
    comp = prof.complementary_profile(low_pass_profile)
    for s, c in zip(low_pass_profile.slices, comp):
        assert np.allclose(c.pi_minus_phi, math.pi - s.phi)
        finite = s.gamma > 0
        assert np.allclose(c.inv_gamma[finite], 1.0 / s.gamma[finite])
        assert np.all(np.isinf(c.inv_gamma[~finite]))


def test_complementary_fixed_point():
    sl = prof.ThetaSlice(
        0.3, np.array([1.0, 2.0]), np.array([math.pi / 2, math.pi / 4]),
        np.array([0.5, 0.5]), prof.FLAG_REGULAR
    )
    p = prof.ThetaProfile(np.array([0.3]), [sl], {})
    c = prof.complementary_profile(p)[0]
    assert c.pi_minus_phi[0] == pytest.approx(math.pi / 2)
    assert c.inv_gamma[0] == pytest.approx(1.0)
    assert c.pi_minus_phi[1] == pytest.approx(3 * math.pi / 4)
    assert c.inv_gamma[1] == pytest.approx(0.5)


def test_export_roundtrip_csv(tmp_path, lead_profile):
    path = tmp_path / "p.csv"
    prof.export_profile(lead_profile, "csv", str(path))
    text1 = path.read_text()
    back = prof.import_profile(str(path))
    prof.export_profile(back, "csv", str(path))
    assert path.read_text() == text1
    for s, b in zip(lead_profile.slices, back.slices):
        assert np.array_equal(s.gamma, b.gamma)
        assert np.array_equal(s.phi, b.phi)
        assert np.array_equal(s.lam, b.lam)
        assert s.flag == b.flag


def test_export_roundtrip_json(tmp_path, lead_profile):
    path = tmp_path / "p.json"
    prof.export_profile(lead_profile, "json", str(path))
    back = prof.import_profile(str(path))
    for s, b in zip(lead_profile.slices, back.slices):
        assert np.array_equal(s.gamma, b.gamma)
        assert np.array_equal(s.phi, b.phi)
        assert np.array_equal(s.lam, b.lam)


def test_csv_row_count_and_flags(tmp_path, low_pass_profile):
    text = prof.profile_to_csv(low_pass_profile)
    rows = text.strip().split("\n")[1:]
    expected = sum(len(s.gamma) for s in low_pass_profile.slices)
    assert len(rows) == expected
    deg = [r for r in rows if r.endswith(prof.FLAG_DEGENERATE)]
    assert deg, "mirror-side slices of a positive real plant degenerate"


def test_complementary_points_certify_sector_stability(lead_profile):
    # each complementary point (psi, eta) at direction theta certifies
    # robust stability against the slightly shrunken mirrored sector
    from srgrobust.lti import FrequencyGrid, StateSpaceSystem, rs_check_named

    sys = StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    grid = FrequencyGrid.log(1e-3, 1e3, 120)
    comp = prof.complementary_profile(lead_profile)
    eps = 5e-2
    checked = 0
    for s, c in zip(lead_profile.slices, comp):
        if s.flag not in (prof.FLAG_REGULAR, prof.FLAG_CONIC):
            continue
        k = len(s.gamma) // 2
        psi0, eta0 = c.pi_minus_phi[k], c.inv_gamma[k]
        if not np.isfinite(eta0) or eta0 - eps <= 0 or psi0 <= eps:
            continue
        verdict = rs_check_named(
            sys, "sector", grid,
            gamma=eta0 - eps,
            alpha=-s.theta - psi0 + eps,
            beta=-s.theta + psi0 - eps,
        )
        assert verdict.robustly_stable, (s.theta, psi0, eta0)
        checked += 1
    assert checked >= 1


def test_compute_profile_validation():
    sys = StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ValueError):
        prof.compute_profile(sys, n_theta=0)
    with pytest.raises(ValueError):
        prof.compute_profile(sys, n_gamma=2)
    with pytest.raises(ValueError):
        prof.compute_profile(sys, err=0.0)
