import math

import numpy as np
import pytest

from srgrobust import dwshell as dw
from srgrobust import geometry as geo


def haar_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_dw_sample_scalar():
    cloud = dw.dw_sample([[2.0]], n_random=16, n_directions=0)
    assert np.allclose(cloud.z, 2.0)
    assert np.allclose(cloud.nu, 4.0)


def test_dw_sample_identity(rng):
    cloud = dw.dw_sample(np.eye(2), n_random=64, n_directions=32, rng=rng)
    assert np.allclose(cloud.z, 1.0, atol=1e-12)
    assert np.allclose(cloud.nu, 1.0, atol=1e-12)


def test_dw_sample_diagonal_segment(rng):
    cloud = dw.dw_sample(np.diag([1.0, 1j]), n_random=256, n_directions=64, rng=rng)
    assert np.allclose(cloud.nu, 1.0, atol=1e-12)
    # z = |u1|^2 * 1 + |u2|^2 * i lies on the segment between 1 and i
    lam = cloud.z.imag
    assert np.all(lam >= -1e-12) and np.all(lam <= 1 + 1e-12)
    assert np.allclose(cloud.z.real + cloud.z.imag, 1.0, atol=1e-12)


def test_paraboloidal_bound_random(rng):
    worst = 0.0
    for _ in range(60):
        n = int(rng.integers(1, 6))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        cloud = dw.dw_sample(m, n_random=256, n_directions=64, rng=rng)
        worst = max(worst, cloud.paraboloid_violation())
    assert worst < 1e-9


def test_dw_support_examples():
    assert dw.dw_support(np.eye(2), (1, 0, 1)) == pytest.approx(2.0)
    assert dw.dw_support(np.diag([1.0, -1.0]), (1, 0, 0)) == pytest.approx(1.0)
    assert dw.dw_support([[0, 2], [0, 0]], (0, 0, 1)) == pytest.approx(4.0)


def test_support_dominates_samples(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    cloud = dw.dw_sample(m, n_random=512, n_directions=128, rng=rng)
    for d in dw.fibonacci_sphere(50):
        vals = d[0] * cloud.z.real + d[1] * cloud.z.imag + d[2] * cloud.nu
        assert vals.max() <= dw.dw_support(m, d) + 1e-9


# ---------------------------------------------------------------------------
# inversion and projection
# ---------------------------------------------------------------------------


def test_f_inv_examples():
    p = dw.f_inv(dw.DwPoint(2.0, 4.0))
    assert (p.z, p.nu) == pytest.approx((0.5, 0.25))
    p = dw.f_inv(dw.DwPoint(1j, 1.0))
    assert p.z == pytest.approx(-1j)
    assert p.nu == pytest.approx(1.0)
    with pytest.raises(dw.DegeneratePointError):
        dw.f_inv(dw.DwPoint(0.0, 0.0))


def test_f_inv_is_involution_and_keeps_bound(rng):
    for _ in range(200):
        z = rng.normal() + 1j * rng.normal()
        nu = abs(z) ** 2 + rng.uniform(0, 2)
        p = dw.DwPoint(z, nu)
        q = dw.f_inv(p)
        assert q.nu >= abs(q.z) ** 2 - 1e-12
        back = dw.f_inv(q)
        assert back.z == pytest.approx(z)
        assert back.nu == pytest.approx(nu)


def test_project_theta_examples():
    hi, lo = dw.project_theta((0.0, 1.0), 0.0)
    assert {complex(hi), complex(lo)} == {1j, -1j}
    hi, lo = dw.project_theta((1.0, 1.0), 0.0)
    assert hi == pytest.approx(1.0) and lo == pytest.approx(1.0)
    hi, lo = dw.project_theta((1.0, 2.0), math.pi / 2)
    assert {round(complex(hi).real, 9), round(complex(lo).real, 9)} == {
        round(math.sqrt(2), 9),
        round(-math.sqrt(2), 9),
    }


def test_projection_matches_gain_angle_formulas(rng):
    # per-vector: the projected pair equals gain * exp(+/- i angle) rotated
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    theta = 0.7
    cloud = dw.dw_sample(m, n_random=128, n_directions=0, rng=rng, keep_vectors=True)
    U = cloud.vectors
    mu = m @ U
    gains = np.linalg.norm(mu, axis=0)
    rot = np.exp(-1j * theta)
    cosang = np.clip(
        (np.einsum("ij,ij->j", U.conj(), rot * mu)).real / np.maximum(gains, 1e-300),
        -1,
        1,
    )
    ang = np.arccos(cosang)
    expect_hi = np.exp(1j * theta) * gains * np.exp(1j * ang)
    hi, lo = dw.project_theta((cloud.z, cloud.nu), theta)
    assert np.allclose(hi, expect_hi, atol=1e-12) or np.allclose(lo, expect_hi, atol=1e-12)


def test_srg_sample_examples(rng):
    # the projection emits theta-conjugate pairs: for the identity the
    # sampled set is {1} together with its mirror about the theta-axis
    theta = 0.9
    pts = dw.srg_theta_sample(np.eye(2), theta, 64, 16, rng=rng)
    mirror = np.exp(2j * theta)
    assert np.all(
        (np.abs(pts - 1.0) < 1e-9) | (np.abs(pts - mirror) < 1e-9)
    )
    assert np.min(np.abs(pts - 1.0)) < 1e-12
    pts = dw.srg_theta_sample(np.exp(1j * math.pi / 3) * np.eye(2), 0.0, 64, 16, rng=rng)
    assert np.allclose(np.abs(pts), 1.0, atol=1e-12)
    assert np.allclose(np.abs(np.abs(np.angle(pts)) - math.pi / 3), 0.0, atol=1e-9)


def test_srg_sample_contains_derived_points(rng):
    m = np.diag([1.0, 1j])
    pts = dw.srg_theta_sample(m, 0.0, 2048, 256, rng=rng)

    def found(target, tol=2e-2):
        return np.min(np.abs(pts - target)) < tol

    assert found(1.0, 1e-6) and found(1j, 1e-6) and found(-1j, 1e-6)
    # u = (1,1)/sqrt(2): gain 1, angle pi/3
    assert found(np.exp(1j * math.pi / 3)) and found(np.exp(-1j * math.pi / 3))


def test_srg_rotation_identity(rng):
    # theta-SRG equals the rotated plain SRG on the same vectors
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    theta = -1.1
    cloud = dw.dw_sample(m, 96, 0, rng=rng, keep_vectors=True)
    hi1, lo1 = dw.project_theta((cloud.z, cloud.nu), theta)
    zr, nur = dw._eval_vectors(np.exp(-1j * theta) * m, cloud.vectors)
    hi0, lo0 = dw.project_theta((zr, nur), 0.0)
    assert np.allclose(np.exp(1j * theta) * hi0, hi1, atol=1e-12)
    assert np.allclose(np.exp(1j * theta) * lo0, lo1, atol=1e-12)


def test_inv_srg_examples(rng):
    pts = dw.inv_srg_theta_sample(2 * np.eye(2), 0.0, 64, 16, rng=rng)
    assert np.allclose(pts, 0.5, atol=1e-12)
    pts = dw.inv_srg_theta_sample(1j * np.eye(2), 0.0, 64, 16, rng=rng)
    # inverse of i*I is -i*I whose 0-SRG is the conjugate pair {-i, i}
    assert np.all(np.abs(np.abs(pts) - 1.0) < 1e-9)
    assert np.min(np.abs(pts + 1j)) < 1e-9
    pts = dw.inv_srg_theta_sample(np.diag([2.0, 1.0 + 1j]), 0.0, 1024, 128, rng=rng)
    assert np.min(np.abs(pts - 0.5)) < 1e-9
    assert np.min(np.abs(pts - (1 - 1j) / 2)) < 1e-9


def test_inverse_identity_against_inverse_matrix(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) + 3 * np.eye(3)
    theta = 0.4
    pts = dw.inv_srg_theta_sample(m, theta, 512, 128, rng=rng)
    direct = dw.srg_theta_sample(np.linalg.inv(m), theta, 4096, 512, rng=rng)
    # sampled inverse points sit inside a small neighbourhood of the
    # directly sampled inverse-matrix SRG
    d = np.min(np.abs(pts[:, None] - direct[None, :]), axis=1)
    assert np.quantile(d, 0.99) < 5e-2


def test_scaling_property(rng):
    m = rng.normal(size=(3, 3))
    cloud = dw.dw_sample(m, 64, 0, rng=rng, keep_vectors=True)
    tau = 2.5
    z2, nu2 = dw._eval_vectors(tau * m, cloud.vectors)
    hi1, _ = dw.project_theta((cloud.z, cloud.nu), 0.3)
    hi2, _ = dw.project_theta((z2, nu2), 0.3)
    assert np.allclose(hi2, tau * hi1, atol=1e-12)


def test_unitary_invariance_support(rng):
    for _ in range(100):
        n = int(rng.integers(2, 5))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        u = haar_unitary(n, rng)
        mu = u.conj().T @ m @ u
        for d in dw.fibonacci_sphere(50):
            assert dw.dw_support(m, d) == pytest.approx(dw.dw_support(mu, d), abs=1e-9)


def test_normal_matrix_shell_in_eigenlift_hull(rng):
    # the shell of a normal matrix stays inside the convex hull of the
    # lifted eigenvalues, checked through support functions
    for _ in range(20):
        lam = rng.normal(size=3) + 1j * rng.normal(size=3)
        u = haar_unitary(3, rng)
        m = u.conj().T @ np.diag(lam) @ u
        lift = np.column_stack([lam.real, lam.imag, np.abs(lam) ** 2])
        for d in dw.fibonacci_sphere(40):
            hull_sup = np.max(lift @ d)
            assert dw.dw_support(m, d) <= hull_sup + 1e-9


# ---------------------------------------------------------------------------
# theta angle
# ---------------------------------------------------------------------------


def test_theta_angle_trivial_cases(rng):
    # arccos near ratio 1 amplifies machine epsilon to ~sqrt(eps)
    assert dw.theta_angle(np.eye(2), 0.0, rng=rng) == pytest.approx(0.0, abs=1e-7)
    res = dw.theta_angle_interval(np.exp(1j * math.pi / 3) * np.eye(2), 0.0, rng=rng)
    assert res.lower == pytest.approx(math.pi / 3, abs=1e-9)
    assert res.upper == pytest.approx(math.pi / 3, abs=1e-3)


def test_theta_angle_derived_diag(rng):
    res = dw.theta_angle_interval(np.diag([1.0, 1j]), 0.0, tol=1e-3, rng=rng)
    assert res.lower == pytest.approx(math.pi / 2, abs=1e-6)
    assert res.upper == pytest.approx(math.pi / 2, abs=2e-3)


def test_theta_angle_brute_force_agreement(rng):
    for _ in range(6):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        # dense brute force over the unit sphere of C^2
        tt = np.linspace(0, math.pi / 2, 181)
        ph = np.linspace(-math.pi, math.pi, 361)
        T, P = np.meshgrid(tt, ph, indexing="ij")
        U = np.stack(
            [np.cos(T).ravel(), (np.sin(T) * np.exp(1j * P)).ravel()], axis=0
        )
        z, nu = dw._eval_vectors(m, U)
        keep = nu > 1e-12
        brute = np.max(np.arccos(np.clip(z[keep].real / np.sqrt(nu[keep]), -1, 1)))
        res = dw.theta_angle_interval(m, 0.0, tol=1e-3, rng=rng)
        assert res.lower >= brute - 2e-3
        assert res.upper >= brute - 1e-9
        assert res.upper - res.lower < 5e-3


def test_cone_containment_margin_signs():
    m = np.exp(1j * 0.5) * np.eye(2)  # angle exactly 0.5 about axis 0
    assert dw.cone_containment_margin(m, 0.0, 0.6) > 0
    assert dw.cone_containment_margin(m, 0.0, 0.4) < 0


# ---------------------------------------------------------------------------
# shell unions
# ---------------------------------------------------------------------------


def test_dw_union_disc_layers():
    reg = dw.dw_union_region(geo.Disc(1.5), theta=0.7, matrix_size=2)
    assert reg.contains(0.3 + 0.2j, 1.0)
    assert reg.contains(0.0, 2.25)          # top layer
    assert not reg.contains(0.0, 2.3)       # above the gain cap
    assert not reg.contains(1.2, 1.0)       # below the paraboloid


def test_dw_union_cone_layers():
    alpha, beta = -0.5, 0.5
    reg = dw.dw_union_region(geo.Cone(alpha, beta), theta=0.0, matrix_size=2)
    g = 1.3
    inside = g * np.exp(1j * 0.4)
    assert reg.contains(inside, g * g)
    # interior chord point between the two conjugate boundary points
    assert reg.contains(g * math.cos(0.4), g * g)
    assert not reg.contains(g * np.exp(1j * 0.7), g * g)


def test_dw_union_sector_is_intersection():
    gam, alpha, beta = 1.2, -0.4, 0.4
    sec = dw.dw_union_region(geo.Sector(gam, alpha, beta), theta=0.0, matrix_size=2)
    assert sec.contains(1.0 * np.exp(1j * 0.3), 1.0)
    assert not sec.contains(1.3 * np.exp(1j * 0.1), 1.3**2)  # gain too big
    assert not sec.contains(1.0 * np.exp(1j * 0.6), 1.0)     # angle too big


def test_dw_union_scalar_collapses_to_paraboloid():
    reg = dw.dw_union_region(geo.Disc(2.0), theta=0.0, matrix_size=1)
    assert reg.contains(1.0 + 0.5j, 1.25)
    assert not reg.contains(0.5, 1.0)  # strictly above the paraboloid


def test_shell_separation_margin(rng):
    a = 0.3 * np.eye(3)
    b = 2.0 * np.eye(3) + 0.1 * rng.normal(size=(3, 3))
    gap, d = dw.shell_separation_margin(a, b)
    assert gap > 0
    # a shell cannot be separated from itself
    gap2, _ = dw.shell_separation_margin(b, b)
    assert gap2 <= 1e-9
