import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srgrobust import geometry as geo
from conftest import sample_plane


def region_equal_sampled(a, b, rng, n=10_000, radius=3.0, skin=1e-5):
    """Membership agreement away from both boundaries."""
    z = sample_plane(rng, n, radius)
    ma, mb = a.margin(z), b.margin(z)
    keep = (np.abs(ma) > skin) & (np.abs(mb) > skin)
    return np.array_equal(a.contains(z[keep]), b.contains(z[keep]))


# ---------------------------------------------------------------------------
# theta conjugation
# ---------------------------------------------------------------------------


def test_theta_conjugate_examples():
    assert geo.theta_conjugate(1 + 2j, 0.0) == pytest.approx(1 - 2j)
    assert geo.theta_conjugate(1.0, math.pi / 2) == pytest.approx(-1.0)
    z = np.exp(1j * math.pi / 4)
    assert geo.theta_conjugate(z, math.pi / 4) == pytest.approx(z)


def test_theta_conjugate_involution_bulk():
    rng = np.random.default_rng(7)
    z = rng.normal(size=1_000_000) + 1j * rng.normal(size=1_000_000)
    th = rng.uniform(-10, 10, size=1_000_000)
    back = geo.theta_conjugate(geo.theta_conjugate(z, th), th)
    assert np.max(np.abs(back - z)) < 1e-12 * (1 + np.max(np.abs(z)))


@given(
    st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False),
    st.floats(-20, 20),
)
def test_theta_conjugate_is_mirror(z, th):
    w = geo.theta_conjugate(z, th)
    # modulus preserved, angles symmetric about the axis
    assert abs(abs(w) - abs(z)) <= 1e-9 * (1 + abs(z))
    rot_z = z * np.exp(-1j * th)
    rot_w = w * np.exp(-1j * th)
    assert abs(rot_w - np.conj(rot_z)) <= 1e-9 * (1 + abs(z))


# ---------------------------------------------------------------------------
# symmetric part / cover
# ---------------------------------------------------------------------------


def test_symmetrize_cone_part_and_cover(rng):
    cone = geo.Cone(-math.pi / 6, math.pi / 3)
    part = geo.symmetrize(cone, 0.0, "part")
    cover = geo.symmetrize(cone, 0.0, "cover")
    assert region_equal_sampled(part, geo.Cone(-math.pi / 6, math.pi / 6), rng)
    assert region_equal_sampled(cover, geo.Cone(-math.pi / 3, math.pi / 3), rng)


def test_symmetrize_disc_fixed_point(rng):
    disc = geo.Disc(1.7)
    for mode in ("part", "cover"):
        for th in (0.0, 0.9, -2.4):
            assert region_equal_sampled(geo.symmetrize(disc, th, mode), disc, rng)


@pytest.mark.parametrize(
    "region",
    [
        geo.Disc(1.2, 0.4 + 0.3j),
        geo.Cone(0.2, 1.9),
        geo.Sector(2.0, -0.4, 0.7),
        geo.Union((geo.Disc(0.5, 1.0 + 0.5j), geo.Sector(1.5, 2.0, 2.8))),
    ],
)
def test_part_subset_region_subset_cover(region, rng):
    th = 0.35
    part = geo.symmetrize(region, th, "part")
    cover = geo.symmetrize(region, th, "cover")
    z = sample_plane(rng, 10_000)
    in_part = part.contains(z)
    in_reg = region.contains(z)
    in_cover = cover.contains(z)
    assert np.all(~in_part | in_reg)
    assert np.all(~in_reg | in_cover)
    # both outputs are symmetric
    assert geo.is_theta_symmetric(part, th, rng=rng)
    assert geo.is_theta_symmetric(cover, th, rng=rng)


# ---------------------------------------------------------------------------
# circle-wise angles
# ---------------------------------------------------------------------------


def test_circle_angles_sector():
    ca = geo.circle_angles(geo.Sector(2.0, -math.pi / 4, math.pi / 4), 0.0, 1.0)
    assert ca.psi_min == pytest.approx(0.0, abs=1e-9)
    assert ca.psi_max == pytest.approx(math.pi / 4, abs=1e-9)


def test_circle_angles_cone_offset_axis():
    ca = geo.circle_angles(geo.Cone(math.pi / 6, math.pi / 3), math.pi / 4, 1.0)
    assert ca.psi_min == pytest.approx(0.0, abs=1e-9)
    assert ca.psi_max == pytest.approx(math.pi / 12, abs=1e-9)


def test_circle_angles_origin_disc():
    ca = geo.circle_angles(geo.Disc(1.0), 0.0, 0.5)
    assert ca.psi_min == pytest.approx(0.0, abs=1e-9)
    assert ca.psi_max == pytest.approx(math.pi, abs=1e-9)


def test_circle_angles_grid_matches_closed_form():
    # force the sampled path via an equivalent union with an off-centre disc
    sector = geo.Sector(2.0, 0.3, 1.1)
    proxy = geo.Intersection((geo.Disc(2.0), geo.Cone(0.3, 1.1)))
    exact = geo.circle_angles(sector, 0.15, 1.5)
    approx = geo.circle_angles(proxy, 0.15, 1.5, n_angle=4096, n_radial=256)
    assert approx.psi_min == pytest.approx(exact.psi_min, abs=5e-3)
    assert approx.psi_max == pytest.approx(exact.psi_max, abs=5e-3)


def test_circle_angles_empty_cut_raises():
    ring = geo.AnnulusSector((2.0,), (((0.0, 1.0),),))
    with pytest.raises(ValueError):
        geo.circle_angles(ring, 0.0, 0.5, n_radial=64, n_angle=512)


# ---------------------------------------------------------------------------
# circular hulls and connectivity
# ---------------------------------------------------------------------------


def two_lobe_region():
    """Mirror pair of off-origin discs: 0-symmetric and 0-circularly
    connected, but not circularly connected about a tilted axis."""
    return geo.Union(
        (geo.Disc(0.3, np.exp(1j * 0.7)), geo.Disc(0.3, np.exp(-1j * 0.7)))
    )


def test_hull_of_disc_is_disc(rng):
    d = geo.Disc(1.3)
    for th in (0.0, 1.1):
        assert region_equal_sampled(geo.circular_hull(d, th), d, rng)


def test_hull_of_cone_is_mirror_pair(rng):
    hull = geo.circular_hull(geo.Cone(math.pi / 6, math.pi / 3), 0.0)
    expected = geo.Union(
        (geo.Cone(math.pi / 6, math.pi / 3), geo.Cone(-math.pi / 3, -math.pi / 6))
    )
    assert region_equal_sampled(hull, expected, rng)


def test_hull_is_superset_and_fixed_point_logic(rng):
    lobes = two_lobe_region()
    th = -2.0
    hull = geo.circular_hull(lobes, th, n_gamma=384)
    z = sample_plane(rng, 20_000, radius=1.6)
    inside = lobes.contains(z)
    margin_ok = lobes.margin(z) > 1e-3  # stay clear of the boundary
    in_hull = hull.margin(z) >= -2e-2
    assert np.all(~(inside & margin_ok) | in_hull)
    # strictly larger: the hull fills the angular gap between the lobes
    gap_dev = 0.5 * (abs(geo.wrap_angle(0.7 - th)) + abs(geo.wrap_angle(-0.7 - th)))
    probe = np.exp(1j * (th + gap_dev))
    assert hull.contains(probe) and not lobes.contains(probe)


def test_connectivity_examples():
    assert geo.is_theta_circularly_connected(geo.Disc(1.0), 0.0)
    two_cones = geo.Union(
        (geo.Cone(math.pi / 6, math.pi / 3), geo.Cone(2 * math.pi / 3, 5 * math.pi / 6))
    )
    assert not geo.is_theta_circularly_connected(two_cones, 0.0)
    lobes = two_lobe_region()
    assert geo.is_theta_circularly_connected(lobes, 0.0)
    assert not geo.is_theta_circularly_connected(lobes, -2.0)


def test_hull_equality_iff_symmetric_and_connected(rng):
    # symmetric + connected: sector about its own axis
    sector = geo.Sector(1.5, -0.6, 0.6)
    hull = geo.circular_hull(sector, 0.0)
    assert geo.is_theta_symmetric(sector, 0.0, rng=rng)
    assert geo.is_theta_circularly_connected(sector, 0.0)
    assert region_equal_sampled(hull, sector, rng)
    # missing symmetry: hull grows
    tilted = geo.Sector(1.5, -0.2, 0.9)
    assert not geo.is_theta_symmetric(tilted, 0.0, rng=rng)
    probe = 1.0 * np.exp(-1j * 0.8)
    hull2 = geo.circular_hull(tilted, 0.0)
    assert hull2.contains(probe) and not tilted.contains(probe)


# ---------------------------------------------------------------------------
# star hull and forbidden region
# ---------------------------------------------------------------------------


def test_star_hull_ray_logic(rng):
    annulus = geo.Intersection((geo.Disc(2.0), geo.Complement(geo.Disc(1.0))))
    star = geo.star_hull(annulus)
    # star hull of an annulus around 0 is the full outer disc
    assert region_equal_sampled(star, geo.Disc(2.0), rng, radius=2.5)


def test_forbidden_region_disc():
    fr = geo.forbidden_region(geo.Disc(0.5))
    # forbidden set is {|z| >= 2}; admissible complement is int(D_2)
    assert fr.contains(2.5)
    assert fr.contains(-2.0 + 0.1j)
    assert not fr.contains(1.9)
    assert not fr.contains(0.0)


def test_forbidden_region_annulus():
    ann = geo.Intersection((geo.Disc(2.0), geo.Complement(geo.Disc(1.0))))
    fr = geo.forbidden_region(ann)
    # star hull fills to D_2, so forbidden is {|z| >= 1/2}
    for z in (0.6, -0.7j, 3.0 + 1.0j):
        assert fr.contains(z)
    for z in (0.45, 0.2j, 0.0):
        assert not fr.contains(z)


def test_forbidden_region_cone():
    alpha, beta = 0.3, 1.0
    fr = geo.forbidden_region(geo.Cone(alpha, beta))
    # forbidden = cone[pi - beta, pi - alpha] minus 0; admissible
    # complement = {0} U int(cone[-alpha - pi, pi - beta])
    inside_angle = 0.5 * ((math.pi - beta) + (math.pi - alpha))
    assert fr.contains(1.3 * np.exp(1j * inside_angle))
    assert not fr.contains(0.0)
    assert not fr.contains(1.0 * np.exp(1j * (math.pi - beta - 0.05)))
    assert not fr.contains(0.5 * np.exp(1j * (-alpha - math.pi + 0.05) * 0.99))


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "region",
    [
        geo.Disc(1.5, 0.2 - 0.1j),
        geo.Cone(-0.5, 0.5),
        geo.Sector(2.0, 0.1, 1.0),
        geo.HalfPlane(0.7),
        geo.PointSet((1 + 1j, -2j)),
        geo.AnnulusSector((1.0, 2.0), (((0.0, 1.0),), ((0.2, 0.8),))),
        geo.Union((geo.Disc(1.0), geo.Cone(0.0, 0.4))),
        geo.Intersection((geo.Disc(1.0), geo.HalfPlane(0.0))),
        geo.Complement(geo.Disc(1.0)),
    ],
)
def test_json_round_trip(region, rng):
    back = geo.region_from_json(region.to_json())
    assert region_equal_sampled(region, back, rng)
    assert back.to_dict() == region.to_dict()


def test_membership_is_vectorised():
    d = geo.Sector(1.0, -0.3, 0.3)
    z = np.array([[0.5, 2.0], [0.5j, -0.5]])
    out = d.contains(z)
    assert out.shape == z.shape
    assert out[0, 0] and not out[0, 1] and not out[1, 0] and not out[1, 1]
