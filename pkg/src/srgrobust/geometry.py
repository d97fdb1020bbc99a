"""Closed regions of the complex plane with exact membership predicates.

Regions are built from parametric primitives (discs, cones, sectors,
half-planes, sampled annular sectors, point sets) combined through set
algebra (union, intersection, complement, mirroring).  On top of the CSG
representation this module provides the angular-geometry toolbox used by
the robustness checks: mirroring about a tilted axis, symmetric
part/cover, circle-wise angle ranges, circular hulls and circular
connectivity, star hulls, and the inverse-negate map that turns an
uncertainty region into the forbidden region for a frequency response.

All membership predicates are vectorised over numpy arrays of complex
numbers and decided at a configurable tolerance; `margin` returns a
signed clearance estimate whose sign is exact (positive inside).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-9

_BIG = 1e300


def wrap_angle(a, center: float = 0.0):
    """Wrap angles into [center - pi, center + pi)."""
    return (np.asarray(a) - center + math.pi) % TWO_PI - math.pi + center


def theta_conjugate(z, theta: float):
    """Mirror ``z`` about the axis through the origin at angle ``theta``.

    Equals ``exp(i*theta) * conj(exp(-i*theta) * z)``; applying it twice
    returns ``z``.
    """
    rot = np.exp(1j * theta)
    return rot * np.conj(z / rot)


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.shape == ()


@dataclass(frozen=True)
class CircleAngles:
    """Range of absolute angular deviations from an axis on a disc cut.

    ``psi_min``/``psi_max`` are the inf/sup of ``|angle(z) - theta|`` over
    the part of a region with modulus at most ``gamma``, both in [0, pi].
    """

    gamma: float
    psi_min: float
    psi_max: float

    def __post_init__(self):
        if self.psi_min > self.psi_max + 1e-12:
            raise ValueError("psi_min must not exceed psi_max")


def _deviation_range(lo: float, hi: float, theta: float) -> tuple[float, float]:
    """Range of |wrap(a - theta)| over absolute angles a in [lo, hi]."""
    if hi - lo >= TWO_PI - 1e-15:
        return 0.0, math.pi
    x = float(wrap_angle(lo - theta))
    span = hi - lo
    # split [x, x + span] at the +pi wrap boundary
    pieces = []
    if x + span <= math.pi:
        pieces.append((x, x + span))
    else:
        pieces.append((x, math.pi))
        pieces.append((-math.pi, x + span - TWO_PI))
    dmin, dmax = math.inf, 0.0
    for a, b in pieces:
        if a <= 0.0 <= b:
            dmin = 0.0
        else:
            dmin = min(dmin, min(abs(a), abs(b)))
        dmax = max(dmax, max(abs(a), abs(b)))
    return dmin, min(dmax, math.pi)


class Region:
    """Base class: a closed subset of the complex plane."""

    kind = "region"
    tol: float = DEFAULT_TOL

    # -- membership ---------------------------------------------------
    def margin(self, z):
        """Signed clearance: positive inside, negative outside.

        The sign is exact at tolerance; the magnitude is a distance
        estimate (exact for discs and half-planes).
        """
        raise NotImplementedError

    def contains(self, z, tol: float | None = None):
        t = self.tol if tol is None else tol
        arr, scalar = _as_complex_array(z)
        m = self.margin(arr) >= -t
        return bool(m) if scalar else m

    # -- radial structure ---------------------------------------------
    def gamma_bounds(self) -> tuple[float, float]:
        """(inf, sup) of |z| over the region."""
        raise NotImplementedError

    def is_bounded(self) -> bool:
        return np.isfinite(self.gamma_bounds()[1])

    def ray_intervals(self, z: complex) -> list[tuple[float, float]]:
        """Intervals of mu >= 0 with mu*z in the region, for a scalar z != 0."""
        raise NotImplementedError

    # -- sampling ------------------------------------------------------
    def sample(self, n: int, rng: np.random.Generator, radius_cap: float = 10.0):
        """Draw approximately ``n`` member points by rejection sampling."""
        lo, hi = self.gamma_bounds()
        hi = min(hi, radius_cap) if not np.isfinite(hi) else hi
        hi = max(hi, lo, 1e-6)
        out = []
        budget = 60
        while len(out) < n and budget > 0:
            budget -= 1
            k = max(4 * n, 256)
            r = np.sqrt(rng.uniform(max(lo - 1e-12, 0.0) ** 2, hi**2, size=k))
            ang = rng.uniform(-math.pi, math.pi, size=k)
            cand = r * np.exp(1j * ang)
            hit = self.contains(cand)
            out.extend(cand[hit][: n - len(out)])
        return np.asarray(out, dtype=complex)

    # -- serialisation ---------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class Disc(Region):
    """Closed disc {|z - center| <= radius}."""

    radius: float
    center: complex = 0j
    tol: float = DEFAULT_TOL
    kind = "disc"

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("disc radius must be nonnegative")

    def margin(self, z):
        return self.radius - np.abs(np.asarray(z, dtype=complex) - self.center)

    def gamma_bounds(self):
        c = abs(self.center)
        return max(0.0, c - self.radius), c + self.radius

    def ray_intervals(self, z):
        # |mu z - c|^2 <= r^2, quadratic in mu
        a = abs(z) ** 2
        b = -2.0 * (np.conj(z) * self.center).real
        c0 = abs(self.center) ** 2 - self.radius**2
        disc = b * b - 4 * a * c0
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        lo, hi = (-b - sq) / (2 * a), (-b + sq) / (2 * a)
        if hi < 0:
            return []
        return [(max(lo, 0.0), hi)]

    def to_dict(self):
        return {
            "kind": "disc",
            "radius": self.radius,
            "center": [self.center.real, self.center.imag],
            "tol": self.tol,
        }


@dataclass(frozen=True)
class Cone(Region):
    """Closed cone {z : alpha <= angle(z) <= beta} together with 0."""

    alpha: float
    beta: float
    tol: float = DEFAULT_TOL
    kind = "cone"

    def __post_init__(self):
        if self.beta < self.alpha:
            raise ValueError("cone requires alpha <= beta")

    @property
    def _full(self) -> bool:
        return self.beta - self.alpha >= TWO_PI - 1e-15

    def margin(self, z):
        z = np.asarray(z, dtype=complex)
        if self._full:
            return np.full(z.shape, _BIG)
        dev = (np.angle(z) - self.alpha) % TWO_PI
        span = self.beta - self.alpha
        inside = dev <= span

        def ray_dist(a):
            rel = z * np.exp(-1j * a)
            return np.where(rel.real >= 0, np.abs(rel.imag), np.abs(z))

        d = np.minimum(ray_dist(self.alpha), ray_dist(self.beta))
        return np.where(inside, d, -d)

    def gamma_bounds(self):
        return 0.0, math.inf

    def ray_intervals(self, z):
        if self._full:
            return [(0.0, math.inf)]
        dev = (np.angle(z) - self.alpha) % TWO_PI
        if dev <= self.beta - self.alpha:
            return [(0.0, math.inf)]
        return [(0.0, 0.0)]  # only the origin

    def to_dict(self):
        return {"kind": "cone", "alpha": self.alpha, "beta": self.beta, "tol": self.tol}


@dataclass(frozen=True)
class Sector(Region):
    """Disc of radius gamma intersected with the cone [alpha, beta]."""

    gamma: float
    alpha: float
    beta: float
    tol: float = DEFAULT_TOL
    kind = "sector"

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("sector requires gamma > 0")
        if self.beta < self.alpha:
            raise ValueError("sector requires alpha <= beta")

    def _parts(self):
        return Disc(self.gamma, tol=self.tol), Cone(self.alpha, self.beta, tol=self.tol)

    def margin(self, z):
        d, c = self._parts()
        return np.minimum(d.margin(z), c.margin(z))

    def gamma_bounds(self):
        return 0.0, self.gamma

    def ray_intervals(self, z):
        d, c = self._parts()
        return _intersect_intervals(d.ray_intervals(z), c.ray_intervals(z))

    def to_dict(self):
        return {
            "kind": "sector",
            "gamma": self.gamma,
            "alpha": self.alpha,
            "beta": self.beta,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class HalfPlane(Region):
    """Closed half-plane {Re(exp(-i*theta) z) >= 0}."""

    theta: float
    tol: float = DEFAULT_TOL
    kind = "half_plane"

    def margin(self, z):
        return (np.asarray(z, dtype=complex) * np.exp(-1j * self.theta)).real

    def gamma_bounds(self):
        return 0.0, math.inf

    def ray_intervals(self, z):
        if (z * np.exp(-1j * self.theta)).real >= 0:
            return [(0.0, math.inf)]
        return [(0.0, 0.0)]

    def to_dict(self):
        return {"kind": "half_plane", "theta": self.theta, "tol": self.tol}


@dataclass(frozen=True)
class PointSet(Region):
    """Finite set of complex points."""

    points: tuple
    tol: float = DEFAULT_TOL
    kind = "point_set"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(complex(p) for p in self.points))
        if not self.points:
            raise ValueError("point set must be nonempty")

    def margin(self, z):
        z = np.asarray(z, dtype=complex)
        pts = np.asarray(self.points)
        d = np.min(np.abs(z[..., None] - pts[None, :]), axis=-1)
        return -d

    def gamma_bounds(self):
        mods = [abs(p) for p in self.points]
        return min(mods), max(mods)

    def ray_intervals(self, z):
        out = []
        az = abs(z)
        for p in self.points:
            if abs(p) < self.tol and az < self.tol:
                out.append((0.0, 0.0))
                continue
            mu = abs(p) / az
            if abs(mu * z - p) <= self.tol * max(1.0, abs(p)):
                out.append((mu, mu))
        return out

    def sample(self, n, rng, radius_cap=10.0):
        idx = rng.integers(0, len(self.points), size=n)
        return np.asarray(self.points)[idx]

    def to_dict(self):
        return {
            "kind": "point_set",
            "points": [[p.real, p.imag] for p in self.points],
            "tol": self.tol,
        }


@dataclass(frozen=True)
class AnnulusSector(Region):
    """Region sampled on concentric circles with angular intervals.

    ``gammas`` is an increasing grid of radii; ``intervals[i]`` lists the
    absolute-angle intervals (lo, hi) active on circle ``gammas[i]``.
    Membership between grid circles interpolates interval endpoints when
    all circles carry the same number of intervals, otherwise the nearest
    circle is used.  With a single radius this represents circular arcs.
    """

    gammas: tuple
    intervals: tuple
    tol: float = DEFAULT_TOL
    kind = "annulus_sector"

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        iv = tuple(tuple((float(a), float(b)) for a, b in circle) for circle in self.intervals)
        if len(g) != len(iv) or not g:
            raise ValueError("gammas and intervals must be nonempty and equal length")
        if any(g[i + 1] < g[i] for i in range(len(g) - 1)):
            raise ValueError("gammas must be nondecreasing")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "intervals", iv)

    def _circle_intervals(self, r: float):
        g = self.gammas
        if len(g) == 1 or r <= g[0]:
            return self.intervals[0]
        if r >= g[-1]:
            return self.intervals[-1]
        j = int(np.searchsorted(g, r)) - 1
        j = min(max(j, 0), len(g) - 2)
        a, b = self.intervals[j], self.intervals[j + 1]
        if len(a) != len(b):
            return a if r - g[j] <= g[j + 1] - r else b
        if g[j + 1] - g[j] < 1e-300:
            return a
        w = (r - g[j]) / (g[j + 1] - g[j])
        return tuple(
            ((1 - w) * a[k][0] + w * b[k][0], (1 - w) * a[k][1] + w * b[k][1])
            for k in range(len(a))
        )

    def margin(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=float)
        glo, ghi = self.gammas[0], self.gammas[-1]
        for i, w in enumerate(flat):
            r = abs(w)
            rad = min(r - glo, ghi - r) if ghi > glo else -abs(r - glo)
            rc = min(max(r, glo), ghi)
            best = -_BIG
            ang = math.atan2(w.imag, w.real)
            for lo, hi in self._circle_intervals(rc):
                d = float(wrap_angle(ang - 0.5 * (lo + hi)))
                amar = 0.5 * (hi - lo) - abs(d)
                best = max(best, min(rad, amar * max(rc, self.tol)))
            out[i] = best
        return out.reshape(z.shape)

    def gamma_bounds(self):
        return self.gammas[0], self.gammas[-1]

    def ray_intervals(self, z):
        az = abs(z)
        ang = math.atan2(z.imag, z.real)
        out = []
        # walk the radius grid; a ray has fixed angle, so collect radial runs
        # over circles whose interval set contains the angle
        run_start = None
        gs = list(self.gammas)
        if len(gs) == 1:
            gs = [gs[0], gs[0]]
        for i, g in enumerate(gs):
            ivs = self._circle_intervals(g)
            hit = any(
                abs(float(wrap_angle(ang - 0.5 * (lo + hi)))) <= 0.5 * (hi - lo) + self.tol
                for lo, hi in ivs
            )
            if hit and run_start is None:
                run_start = g
            if (not hit or i == len(gs) - 1) and run_start is not None:
                end = g if hit else gs[max(i - 1, 0)]
                out.append((run_start / az, end / az))
                run_start = None
        return out

    def sample(self, n, rng, radius_cap=10.0):
        out = np.empty(n, dtype=complex)
        for i in range(n):
            j = int(rng.integers(0, len(self.gammas)))
            circle = self.intervals[j]
            lo, hi = circle[int(rng.integers(0, len(circle)))]
            out[i] = self.gammas[j] * np.exp(1j * rng.uniform(lo, hi))
        return out

    def to_dict(self):
        return {
            "kind": "annulus_sector",
            "gammas": list(self.gammas),
            "intervals": [[list(p) for p in circle] for circle in self.intervals],
            "tol": self.tol,
        }


def _merge_union(intervals):
    ivs = sorted((lo, hi) for lo, hi in intervals if hi >= lo)
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1] + 1e-15:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _intersect_intervals(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if hi >= lo:
                out.append((lo, hi))
    return _merge_union(out)


def _complement_intervals(a, hi_cap=math.inf):
    a = _merge_union(a)
    out = []
    cur = 0.0
    for lo, hi in a:
        if lo > cur:
            out.append((cur, lo))
        cur = max(cur, hi)
    if cur < hi_cap:
        out.append((cur, hi_cap))
    return out


@dataclass(frozen=True)
class Union(Region):
    members: tuple
    tol: float = DEFAULT_TOL
    kind = "union"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("union of nothing")

    def margin(self, z):
        return np.maximum.reduce([m.margin(z) for m in self.members])

    def gamma_bounds(self):
        bs = [m.gamma_bounds() for m in self.members]
        return min(b[0] for b in bs), max(b[1] for b in bs)

    def ray_intervals(self, z):
        out = []
        for m in self.members:
            out.extend(m.ray_intervals(z))
        return _merge_union(out)

    def sample(self, n, rng, radius_cap=10.0):
        per = max(1, n // len(self.members))
        parts = [m.sample(per, rng, radius_cap) for m in self.members]
        return np.concatenate(parts)[:n]

    def to_dict(self):
        return {"kind": "union", "members": [m.to_dict() for m in self.members], "tol": self.tol}


@dataclass(frozen=True)
class Intersection(Region):
    members: tuple
    tol: float = DEFAULT_TOL
    kind = "intersection"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("intersection of nothing")

    def margin(self, z):
        return np.minimum.reduce([m.margin(z) for m in self.members])

    def gamma_bounds(self):
        # exact bounds are hard for intersections; bound by members and
        # tighten on a polar sample of actual members
        bs = [m.gamma_bounds() for m in self.members]
        lo, hi = max(b[0] for b in bs), min(b[1] for b in bs)
        cap = hi if np.isfinite(hi) else 10.0 * max(1.0, lo)
        rr = np.linspace(max(lo, 0.0), cap, 160)
        aa = np.linspace(-math.pi, math.pi, 256, endpoint=False)
        zz = rr[:, None] * np.exp(1j * aa)[None, :]
        hit = self.contains(zz)
        if not hit.any():
            return lo, hi
        mods = np.abs(zz[hit])
        return float(mods.min()), float(mods.max()) if np.isfinite(hi) else hi

    def ray_intervals(self, z):
        ivs = self.members[0].ray_intervals(z)
        for m in self.members[1:]:
            ivs = _intersect_intervals(ivs, m.ray_intervals(z))
        return ivs

    def to_dict(self):
        return {
            "kind": "intersection",
            "members": [m.to_dict() for m in self.members],
            "tol": self.tol,
        }


@dataclass(frozen=True)
class Complement(Region):
    """Closure of the complement of a region."""

    member: Region
    tol: float = DEFAULT_TOL
    kind = "complement"

    def margin(self, z):
        return -self.member.margin(z)

    def gamma_bounds(self):
        return 0.0, math.inf

    def ray_intervals(self, z):
        return _complement_intervals(self.member.ray_intervals(z))

    def to_dict(self):
        return {"kind": "complement", "member": self.member.to_dict(), "tol": self.tol}


@dataclass(frozen=True)
class Mirrored(Region):
    """Image of a region under mirroring about the theta-axis."""

    member: Region
    theta: float
    tol: float = DEFAULT_TOL
    kind = "mirrored"

    def margin(self, z):
        return self.member.margin(theta_conjugate(np.asarray(z, dtype=complex), self.theta))

    def gamma_bounds(self):
        return self.member.gamma_bounds()

    def ray_intervals(self, z):
        return self.member.ray_intervals(complex(theta_conjugate(z, self.theta)))

    def sample(self, n, rng, radius_cap=10.0):
        return theta_conjugate(self.member.sample(n, rng, radius_cap), self.theta)

    def to_dict(self):
        return {
            "kind": "mirrored",
            "member": self.member.to_dict(),
            "theta": self.theta,
            "tol": self.tol,
        }


# ---------------------------------------------------------------------------
# theta-symmetry operations
# ---------------------------------------------------------------------------


def symmetrize(region: Region, theta: float, mode: str) -> Region:
    """Largest symmetric subregion ('part') or smallest symmetric
    supregion ('cover') of a region with respect to the theta-axis."""
    mirrored = Mirrored(region, theta, tol=region.tol)
    if mode == "part":
        return Intersection((region, mirrored), tol=region.tol)
    if mode == "cover":
        return Union((region, mirrored), tol=region.tol)
    raise ValueError("mode must be 'part' or 'cover'")


def is_theta_symmetric(region: Region, theta: float, n_samples: int = 4096,
                       rng: np.random.Generator | None = None) -> bool:
    """Sampled check that the region equals its mirror image: plane
    samples must agree in membership, and member samples (which also see
    measure-zero regions) must keep their mirrors inside."""
    rng = rng or np.random.default_rng(0)
    lo, hi = region.gamma_bounds()
    cap = hi if np.isfinite(hi) else 4.0 * max(lo, 1.0)
    r = np.sqrt(rng.uniform(0.0, (1.1 * cap + 0.1) ** 2, n_samples))
    z = r * np.exp(1j * rng.uniform(-math.pi, math.pi, n_samples))
    a = region.contains(z)
    b = region.contains(theta_conjugate(z, theta))
    # ignore points within tolerance of the boundary
    near = np.abs(region.margin(z)) <= 10 * region.tol
    near |= np.abs(region.margin(theta_conjugate(z, theta))) <= 10 * region.tol
    if not np.all(a[~near] == b[~near]):
        return False
    members = region.sample(min(n_samples, 512), rng)
    if members.size:
        mirrored = theta_conjugate(members, theta)
        ok = region.contains(mirrored, tol=max(region.tol, 1e-7))
        inner = region.margin(members) > -region.tol  # skip boundary jitter
        if not np.all(ok | ~inner):
            return False
    return True


# ---------------------------------------------------------------------------
# circle-wise angles and circular hulls
# ---------------------------------------------------------------------------


def circle_angles(region: Region, theta: float, gamma: float,
                  n_angle: int = 2048, n_radial: int = 96) -> CircleAngles:
    """Inf and sup of |angle(z) - theta| over the region cut to |z| <= gamma.

    Closed forms are used for discs about the origin, cones, sectors and
    unions thereof; other regions are sampled on a polar grid.
    """
    res = _circle_angles_exact(region, theta, gamma)
    if res is not None:
        lo, hi = res
        if lo is None:
            raise ValueError("region does not meet the disc of radius gamma")
        return CircleAngles(gamma, lo, hi)
    lo, hi = _circle_angles_grid(region, theta, gamma, n_angle, n_radial)
    if lo is None:
        raise ValueError("region does not meet the disc of radius gamma")
    return CircleAngles(gamma, lo, hi)


def _circle_angles_exact(region, theta, gamma):
    """Return (lo, hi), (None, None) for empty cut, or None if no closed form."""
    if isinstance(region, Disc) and abs(region.center) <= region.tol:
        if region.radius < 0 or gamma < 0:
            return (None, None)
        return (0.0, math.pi)
    if isinstance(region, Cone):
        if region._full:
            return (0.0, math.pi)
        return _deviation_range(region.alpha, region.beta, theta)
    if isinstance(region, Sector):
        if gamma <= 0:
            return (None, None)
        return _deviation_range(region.alpha, region.beta, theta)
    if isinstance(region, PointSet):
        devs = [
            abs(float(wrap_angle(np.angle(p) - theta)))
            for p in region.points
            if abs(p) <= gamma + region.tol
        ]
        if not devs:
            return (None, None)
        return (min(devs), max(devs))
    if isinstance(region, AnnulusSector):
        lo, hi = math.inf, -math.inf
        for g, circle in zip(region.gammas, region.intervals):
            if g > gamma + region.tol:
                continue
            for a, b in circle:
                d0, d1 = _deviation_range(a, b, theta)
                lo, hi = min(lo, d0), max(hi, d1)
        if lo is math.inf:
            return (None, None)
        return (lo, hi)
    if isinstance(region, Union):
        parts = [_circle_angles_exact(m, theta, gamma) for m in region.members]
        if any(p is None for p in parts):
            return None
        parts = [p for p in parts if p[0] is not None]
        if not parts:
            return (None, None)
        return (min(p[0] for p in parts), max(p[1] for p in parts))
    return None


def _circle_angles_grid(region, theta, gamma, n_angle, n_radial):
    rr = np.linspace(0.0, gamma, n_radial + 1)[1:]
    aa = np.linspace(-math.pi, math.pi, n_angle, endpoint=False)
    zz = rr[:, None] * np.exp(1j * aa)[None, :]
    hit = region.margin(zz) >= -region.tol
    if not hit.any():
        return None, None
    dev = np.abs(wrap_angle(aa[None, :] - theta))
    devs = np.broadcast_to(dev, zz.shape)[hit]
    return float(devs.min()), float(devs.max())


def circular_hull(region: Region, theta: float, n_gamma: int = 256) -> Region:
    """Per-circle angular completion of a region about the theta-axis.

    Each circle of radius gamma contributes the arc whose deviations from
    the axis span the circle-wise angle range of the region cut to that
    radius.  The result is theta-symmetric and circularly connected.
    Discs about the origin, cones and sectors are returned in closed form.
    """
    if isinstance(region, Disc) and abs(region.center) <= region.tol:
        return region
    if isinstance(region, Cone):
        if region._full:
            return region
        d0, d1 = _deviation_range(region.alpha, region.beta, theta)
        return Union(
            (Cone(theta + d0, theta + d1, tol=region.tol),
             Cone(theta - d1, theta - d0, tol=region.tol)),
            tol=region.tol,
        )
    if isinstance(region, Sector):
        d0, d1 = _deviation_range(region.alpha, region.beta, theta)
        return Union(
            (Sector(region.gamma, theta + d0, theta + d1, tol=region.tol),
             Sector(region.gamma, theta - d1, theta - d0, tol=region.tol)),
            tol=region.tol,
        )
    lo, hi = region.gamma_bounds()
    if not np.isfinite(hi):
        raise ValueError("grid-based circular hull needs a bounded region")
    if n_gamma < 2:
        raise ValueError("n_gamma must be at least 2")
    gam = np.linspace(max(lo, 0.0), hi, n_gamma)
    gammas, intervals = [], []
    for g in gam:
        if g <= 0:
            continue
        try:
            ca = circle_angles(region, theta, g)
        except ValueError:
            continue
        gammas.append(g)
        if ca.psi_min <= region.tol:
            intervals.append(((theta - ca.psi_max, theta + ca.psi_max),))
        else:
            intervals.append(
                ((theta + ca.psi_min, theta + ca.psi_max),
                 (theta - ca.psi_max, theta - ca.psi_min))
            )
    if not gammas:
        raise ValueError("region appears empty on the radial grid")
    return AnnulusSector(tuple(gammas), tuple(intervals), tol=region.tol)


def is_theta_circularly_connected(region: Region, theta: float,
                                  n_gamma: int = 96, n_angle: int = 2048) -> bool:
    """Whether each circle |z| = gamma meets the region, within each
    closed half-plane of the theta-axis, in an empty or connected arc.

    Decided on an angular sample grid per circle; membership is widened
    by the grid cell size so that measure-zero features (arcs, points)
    register and sub-cell gaps close.
    """
    lo, hi = region.gamma_bounds()
    cap = hi if np.isfinite(hi) else 8.0 * max(lo, 1.0)
    lo = max(lo, 1e-12)
    if cap <= lo:
        gam = np.array([lo])
    else:
        gam = np.linspace(lo, cap, n_gamma)
    ndev = max(n_angle // 2, 8)
    dev = np.linspace(0.0, math.pi, ndev)
    for side in (+1, -1):
        ang = theta + side * dev
        zz = gam[:, None] * np.exp(1j * ang)[None, :]
        cell = np.maximum(
            (gam[1] - gam[0]) if len(gam) > 1 else 0.0,
            gam * (math.pi / (ndev - 1)),
        )
        hit = region.margin(zz) >= -np.maximum(region.tol, 0.75 * cell)[:, None]
        starts = hit[:, :1].astype(int).sum(axis=1) + (
            (~hit[:, :-1] & hit[:, 1:]).sum(axis=1)
        )
        if np.any(starts > 1):
            return False
    return True


# ---------------------------------------------------------------------------
# star hull and the forbidden region map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StarHull(Region):
    """Union of all contractions lambda * X, lambda in [0, 1].

    `margin` is a radial-grid estimate; `contains` falls back to an exact
    ray test, so membership signs are reliable at tolerance.
    """

    member: Region
    tol: float = DEFAULT_TOL
    n_scales: int = 192
    kind = "star_hull"

    def margin(self, z):
        # scan copies lambda*X by the radius rho at which the ray through z
        # meets the member; the copy through rho contributes clearance
        # (|z|/rho) * member_margin(rho * z/|z|), valid when rho >= |z|
        z = np.asarray(z, dtype=complex)
        az = np.abs(z)
        lo, hi = self.member.gamma_bounds()
        top = hi if np.isfinite(hi) else 1e6 * max(1.0, lo)
        rho = np.geomspace(max(lo, top * 1e-9, 1e-12), max(top, 1e-9), self.n_scales)
        safe = np.where(az > 0, az, 1.0)
        zhat = np.where(az > 0, z / safe, 1.0 + 0j)
        best = self.member.margin(z)
        for r in rho:
            m = self.member.margin(r * zhat) * (az / r)
            best = np.maximum(best, np.where(r >= az - 1e-15, m, -_BIG))
        zero_m = float(np.max(self.member.margin(np.array([0j]))))
        return np.where(az <= self.tol, max(zero_m, 0.0), best)

    def contains(self, z, tol: float | None = None):
        t = self.tol if tol is None else tol
        arr, scalar = _as_complex_array(z)
        flat = arr.ravel()
        out = np.zeros(flat.shape, dtype=bool)
        # fast vectorised screen, then exact ray test for the negatives
        screen = self.margin(arr).ravel() >= -t
        for i, w in enumerate(flat):
            if screen[i]:
                out[i] = True
            elif abs(w) <= t:
                out[i] = True
            else:
                out[i] = any(hi >= 1.0 - 1e-12 for _, hi in self.member.ray_intervals(w))
        out = out.reshape(arr.shape)
        return bool(out) if scalar else out

    def gamma_bounds(self):
        return 0.0, self.member.gamma_bounds()[1]

    def ray_intervals(self, z):
        ivs = self.member.ray_intervals(z)
        out = [(0.0, hi) for _, hi in ivs]
        return _merge_union(out + [(0.0, 0.0)])

    def to_dict(self):
        return {"kind": "star_hull", "member": self.member.to_dict(), "tol": self.tol}


def star_hull(region: Region) -> Region:
    """Star hull; closed-form for regions already star-shaped about 0."""
    if isinstance(region, (Cone, Sector, HalfPlane)):
        return region
    if isinstance(region, Disc) and abs(region.center) <= region.radius + region.tol:
        return Disc(abs(region.center) + region.radius, tol=region.tol)
    return StarHull(region, tol=region.tol)


@dataclass(frozen=True)
class ForbiddenRegion(Region):
    """Image of star_hull(X) minus the origin under z -> -1/z.

    A frequency response avoiding this region certifies the separation
    side of the fixed-axis stability test; its complement is the
    admissible region.
    """

    source: Region
    tol: float = DEFAULT_TOL
    kind = "forbidden"

    def __post_init__(self):
        object.__setattr__(self, "_star", star_hull(self.source))

    def margin(self, z):
        """Signed radial clearance: the forbidden set is closed under
        outward scaling, so each ray meets it in [mu0, inf); the margin is
        (1 - mu0)|z| (positive inside).  The origin is never forbidden;
        its clearance is 1/sup|star| (an epsilon for unbounded regions)."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=float)
        _, hi = self._star.gamma_bounds()
        zero_clear = 1.0 / hi if np.isfinite(hi) and hi > 0 else 1e-9
        for i, w in enumerate(flat):
            if abs(w) <= 1e-14:
                out[i] = -zero_clear
                continue
            ivs = self.ray_intervals(w)
            mu0 = min((lo for lo, _ in ivs), default=math.inf)
            out[i] = (1.0 - mu0) * abs(w) if np.isfinite(mu0) else -_BIG
        return out.reshape(z.shape)

    def contains(self, z, tol: float | None = None):
        t = self.tol if tol is None else tol
        arr, scalar = _as_complex_array(z)
        flat = arr.ravel()
        out = np.zeros(flat.shape, dtype=bool)
        for i, w in enumerate(flat):
            if abs(w) <= 1e-14:
                out[i] = False
            else:
                out[i] = bool(self._star.contains(-1.0 / w, tol=t))
        out = out.reshape(arr.shape)
        return bool(out) if scalar else out

    def gamma_bounds(self):
        lo, hi = self._star.gamma_bounds()
        glo = 1.0 / hi if hi > 0 and np.isfinite(hi) else 0.0
        return glo, math.inf

    def ray_intervals(self, z):
        ivs = self._star.ray_intervals(complex(-1.0 / z))
        out = []
        for lo, hi in ivs:
            if hi <= 0:
                continue
            new_lo = 1.0 / hi if np.isfinite(hi) and hi > 0 else 0.0
            new_hi = 1.0 / lo if lo > 0 else math.inf
            out.append((new_lo, new_hi))
        return _merge_union(out)

    def to_dict(self):
        return {"kind": "forbidden", "source": self.source.to_dict(), "tol": self.tol}


def forbidden_region(region: Region) -> ForbiddenRegion:
    """Region that the mirrored frequency response must avoid: the image
    of the punctured star hull of ``region`` under z -> -1/z."""
    return ForbiddenRegion(region, tol=region.tol)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

_KINDS = {}


def region_from_dict(d: dict) -> Region:
    kind = d["kind"]
    tol = float(d.get("tol", DEFAULT_TOL))
    if kind == "disc":
        c = d.get("center", [0.0, 0.0])
        return Disc(float(d["radius"]), complex(c[0], c[1]), tol=tol)
    if kind == "cone":
        return Cone(float(d["alpha"]), float(d["beta"]), tol=tol)
    if kind == "sector":
        return Sector(float(d["gamma"]), float(d["alpha"]), float(d["beta"]), tol=tol)
    if kind == "half_plane":
        return HalfPlane(float(d["theta"]), tol=tol)
    if kind == "point_set":
        return PointSet(tuple(complex(p[0], p[1]) for p in d["points"]), tol=tol)
    if kind == "annulus_sector":
        return AnnulusSector(
            tuple(d["gammas"]),
            tuple(tuple(tuple(p) for p in circle) for circle in d["intervals"]),
            tol=tol,
        )
    if kind == "union":
        return Union(tuple(region_from_dict(m) for m in d["members"]), tol=tol)
    if kind == "intersection":
        return Intersection(tuple(region_from_dict(m) for m in d["members"]), tol=tol)
    if kind == "complement":
        return Complement(region_from_dict(d["member"]), tol=tol)
    if kind == "mirrored":
        return Mirrored(region_from_dict(d["member"]), float(d["theta"]), tol=tol)
    if kind == "star_hull":
        return StarHull(region_from_dict(d["member"]), tol=tol)
    if kind == "forbidden":
        return ForbiddenRegion(region_from_dict(d["source"]), tol=tol)
    raise ValueError(f"unknown region kind {kind!r}")


def region_from_json(text: str) -> Region:
    return region_from_dict(json.loads(text))
