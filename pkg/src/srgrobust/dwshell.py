"""Davis-Wielandt shell machinery.

The shell of a square complex matrix M is the set of pairs
``(<u, M u>/|u|^2, |M u|^2/|u|^2)`` over nonzero vectors u.  It lives above
the paraboloid ``nu >= |z|^2`` and projects onto every angled scaled
relative graph (theta-SRG): the projection about the theta-axis maps a
shell point to the conjugate pair
``exp(i theta) (Re(exp(-i theta) z) +/- i sqrt(nu - Re(exp(-i theta) z)^2))``.

This module samples shells and their inverses, evaluates exact support
functions, computes certified matrix angle bounds, and builds the layered
regions swept out by shells of region-induced uncertainty sets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import theta_conjugate

log = logging.getLogger(__name__)

NU_FLOOR = 1e-14


class DegeneratePointError(ValueError):
    """Raised when inverting a shell point with zero height."""


@dataclass(frozen=True)
class DwPoint:
    """One shell sample: z = <u,Mu>/|u|^2 and nu = |Mu|^2/|u|^2."""

    z: complex
    nu: float

    def __post_init__(self):
        if self.nu < abs(self.z) ** 2 - 1e-9 * max(1.0, abs(self.z) ** 2):
            raise ValueError("shell point violates the paraboloidal bound")


@dataclass
class DwPointCloud:
    """Array-backed collection of shell samples."""

    z: np.ndarray
    nu: np.ndarray
    source: str = ""
    kind: str = "shell"
    vectors: np.ndarray | None = None  # generating unit vectors, when kept

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=complex)
        self.nu = np.asarray(self.nu, dtype=float)
        if self.z.shape != self.nu.shape:
            raise ValueError("z and nu must have the same shape")

    def __len__(self):
        return self.z.size

    @property
    def points(self) -> list[DwPoint]:
        return [DwPoint(complex(a), float(b)) for a, b in zip(self.z, self.nu)]

    def paraboloid_violation(self) -> float:
        """Largest amount by which nu falls below |z|^2 (0 when clean)."""
        return float(np.max(np.abs(self.z) ** 2 - self.nu, initial=0.0))

    def to_csv(self) -> str:
        lines = ["re_z,im_z,nu"]
        for a, b in zip(self.z, self.nu):
            lines.append(f"{float(a.real)!r},{float(a.imag)!r},{float(b)!r}")
        return "\n".join(lines) + "\n"


class ComplexMatrix:
    """Square complex matrix with cached extreme singular values."""

    def __init__(self, entries):
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError("entries must form a square matrix of size >= 1")
        self.m = m
        self._sv = None

    @property
    def n(self) -> int:
        return self.m.shape[0]

    def _singular_values(self):
        if self._sv is None:
            self._sv = np.linalg.svd(self.m, compute_uv=False)
        return self._sv

    @property
    def sigma_max(self) -> float:
        return float(self._singular_values()[0])

    @property
    def sigma_min(self) -> float:
        return float(self._singular_values()[-1])

    def to_dict(self):
        return {"re": self.m.real.tolist(), "im": self.m.imag.tolist()}

    @classmethod
    def from_dict(cls, d):
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        return cls(re + 1j * im)


def _as_matrix(M) -> np.ndarray:
    if isinstance(M, ComplexMatrix):
        return M.m
    m = np.asarray(M, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    return m


def _hermitian_parts(m):
    h_re = 0.5 * (m + m.conj().T)
    h_im = (m - m.conj().T) / 2j
    return h_re, h_im


def _eval_vectors(m, U):
    """Shell coordinates of the columns of U (assumed unit norm)."""
    MU = m @ U
    z = np.einsum("ij,ij->j", U.conj(), MU)
    nu = np.einsum("ij,ij->j", MU.conj(), MU).real
    return z, np.maximum(nu, 0.0)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Roughly uniform directions on the unit 2-sphere, shape (n, 3)."""
    k = np.arange(n, dtype=float)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    c = 1.0 - 2.0 * (k + 0.5) / n
    s = np.sqrt(np.maximum(1.0 - c * c, 0.0))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), c])


def dw_sample(M, n_random: int = 4096, n_directions: int = 1024,
              rng: np.random.Generator | None = None,
              keep_vectors: bool = False) -> DwPointCloud:
    """Sample the shell of M: random unit vectors plus, for each sphere
    direction (a, b, c), the top eigenvector of a*H_re + b*H_im + c*M'M
    (a boundary point in that support direction)."""
    m = _as_matrix(M)
    n = m.shape[0]
    rng = rng or np.random.default_rng()
    if n == 2:
        n_random *= 10  # the size-2 shell can be a hollow surface
    cols = []
    if n_random > 0:
        U = rng.normal(size=(n, n_random)) + 1j * rng.normal(size=(n, n_random))
        U /= np.linalg.norm(U, axis=0, keepdims=True)
        cols.append(U)
    if n_directions > 0 and n >= 2:
        h_re, h_im = _hermitian_parts(m)
        k = m.conj().T @ m
        dirs = fibonacci_sphere(n_directions)
        vecs = np.empty((n, n_directions), dtype=complex)
        for i, (a, b, c) in enumerate(dirs):
            w, v = np.linalg.eigh(a * h_re + b * h_im + c * k)
            vecs[:, i] = v[:, -1]
        cols.append(vecs)
    if n == 1:
        cols.append(np.ones((1, 1), dtype=complex))
    U = np.concatenate(cols, axis=1)
    z, nu = _eval_vectors(m, U)
    cloud = DwPointCloud(z, nu, source=f"matrix{n}x{n}", kind="shell",
                         vectors=U if keep_vectors else None)
    return cloud


def dw_support(M, direction) -> float:
    """Support value of the shell in direction (a, b, c):
    sup over the shell of a*Re z + b*Im z + c*nu."""
    a, b, c = direction
    if a == 0 and b == 0 and c == 0:
        raise ValueError("direction must be nonzero")
    m = _as_matrix(M)
    h_re, h_im = _hermitian_parts(m)
    k = m.conj().T @ m
    return float(np.linalg.eigvalsh(a * h_re + b * h_im + c * k)[-1])


def f_inv(p: DwPoint) -> DwPoint:
    """Shell inversion (z, nu) -> (conj(z)/nu, 1/nu)."""
    if p.nu <= NU_FLOOR:
        raise DegeneratePointError("cannot invert a shell point with nu = 0")
    return DwPoint(np.conj(p.z) / p.nu, 1.0 / p.nu)


def f_inv_cloud(cloud: DwPointCloud) -> DwPointCloud:
    keep = cloud.nu > NU_FLOOR
    z, nu = cloud.z[keep], cloud.nu[keep]
    vec = cloud.vectors[:, keep] if cloud.vectors is not None else None
    return DwPointCloud(np.conj(z) / nu, 1.0 / nu, source=cloud.source,
                        kind="inverse_shell", vectors=vec)


def project_theta(p, theta: float):
    """Project a shell point to its conjugate pair in the SRG plane."""
    if isinstance(p, DwPoint):
        z, nu = p.z, p.nu
    else:
        z, nu = p
    rot = np.exp(1j * theta)
    t = (np.conj(rot) * z).real
    rad2 = nu - t * t
    if np.any(np.asarray(rad2) < -1e-12 * max(1.0, float(np.max(np.asarray(nu))))):
        raise ValueError("point lies below the projection paraboloid")
    r = np.sqrt(np.maximum(rad2, 0.0))
    return rot * (t + 1j * r), rot * (t - 1j * r)


def srg_theta_sample(M, theta: float = 0.0, n_random: int = 4096,
                     n_directions: int = 1024,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Sampled theta-SRG: the projection of shell samples; kernel vectors
    land at the origin."""
    cloud = dw_sample(M, n_random, n_directions, rng=rng)
    hi, lo = project_theta((cloud.z, cloud.nu), theta)
    return np.concatenate([hi, lo])


def inv_srg_theta_sample(M, theta: float = 0.0, n_random: int = 4096,
                         n_directions: int = 1024,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Sampled inverse theta-SRG: projection of the inverted shell, with
    zero-height points dropped."""
    m = _as_matrix(M)
    if np.linalg.norm(m) == 0:
        raise ValueError("inverse SRG of the zero matrix is undefined")
    inv_cloud = f_inv_cloud(dw_sample(m, n_random, n_directions, rng=rng))
    hi, lo = project_theta((inv_cloud.z, inv_cloud.nu), theta)
    return np.concatenate([hi, lo])


# ---------------------------------------------------------------------------
# matrix angle: sampled lower bound and certified upper bound
# ---------------------------------------------------------------------------


def _angle_of_samples(z, nu, theta):
    keep = nu > NU_FLOOR
    t = (np.exp(-1j * theta) * z[keep]).real
    ratio = np.clip(t / np.sqrt(nu[keep]), -1.0, 1.0)
    return np.arccos(ratio)


def _ascend_angle(m, theta, u0, iters=160, step0=0.5):
    """Projected-gradient descent of t/sqrt(nu) from u0 (unit vector)."""
    h = _hermitian_parts(np.exp(-1j * theta) * m)[0]
    k = m.conj().T @ m
    u = u0 / np.linalg.norm(u0)
    step = step0

    def val(u):
        nu = (u.conj() @ (k @ u)).real
        if nu <= NU_FLOOR:
            return np.inf, nu
        return (u.conj() @ (h @ u)).real / math.sqrt(nu), nu

    cur, _ = val(u)
    for _ in range(iters):
        nu = (u.conj() @ (k @ u)).real
        if nu <= NU_FLOOR:
            break
        t = (u.conj() @ (h @ u)).real
        grad = 2 * (h @ u) / math.sqrt(nu) - (t / nu**1.5) * (k @ u)
        grad -= u * (u.conj() @ grad)  # tangent to the sphere
        g = np.linalg.norm(grad)
        if g < 1e-14:
            break
        cand = u - step * grad / g
        cand /= np.linalg.norm(cand)
        new, _ = val(cand)
        if new < cur - 1e-15:
            u, cur = cand, new
            step = min(step * 1.3, 1.0)
        else:
            step *= 0.5
            if step < 1e-10:
                break
    return u, cur


def cone_containment_margin(M, theta: float, psi: float,
                            nu_lo: float | None = None,
                            n_scales: int = 96) -> float:
    """Certified margin of ``t - cos(psi) * sqrt(nu) >= 0`` over the shell
    (restricted to nu >= nu_lo when given), where t = Re(exp(-i theta) z).

    A nonnegative value certifies that every shell point in range keeps
    angular deviation at most psi from the theta-axis.  The joint range of
    (t, nu) over unit vectors is convex, and the violating set
    {t <= cos(psi) sqrt(nu)} is convex as well, so separation is decided
    by the family of lines tangent to the boundary curve: the certificate
    searches ``s > 0`` (and a multiplier for the height restriction) in

        lambda_min(H - (q s / 2) K - (q / (2 s)) I  [+ tau (K - nu_lo I)])

    with H the Hermitian part of exp(-i theta) M, K = M*M, q = cos(psi).
    """
    m = _as_matrix(M)
    h = _hermitian_parts(np.exp(-1j * theta) * m)[0]
    k = m.conj().T @ m
    sv = np.linalg.svd(m, compute_uv=False)
    smax = max(float(sv[0]), 1e-300)
    smin = float(sv[-1])
    q = math.cos(psi)
    eye = np.eye(m.shape[0])
    restricted = nu_lo is not None and nu_lo > 0
    con = (k - nu_lo * eye) if restricted else None
    if restricted:
        tau_top = 1e6 * (1.0 + np.linalg.norm(h, 2)) / (1.0 + nu_lo)
        taus = np.concatenate([[0.0], np.geomspace(1e-8 * tau_top, tau_top, 23)])
    else:
        taus = np.array([0.0])

    def batch(ss, tt):
        stack = (
            h[None, :, :]
            - (q * ss / 2.0)[:, None, None] * k[None, :, :]
            - (q / (2.0 * ss))[:, None, None] * eye[None, :, :]
        )
        if restricted:
            stack = stack - tt[:, None, None] * con[None, :, :]
        return np.linalg.eigvalsh(stack)[:, 0]

    def sweep(ss):
        # the height-restriction multiplier always maximises per s
        # (lossless S-procedure); evaluate the whole (s, tau) block at once
        rep = np.repeat(ss, len(taus))
        til = np.tile(taus, len(ss))
        vals = batch(rep, til).reshape(len(ss), len(taus)).max(axis=1)
        return vals

    def tau_polish(s, base):
        if not restricted:
            return base
        vals = batch(np.full(taus.shape, s), taus)
        j = int(np.argmax(vals))
        t0 = max(taus[j], 1e-8 * tau_top)
        fine = np.concatenate([[0.0], np.geomspace(t0 / 32.0, t0 * 32.0, 31)])
        return float(batch(np.full(fine.shape, s), fine).max())

    if abs(q) < 1e-15:
        s_pin = 1.0 / smax
        return tau_polish(s_pin, float(sweep(np.array([s_pin]))[0]))
    s_lo = 0.05 / smax
    s_hi = 20.0 / max(smin, smax * 1e-9)
    # angle below pi/2: some tangent separates (maximise over s);
    # angle above pi/2: every tangent must hold (minimise over s)
    sign = 1.0 if q > 0 else -1.0
    grid = np.geomspace(s_lo, s_hi, n_scales)
    best_s, best_v = 1.0 / smax, -math.inf
    for window in (0.25, 0.03, 0.004):
        vals = sweep(grid)
        j = int(np.argmax(sign * vals))
        best_s, best_v = float(grid[j]), float(vals[j])
        lg = math.log(best_s)
        grid = np.exp(np.linspace(lg - window, lg + window, 48))
    return tau_polish(best_s, best_v)


@dataclass(frozen=True)
class ThetaAngleResult:
    value: float      # sample maximum (lower bound)
    lower: float
    upper: float      # certified bound
    argmax_vector: np.ndarray | None = None

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def theta_angle_interval(M, theta: float, tol: float = 1e-3,
                         n_random: int = 2048, n_directions: int = 512,
                         rng: np.random.Generator | None = None) -> ThetaAngleResult:
    """Largest angular deviation of the theta-SRG from the theta-axis,
    as a sampled lower bound plus a certified upper bound."""
    m = _as_matrix(M)
    if np.linalg.norm(m) == 0:
        raise ValueError("the zero matrix has no angle")
    rng = rng or np.random.default_rng(0)
    cloud = dw_sample(m, n_random, n_directions, rng=rng, keep_vectors=True)
    angles = _angle_of_samples(cloud.z, cloud.nu, theta)
    # targeted candidates: eigenvectors of the rotated Hermitian part
    h = _hermitian_parts(np.exp(-1j * theta) * m)[0]
    _, hv = np.linalg.eigh(h)
    U_extra = hv
    z2, nu2 = _eval_vectors(m, U_extra)
    angles2 = _angle_of_samples(z2, nu2, theta)
    all_u = np.concatenate([cloud.vectors, U_extra], axis=1)
    all_ang = np.concatenate([angles, angles2])
    if all_ang.size == 0:
        return ThetaAngleResult(0.0, 0.0, 0.0, None)
    order = np.argsort(all_ang)[::-1][:8]
    lower, best_u = float(all_ang.max()), all_u[:, order[0]]
    k = m.conj().T @ m
    for idx in order:
        u, val = _ascend_angle(m, theta, all_u[:, idx])
        nu = (u.conj() @ (k @ u)).real
        if nu > NU_FLOOR:
            ang = math.acos(min(max(val, -1.0), 1.0))
            if ang > lower:
                lower, best_u = ang, u
    # certified upper bound by bisection on the containment certificate
    lo_psi, hi_psi = lower, math.pi
    if cone_containment_margin(m, theta, lower) >= -1e-12:
        hi_psi = lower
    while hi_psi - lo_psi > max(tol * 0.5, 1e-7):
        mid = 0.5 * (lo_psi + hi_psi)
        if cone_containment_margin(m, theta, mid) >= -1e-12:
            hi_psi = mid
        else:
            lo_psi = mid
    upper = hi_psi
    if upper - lower > tol:
        log.debug("theta_angle gap %.3e exceeds tol %.1e", upper - lower, tol)
    return ThetaAngleResult(lower, lower, max(upper, lower), best_u)


def theta_angle(M, theta: float = 0.0, tol: float = 1e-3, **kw) -> float:
    """Sampled maximum angular deviation of the theta-SRG (see
    `theta_angle_interval` for the certified two-sided version)."""
    return theta_angle_interval(M, theta, tol, **kw).value


# ---------------------------------------------------------------------------
# shell unions over region-induced uncertainty sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DwLayer:
    """Planar cross-section of a shell union at height gamma^2."""

    gamma: float
    region: geo.Region          # active planar region bound on the circle cut
    theta: float | None         # None: full convex hull mode
    n_search: int = 512

    def contains(self, z: complex, tol: float = 1e-6) -> bool:
        g = self.gamma
        if self.theta is not None:
            w = np.exp(-1j * self.theta) * z
            u0, v0 = w.real, abs(w.imag)
            top2 = g * g - u0 * u0
            if top2 < -tol * max(1.0, g * g):
                return False
            top = math.sqrt(max(top2, 0.0))
            if v0 > top + tol:
                return False
            vv = np.linspace(v0, top, self.n_search)
            cand = np.exp(1j * self.theta) * (u0 + 1j * vv)
            ok = self.region.contains(cand, tol=tol) & (np.abs(cand) <= g + tol)
            if ok.any():
                return True
            # the chord may also be generated from the mirrored side
            ok = self.region.contains(theta_conjugate(cand, self.theta), tol=tol)
            return bool(ok.any())
        pts = _cut_samples(self.region, g, self.n_search)
        if pts.size == 0:
            return False
        dirs = np.exp(1j * np.linspace(0, 2 * math.pi, 256, endpoint=False))
        zp = (np.conj(dirs) * z).real
        hp = np.max((np.conj(dirs)[:, None] * pts[None, :]).real, axis=1)
        return bool(np.all(zp <= hp + tol * max(1.0, g)))


def _cut_samples(region, gamma, n_search):
    rr = np.linspace(0.0, gamma, max(n_search // 8, 16) + 1)[1:]
    aa = np.linspace(-math.pi, math.pi, n_search, endpoint=False)
    zz = (rr[:, None] * np.exp(1j * aa)[None, :]).ravel()
    return zz[region.contains(zz)]


@dataclass(frozen=True)
class DwUnionRegion:
    """Union of shells of all uncertainty members, as stacked layers.

    In fixed-axis mode each height gamma^2 carries the chordal hull of the
    circle cut of the symmetric part of the region; in free-axis mode it
    carries the convex hull of the circle cut.  For 1x1 matrices the
    layers collapse onto the paraboloid.
    """

    region: geo.Region
    theta: float | None
    matrix_size: int
    n_gamma: int = 256
    layers: tuple = field(default=())

    def __post_init__(self):
        active = self.region
        if self.theta is not None:
            active = geo.symmetrize(self.region, self.theta, "part")
        lo, hi = active.gamma_bounds()
        if not np.isfinite(hi):
            hi = 16.0 * max(1.0, lo)
        grid = np.linspace(max(lo, 0.0), hi, self.n_gamma)
        layers = tuple(
            (float(g), DwLayer(float(g), active, self.theta)) for g in grid if g > 0
        )
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "_active", active)

    def gamma_range(self):
        lo, hi = self._active.gamma_bounds()
        return lo, hi

    def contains(self, z: complex, nu: float, tol: float = 1e-6) -> bool:
        if nu < -tol:
            return False
        g = math.sqrt(max(nu, 0.0))
        lo, hi = self.gamma_range()
        scale = max(1.0, hi if np.isfinite(hi) else 1.0)
        if g < lo - tol * scale or (np.isfinite(hi) and g > hi + tol * scale):
            return False
        if abs(z) ** 2 > nu + tol * max(1.0, nu):
            return False
        if self.matrix_size == 1 and abs(abs(z) ** 2 - nu) > tol * max(1.0, nu):
            return False
        return DwLayer(g, self._active, self.theta).contains(z, tol=tol)


def dw_union_region(region: geo.Region, theta: float | None = None,
                    n_gamma: int = 256, matrix_size: int = 2) -> DwUnionRegion:
    """Layered description of the shells of every matrix whose theta-SRG
    (fixed-axis mode) or some rotated SRG (free-axis mode, theta=None)
    stays inside the region."""
    return DwUnionRegion(region, theta, matrix_size, n_gamma)


# ---------------------------------------------------------------------------
# support-function separation of two shells
# ---------------------------------------------------------------------------


def shell_separation_margin(A, B, n_directions: int = 512,
                            refine: int = 48) -> tuple[float, np.ndarray]:
    """Best separating-direction gap between the shells of A and B.

    Positive gap certifies the shells are disjoint: some direction d has
    sup_{shell A} <d, p> + sup_{shell B} <-d, p> < 0.  Returns the widest
    gap found (normalised by |d|) and the direction achieving it.
    """
    a, b = _as_matrix(A), _as_matrix(B)

    def gap(d):
        d = np.asarray(d, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0:
            return -math.inf
        d = d / norm
        return -(dw_support(a, d) + dw_support(b, -d))

    dirs = fibonacci_sphere(n_directions)
    gaps = np.array([gap(d) for d in dirs])
    best = int(np.argmax(gaps))
    d0, g0 = dirs[best].copy(), gaps[best]
    step = 0.3
    for _ in range(refine):
        improved = False
        for k in range(3):
            for s in (+step, -step):
                cand = d0.copy()
                cand[k] += s
                g = gap(cand)
                if g > g0:
                    d0, g0 = cand / np.linalg.norm(cand), g
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-6:
                break
    return float(g0), d0
