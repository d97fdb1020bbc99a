"""Matrix robust nonsingularity against region-induced uncertainty sets.

A matrix G is robustly nonsingular w.r.t. a set of matrices when
det(I + G D) != 0 for every member D.  For sets induced by a region of
the SRG plane (all matrices whose angled SRG stays inside the region),
nonsingularity is decided by separation between the inverse angled SRG of
-G and the region; failures are made concrete by an explicit witness:
a two-block member aligned against G by a unitary so that I + G D is
exactly singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dwshell as dw
from . import geometry as geo
from .dwshell import ComplexMatrix, _as_matrix
from .geometry import theta_conjugate

DET_TOL = 1e-8
BOUNDARY_BAND = 1e-6


@dataclass(frozen=True)
class UncertaintySpec:
    """Region-induced matrix uncertainty: fixed mirror axis or free axis.

    In fixed-axis mode only the symmetric part of the region is active,
    because angled SRGs are inherently symmetric about their axis.
    """

    region: geo.Region
    matrix_size: int
    mode: str = "theta"          # "theta" | "general"
    theta: float = 0.0

    def active_region(self) -> geo.Region:
        if self.mode == "theta":
            return geo.symmetrize(self.region, self.theta, "part")
        return self.region


@dataclass
class MrnVerdict:
    holds: bool
    margin: float
    method: str
    witness: np.ndarray | None = None
    witness_det: float = math.nan
    boundary: bool = False
    exact: bool = True
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "holds": bool(self.holds),
            "margin": float(self.margin),
            "method": self.method,
            "boundary": bool(self.boundary),
            "exact": bool(self.exact),
        }
        if self.witness is not None:
            out["witness"] = ComplexMatrix(self.witness).to_dict()
            out["witness_det"] = float(self.witness_det)
        return out


# ---------------------------------------------------------------------------
# witness constructions
# ---------------------------------------------------------------------------


def witness_block_pair(s: complex, theta: float, m: int, n: int) -> np.ndarray:
    """blkdiag(s I_m, s_theta I_{n-m}): a member whose angled SRG is the
    mirror pair {s, s_theta}."""
    if not 1 <= m <= n - 1:
        raise ValueError("block sizes require 1 <= m <= n-1")
    st = complex(theta_conjugate(s, theta))
    return np.diag([s] * m + [st] * (n - m)).astype(complex)


def witness_scalar(z: complex, n: int, theta: float = 0.0) -> np.ndarray:
    """-(1/z_theta) I_n: the matrix that breaks necessity for a region
    containing z but not its mirror."""
    if z == 0:
        raise ValueError("z must be nonzero")
    zt = complex(theta_conjugate(z, theta))
    return (-1.0 / zt) * np.eye(n, dtype=complex)


def witness_svd_disc(G, gamma: float) -> np.ndarray:
    """Gain-ball member -(1/sigma_max) v1 u1* making I + G D singular;
    requires sigma_max(G) >= 1/gamma so the member is inside the ball."""
    g = _as_matrix(G)
    u, s, vh = np.linalg.svd(g)
    if s[0] < 1.0 / gamma - 1e-12:
        raise ValueError("largest singular value below 1/gamma: no disc witness")
    return -(1.0 / s[0]) * np.outer(vh[0].conj(), u[:, 0].conj())


def witness_construct(kind: str, **kw) -> np.ndarray:
    """Dispatch by name: block_pair(s, theta, m, n), scalar(z, n, theta),
    svd_disc(G, gamma)."""
    if kind == "block_pair":
        return witness_block_pair(kw["s"], kw["theta"], kw.get("m", 1), kw["n"])
    if kind == "scalar":
        return witness_scalar(kw["z"], kw["n"], kw.get("theta", 0.0))
    if kind == "svd_disc":
        return witness_svd_disc(kw["G"], kw["gamma"])
    raise ValueError(f"unknown witness kind {kind!r}")


def _complete_unitary(cols_from: np.ndarray, cols_to: np.ndarray) -> np.ndarray:
    """Unitary U with U a_i = b_i, assuming the two column families share
    their Gram matrix; the map is completed arbitrarily off the spans."""
    n = cols_from.shape[0]

    def gram_schmidt(cols):
        basis = []
        for c in cols.T:
            v = c.astype(complex)
            for b in basis:
                v = v - b * (b.conj() @ v)
            nv = np.linalg.norm(v)
            if nv > 1e-10:
                basis.append(v / nv)
        return np.column_stack(basis) if basis else np.zeros((n, 0), dtype=complex)

    qa = gram_schmidt(cols_from)
    qb = gram_schmidt(cols_to)
    if qa.shape[1] != qb.shape[1]:
        raise np.linalg.LinAlgError("span dimensions disagree")

    def complete(q):
        for k in range(n):
            if q.shape[1] == n:
                break
            e = np.zeros(n, dtype=complex)
            e[k] = 1.0
            v = e - q @ (q.conj().T @ e)
            nv = np.linalg.norm(v)
            if nv > 1e-10:
                q = np.concatenate([q, (v / nv)[:, None]], axis=1)
        return q

    fa, fb = complete(qa), complete(qb)
    if fa.shape[1] != n or fb.shape[1] != n:
        raise np.linalg.LinAlgError("basis completion failed")
    return fb @ fa.conj().T


def aligned_witness(G, u_g: np.ndarray, theta: float,
                    region: geo.Region | None = None,
                    m: int = 1) -> tuple[np.ndarray, float] | None:
    """Member matrix making I + G D singular, built from a unit vector
    whose inverted shell point of -G lands inside the region.

    The two-block member carrying the matched shell point is rotated by a
    unitary aligning its shell chord against the shell of -G; the
    alignment is exact because the relevant Gram matrices agree.
    Returns (witness, |det(I + G witness)|) or None when degenerate.
    """
    g = _as_matrix(G)
    n = g.shape[0]
    u = np.asarray(u_g, dtype=complex).reshape(n)
    u = u / np.linalg.norm(u)
    gu = g @ u
    mu = float((gu.conj() @ gu).real)
    if mu <= dw.NU_FLOOR:
        return None
    gval = complex(u.conj() @ (-g @ u))
    w_inv = np.conj(gval) / mu
    nu_inv = 1.0 / mu
    z_hi, z_lo = dw.project_theta((w_inv, nu_inv), theta)
    z_t = complex(z_hi)
    if region is not None:
        # prefer the pair element inside the region
        if not region.contains(z_t) and region.contains(complex(z_lo)):
            z_t = complex(z_lo)
    zt_mirror = complex(theta_conjugate(z_t, theta))
    if n == 1:
        cand = np.array([[w_inv]], dtype=complex)
        detv = abs(np.linalg.det(np.eye(1) + g @ cand))
        return cand, float(detv)
    delta0 = witness_block_pair(z_t, theta, m, n)
    denom = zt_mirror - z_t
    lam2 = 0.0 if abs(denom) < 1e-14 else float(np.real((w_inv - z_t) / denom))
    lam2 = min(max(lam2, 0.0), 1.0)
    u_d = np.zeros(n, dtype=complex)
    u_d[0] = math.sqrt(max(1.0 - lam2, 0.0))
    u_d[m] = math.sqrt(max(lam2, 0.0))
    sq_nu = math.sqrt(nu_inv)
    p = u_d / sq_nu
    q = -(delta0 @ u_d) / sq_nu
    try:
        U = _complete_unitary(np.column_stack([gu, u]), np.column_stack([p, q]))
    except np.linalg.LinAlgError:
        return None
    wit = U.conj().T @ delta0 @ U
    detv = abs(np.linalg.det(np.eye(n) + g @ wit))
    return wit, float(detv)


def _det_scale(G, D) -> float:
    g, d = _as_matrix(G), _as_matrix(D)
    n = g.shape[0]
    prod = np.linalg.norm(g, 2) * np.linalg.norm(d, 2)
    return max(1.0, (1.0 + prod) ** max(n - 1, 1))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _angle_violation_vector(G, theta_m, psi, nu_lo=None, rng=None):
    """Unit vector whose shell point violates the angle (and optional
    height) bound, refined by local ascent; None when none is sampled."""
    g = _as_matrix(G)
    rng = rng or np.random.default_rng(0)
    cloud = dw.dw_sample(g, 2048, 256, rng=rng, keep_vectors=True)
    t = (np.exp(-1j * theta_m) * cloud.z).real
    nu = cloud.nu
    keep = nu > dw.NU_FLOOR
    if nu_lo:
        keep &= nu >= nu_lo * (1 - 1e-9)
    if not keep.any():
        return None
    ang = np.arccos(np.clip(t[keep] / np.sqrt(nu[keep]), -1, 1))
    idx_all = np.flatnonzero(keep)
    order = np.argsort(ang)[::-1][:6]
    best_u, best_ang = None, -1.0
    k = g.conj().T @ g
    h = dw._hermitian_parts(np.exp(-1j * theta_m) * g)[0]
    for o in order:
        u0 = cloud.vectors[:, idx_all[o]]
        u, val = dw._ascend_angle(g, theta_m, u0)
        nuv = float((u.conj() @ (k @ u)).real)
        if nu_lo and nuv < nu_lo * (1 - 1e-9):
            # ascent left the height range; fall back to the raw sample
            u = u0
            nuv = float((u.conj() @ (k @ u)).real)
            if nuv <= dw.NU_FLOOR:
                continue
            val = float((u.conj() @ (h @ u)).real) / math.sqrt(nuv)
        a = math.acos(min(max(val, -1.0), 1.0)) if nuv > dw.NU_FLOOR else -1.0
        if a > best_ang:
            best_ang, best_u = a, u
    if best_ang > psi:
        return best_u
    return None


def mrn_check_named(G, shape: str, gamma: float | None = None,
                    alpha: float | None = None, beta: float | None = None,
                    rng: np.random.Generator | None = None) -> MrnVerdict:
    """Nonsingularity of I + G D against the disc, cone, or sector
    uncertainty set, decided by the exact gain/angle characterisations."""
    g = _as_matrix(G)
    n = g.shape[0]
    rng = rng or np.random.default_rng(0)
    if shape == "disc":
        if gamma is None or gamma <= 0:
            raise ValueError("disc shape needs gamma > 0")
        smax = float(np.linalg.svd(g, compute_uv=False)[0])
        margin = 1.0 / gamma - smax
        holds = margin > 0
        verdict = MrnVerdict(holds, margin, "gain bound (exact)",
                             boundary=abs(margin) <= BOUNDARY_BAND * (1 + smax))
        if not holds:
            wit = witness_svd_disc(g, gamma)
            verdict.witness = wit
            verdict.witness_det = abs(np.linalg.det(np.eye(n) + g @ wit))
        return verdict
    if shape not in ("cone", "sector"):
        raise ValueError("shape must be disc, cone, or sector")
    if alpha is None or beta is None or beta < alpha:
        raise ValueError("cone/sector shapes need alpha <= beta")
    theta_m = -(alpha + beta) / 2.0
    psi = math.pi - (beta - alpha) / 2.0
    nu_lo = None
    label = "angle bound (certified)"
    if shape == "sector":
        if gamma is None or gamma <= 0:
            raise ValueError("sector shape needs gamma > 0")
        nu_lo = (1.0 / gamma) ** 2
        label = "mixed gain-angle bound (certified)"
    if psi <= 0:
        return MrnVerdict(bool(np.linalg.norm(g) == 0), -math.pi, "cone spans plane")
    margin = dw.cone_containment_margin(g, theta_m, psi, nu_lo=nu_lo)
    scale = 1.0 + float(np.linalg.svd(g, compute_uv=False)[0])
    verdict = MrnVerdict(margin > 0, margin, label,
                         boundary=abs(margin) <= BOUNDARY_BAND * scale)
    if margin <= 0:
        u = _angle_violation_vector(g, theta_m, psi, nu_lo=nu_lo, rng=rng)
        if u is not None and n >= 2:
            theta_prime = (alpha + beta) / 2.0
            target = geo.Cone(alpha, beta) if shape == "cone" else geo.Sector(
                gamma, alpha, beta
            )
            out = aligned_witness(g, u, theta_prime, region=target)
            if out is not None and out[1] < DET_TOL * _det_scale(g, out[0]):
                verdict.witness, verdict.witness_det = out
    return verdict


def _separation_scan(G, region: geo.Region, theta: float, n_random: int,
                     n_directions: int, rng) -> tuple[float, np.ndarray | None]:
    """Sampled clearance of the inverse angled SRG of -G from the region;
    returns (clearance, violating shell vector or None)."""
    g = _as_matrix(G)
    cloud = dw.dw_sample(-g, n_random, n_directions, rng=rng, keep_vectors=True)
    keep = cloud.nu > dw.NU_FLOOR
    z, nu = cloud.z[keep], cloud.nu[keep]
    vecs = cloud.vectors[:, keep]
    if z.size == 0:
        lo, hi = region.gamma_bounds()
        return (1.0 / hi if np.isfinite(hi) and hi > 0 else 1e-9), None
    w = np.conj(z) / nu
    nu_inv = 1.0 / nu
    hi_pts, lo_pts = dw.project_theta((w, nu_inv), theta)
    margins = np.maximum(region.margin(hi_pts), region.margin(lo_pts))
    worst = int(np.argmax(margins))
    clearance = -float(margins[worst])
    if margins[worst] >= -region.tol:
        return clearance, vecs[:, worst]
    return clearance, None


def mrn_check_theta(G, spec: UncertaintySpec,
                    n_random: int = 4096, n_directions: int = 1024,
                    rng: np.random.Generator | None = None) -> MrnVerdict:
    """Fixed-axis check: separation of the inverse angled SRG of -G from
    the symmetric part of the region is necessary and sufficient."""
    g = _as_matrix(G)
    n = g.shape[0]
    rng = rng or np.random.default_rng(0)
    if np.linalg.norm(g) == 0:
        lo, hi = spec.active_region().gamma_bounds()
        margin = 1.0 / hi if np.isfinite(hi) and hi > 0 else 1e-9
        return MrnVerdict(True, margin, "zero matrix: I + G D = I")
    active = spec.active_region()
    clearance, bad_u = _separation_scan(
        g, active, spec.theta, n_random, n_directions, rng
    )
    verdict = MrnVerdict(
        clearance > 0,
        clearance,
        "fixed-axis separation (sampled)",
        boundary=abs(clearance) <= BOUNDARY_BAND,
    )
    if bad_u is not None and n >= 2:
        out = aligned_witness(g, bad_u, spec.theta, region=active)
        if out is not None and out[1] < DET_TOL * _det_scale(g, out[0]):
            verdict.witness, verdict.witness_det = out
    elif bad_u is not None and n == 1:
        w = complex(-1.0 / g[0, 0])
        wit = np.array([[w]], dtype=complex)
        if active.contains(w) or active.contains(complex(theta_conjugate(w, spec.theta))):
            verdict.witness = wit
            verdict.witness_det = abs(np.linalg.det(np.eye(1) + g @ wit))
    return verdict


def mrn_check_general(G, spec: UncertaintySpec, theta: float | None = None,
                      n_gamma: int = 256, n_random: int = 4096,
                      n_directions: int = 1024,
                      rng: np.random.Generator | None = None) -> MrnVerdict:
    """Free-axis check: separation from the circular hull about the
    chosen axis is sufficient; it is exact precisely when the region is
    symmetric about the axis and circularly connected."""
    g = _as_matrix(G)
    rng = rng or np.random.default_rng(0)
    th = spec.theta if theta is None else theta
    region = spec.region
    hull = geo.circular_hull(region, th, n_gamma=n_gamma)
    exact = geo.is_theta_symmetric(region, th, rng=rng) and \
        geo.is_theta_circularly_connected(region, th)
    if np.linalg.norm(g) == 0:
        lo, hi = hull.gamma_bounds()
        margin = 1.0 / hi if np.isfinite(hi) and hi > 0 else 1e-9
        return MrnVerdict(True, margin, "zero matrix: I + G D = I", exact=exact)
    clearance, bad_u = _separation_scan(g, hull, th, n_random, n_directions, rng)
    verdict = MrnVerdict(
        clearance > 0,
        clearance,
        "free-axis hull separation (sampled)",
        boundary=abs(clearance) <= BOUNDARY_BAND,
        exact=exact,
    )
    if bad_u is not None and g.shape[0] >= 2:
        # a witness only exists when the hit lands in the symmetric part
        active = geo.symmetrize(region, th, "part")
        out = aligned_witness(g, bad_u, th, region=active)
        if out is not None and out[1] < DET_TOL * _det_scale(g, out[0]):
            wit_srg = dw.srg_theta_sample(out[0], th, 128, 32, rng=rng)
            if np.all(region.contains(wit_srg, tol=1e-6)):
                verdict.witness, verdict.witness_det = out
    return verdict


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_batch(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(k, n, n)) + 1j * rng.normal(size=(k, n, n))
    q, r = np.linalg.qr(z)
    d = np.einsum("kii->ki", r)
    return q * (d / np.abs(d))[:, None, :]


def _structured_members(spec: UncertaintySpec, count: int, rng) -> list[np.ndarray]:
    n = spec.matrix_size
    members = []
    if spec.mode == "theta":
        active = spec.active_region()
        pts = active.sample(count, rng)
        for z in pts:
            if rng.uniform() < 0.4 or n == 1:
                members.append(z * np.eye(n, dtype=complex))
            else:
                m = int(rng.integers(1, n))
                members.append(witness_block_pair(complex(z), spec.theta, m, n))
    else:
        pts = spec.region.sample(count, rng)
        for z in pts:
            if rng.uniform() < 0.5 or n == 1:
                members.append(z * np.eye(n, dtype=complex))
                continue
            # pair z with an equal-modulus member point (free mirror axis)
            angs = rng.uniform(-math.pi, math.pi, 64)
            cand = np.abs(z) * np.exp(1j * angs)
            ok = spec.region.contains(cand)
            if ok.any():
                z2 = complex(cand[np.flatnonzero(ok)[0]])
                axis = 0.5 * (np.angle(z) + np.angle(z2))
                m = int(rng.integers(1, n))
                members.append(
                    np.diag([complex(z)] * m + [z2] * (n - m)).astype(complex)
                )
            else:
                members.append(z * np.eye(n, dtype=complex))
    return members


def _inverse_point_margin(g, region, theta, u, both: bool = False):
    """Region margin of the inverse-SRG pair generated by u: the better
    point by default, the worse one when both pair points must belong
    (member construction over a possibly asymmetric region)."""
    norm = np.linalg.norm(u)
    if norm < 1e-12:
        return -math.inf
    u = u / norm
    gu = g @ u
    mu = float((gu.conj() @ gu).real)
    if mu <= dw.NU_FLOOR:
        return -math.inf
    gval = complex(u.conj() @ (-g @ u))
    w = np.conj(gval) / mu
    hi, lo = dw.project_theta((w, 1.0 / mu), theta)
    pair = np.array([hi, lo])
    vals = region.margin(pair)
    return float(np.min(vals) if both else np.max(vals))


def _refine_region_hit(g, region, theta, u0, maxiter: int = 400):
    """Push a shell vector toward the region by direct search on the
    inverse-point margin; returns the refined vector."""
    from scipy import optimize as so

    n = g.shape[0]

    def neg_margin(x):
        u = x[:n] + 1j * x[n:]
        m = _inverse_point_margin(g, region, theta, u, both=True)
        return 1e9 if not np.isfinite(m) else -m

    x0 = np.concatenate([np.asarray(u0).real, np.asarray(u0).imag])
    res = so.minimize(
        neg_margin, x0, method="Nelder-Mead",
        options={"maxiter": maxiter, "fatol": 1e-12, "xatol": 1e-10},
    )
    u = res.x[:n] + 1j * res.x[n:]
    nrm = np.linalg.norm(u)
    return (u / nrm) if nrm > 1e-12 else np.asarray(u0)


def mrn_bruteforce(G, spec: UncertaintySpec, n_samples: int = 2000,
                   n_unitaries: int = 16,
                   rng: np.random.Generator | None = None) -> MrnVerdict:
    """Evidence-only check: scalar and two-block members of the set,
    swept through random unitary conjugations, plus aligned candidates
    built from shell vectors of -G.  A 'holds' from this routine is
    evidence, not proof; a witness below the determinant threshold is a
    definitive failure."""
    g = _as_matrix(G)
    n = g.shape[0]
    rng = rng or np.random.default_rng(0)
    members = _structured_members(spec, max(n_samples // max(n_unitaries, 1), 8), rng)
    eye = np.eye(n)
    best = math.inf
    best_wit = None
    if members:
        deltas = np.stack(members)                        # (M, n, n)
        us = haar_batch(n, max(n_unitaries, 1), rng)      # (K, n, n)
        twisted = np.einsum("kji,mjl,kln->mkin", us.conj(), deltas, us)
        cands = np.concatenate([deltas[:, None, :, :], twisted], axis=1)
        loops = eye[None, None] + np.einsum("ij,mkjl->mkil", g, cands)
        dets = np.abs(np.linalg.det(loops))               # (M, K+1)
        norms = np.linalg.svd(deltas, compute_uv=False)[:, 0]
        gn = np.linalg.norm(g, 2)
        scales = np.maximum(1.0, (1.0 + gn * norms) ** max(n - 1, 1))
        rel = dets / scales[:, None]
        m_i, k_i = np.unravel_index(int(np.argmin(rel)), rel.shape)
        best = float(rel[m_i, k_i])
        best_wit = cands[m_i, k_i]
    # targeted candidates from shell alignment
    if n >= 2 and np.linalg.norm(g) > 0:
        active = spec.active_region()
        cloud = dw.dw_sample(-g, 512, 128, rng=rng, keep_vectors=True)
        keep = cloud.nu > dw.NU_FLOOR
        z, nu = cloud.z[keep], cloud.nu[keep]
        vecs = cloud.vectors[:, keep]
        if z.size:
            w = np.conj(z) / nu
            hi_pts, lo_pts = dw.project_theta((w, 1.0 / nu), spec.theta)
            # a two-block candidate is a member only when both mirror-pair
            # points lie in the region
            margins = np.minimum(active.margin(hi_pts), active.margin(lo_pts))
            order = np.argsort(margins)[::-1]
            seeds = [vecs[:, i] for i in order[:4]]
            refined = [
                _refine_region_hit(g, active, spec.theta, s) for s in seeds[:3]
            ]
            for u in seeds + refined:
                if _inverse_point_margin(g, active, spec.theta, u, both=True) < -active.tol:
                    continue
                out = aligned_witness(g, u, spec.theta, region=active)
                if out is not None:
                    scale = _det_scale(g, out[0])
                    if out[1] / scale < best:
                        best, best_wit = out[1] / scale, out[0]
    found = best < DET_TOL
    verdict = MrnVerdict(
        not found,
        best,
        "structured sampling + unitary sweeps (evidence only)",
        exact=False,
    )
    if found:
        verdict.witness = best_wit
        verdict.witness_det = best * _det_scale(g, best_wit)
    return verdict
