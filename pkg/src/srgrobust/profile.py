"""Angle-gain robustness profile of a stable LTI system.

For each axis direction theta the profile records, over a grid of gain
levels Gamma, the smallest cone half-angle Phi such that the union of the
origin-centred gain disc and the symmetric cone about the theta-axis
covers the frequencywise theta-SRG of the system, certified through the
matrix-inequality layer:

  step 1  peak gain (shared across directions, the top gain level);
  step 2  smallest pure cone per direction, by bisection over inscribed
          disc families with an accelerated shrink step;
  step 3  mixed gain-angle refinement per gain level, maximising the
          blending weight of gain-disc and angle-disc certificates.

The complementary surface (theta, pi - phi, 1/gamma) reads off robustness
against sector-bounded uncertainty: each of its points certifies robust
stability for the sector with the mirrored angular interval.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import lmi
from .lti import StateSpaceSystem

FLAG_REGULAR = "regular"
FLAG_CONIC = "conic-through-origin"
FLAG_DEGENERATE = "degenerate-gain-only"
FLAG_SOLVER = "solver-failure"


@dataclass
class ThetaSlice:
    theta: float
    gamma: np.ndarray
    phi: np.ndarray
    lam: np.ndarray
    flag: str


@dataclass(frozen=True)
class ProfilePoint:
    """One surface sample: the smallest half-angle phi such that the
    union of the gain disc of radius gamma and the cone of half-angle phi
    about the theta-axis covers the frequencywise theta-SRG."""

    theta: float
    phi: float
    gamma: float


@dataclass
class ThetaProfile:
    thetas: np.ndarray
    slices: list[ThetaSlice]
    meta: dict = field(default_factory=dict)

    @property
    def hinf(self) -> float:
        return float(self.meta.get("hinf", math.nan))

    def slice_at(self, theta: float) -> ThetaSlice:
        k = int(np.argmin(np.abs(np.asarray(self.thetas) - theta)))
        return self.slices[k]

    def points(self):
        """Iterate the surface as ProfilePoint samples."""
        for s in self.slices:
            for g, ph in zip(s.gamma, s.phi):
                yield ProfilePoint(float(s.theta), float(ph), float(g))


def refine_brackets(gamma: np.ndarray, phi: np.ndarray, lam: np.ndarray,
                    k: int) -> tuple[float, float]:
    """Bisection bracket for the angle at gain level k (0-based, k >= 1).

    The upper end comes from the previous level's blended certificate:
    its certified disc crosses the circle of radius gamma[k] at
    arccos(zeta * cos(phi[k-1])) with the gain-ratio factor zeta.  The
    lower end is the half-angle at which the inscribed disc through the
    union's corner points can first reach the top gain circle, the root
    of (1 + sin(phi)) / cos(phi) = gamma[-1] / gamma[k].
    """
    if k < 1:
        raise ValueError("k must index a refinement level (k >= 1)")
    lam_prev = float(lam[k - 1])
    g_k, g_prev, g_top = float(gamma[k]), float(gamma[k - 1]), float(gamma[-1])
    if g_k <= 0 or g_prev <= 0:
        raise ValueError("gain levels must be positive")
    ratio = g_top / g_k
    if ratio <= 1.0:
        phi_bst = 0.0
    else:
        phi_bst = float(
            optimize.brentq(
                lambda p: (1.0 + math.sin(p)) - ratio * math.cos(p),
                0.0,
                math.pi / 2 - 1e-12,
                xtol=1e-12,
            )
        )
    if lam_prev <= 0:
        return 0.0, math.pi / 2  # no usable certificate: full bracket
    zeta = (g_k / g_prev) / (2.0 * lam_prev) + (1.0 - 1.0 / (2.0 * lam_prev)) * (
        g_prev / g_k
    )
    arg = zeta * math.cos(float(phi[k - 1]))
    phi_wst = math.acos(min(max(arg, -1.0), 1.0))
    return phi_bst, max(phi_wst, phi_bst)


def _phi_lambda_bisection(ws, theta, g_k, g_top, phi_lo, phi_hi, err, stats):
    """Minimise the cone half-angle at gain level g_k by bisection,
    maximising the blend weight at each test angle.

    Angles within 1e-4 of the half-plane are solved through the
    half-plane-limit family: the finite disc centre grows like
    1/cos(phi) there and would poison the conic data."""
    cap = math.pi / 2
    limit_band = max(min(err / 2, 1e-3), 1e-4)

    def solve_at(phi):
        phi = min(phi, cap)
        if phi > math.pi / 2 - limit_band:
            out = _gain_halfplane_blend(ws, theta, g_k)
            return out
        block = lmi.theta_d(theta, g_k / math.cos(phi), g_k * math.tan(phi), ws)
        return lmi.max_lambda_mixed(ws, theta, g_k, block, workspace=ws)

    hi = min(phi_hi, cap)
    lo = min(phi_lo, hi)
    out = solve_at(hi)
    if out is None:
        # the bracket top failed numerically: retry toward the half-plane
        stats["bracket_expansions"] += 1
        lo, hi = hi, cap
        out = solve_at(hi)
        if out is None:
            return math.pi / 2, float("nan"), False
    lam_best, phi_best = out[0], hi
    while hi - lo > err:
        mid = 0.5 * (lo + hi)
        got = solve_at(mid)
        if got is not None:
            hi, phi_best, lam_best = mid, mid, got[0]
        else:
            lo = mid
    return phi_best, lam_best, True


def compute_profile(sys: StateSpaceSystem, n_theta: int = 64,
                    n_gamma: int = 16, err: float = 1e-3,
                    workspace: lmi.MiWorkspace | None = None) -> ThetaProfile:
    """Run the three-step profile computation over a uniform axis grid.

    Per direction the slice arrays are ordered from the smallest gain
    level to the peak gain; degenerate directions (no refinement room
    below the peak gain) carry the fixed three-point shape
    gamma {0, peak, peak} / phi {pi/2, pi/2, pi}.
    """
    if n_theta < 1 or n_gamma < 3:
        raise ValueError("need n_theta >= 1 and n_gamma >= 3")
    if err <= 0:
        raise ValueError("err must be positive")
    t0 = time.perf_counter()
    ws = workspace or lmi.MiWorkspace(sys)
    stats = {"bracket_expansions": 0, "acos_clamps": 0, "solver_failures": 0}
    g_top, _ = lmi.min_r_gain(sys, workspace=ws)
    thetas = np.linspace(-math.pi, math.pi, n_theta, endpoint=False)
    c_cap = 1e6 * max(g_top, 1e-9)
    slices = []
    for theta in thetas:
        try:
            slices.append(
                _theta_slice(ws, float(theta), n_gamma, err, g_top, c_cap, stats)
            )
        except lmi.SolverFailure:
            stats["solver_failures"] += 1
            slices.append(
                ThetaSlice(
                    float(theta),
                    np.array([0.0, g_top, g_top]),
                    np.array([math.pi / 2, math.pi / 2, math.pi]),
                    np.array([0.0, 0.0, 0.0]),
                    FLAG_SOLVER,
                )
            )
    meta = {
        "hinf": g_top,
        "n_theta": n_theta,
        "n_gamma": n_gamma,
        "err": err,
        "runtime_s": time.perf_counter() - t0,
        **stats,
    }
    return ThetaProfile(thetas, slices, meta)


def _step2_cone_search(ws, theta, err, c_cap, stats):
    """Smallest half-angle phi whose inscribed-disc family covers the
    frequencywise theta-SRG, with the accelerated shrink step; returns
    (phi, c_mid) or None when even the vertical family fails."""
    cap_phi = math.pi / 2

    def c_interval(phi):
        return lmi.c_range_for_phi(ws, theta, phi, c_cap=c_cap, workspace=ws)

    out = c_interval(cap_phi)
    if out is None:
        return None
    lo, hi = 0.0, cap_phi
    c_lo, c_hi, capped = out
    best = (cap_phi, 0.5 * (c_lo + c_hi))
    while hi - lo > err:
        # next test point: the accelerated jump from the feasible top or
        # the plain midpoint, whichever is smaller and still bracketed
        nxt = 0.5 * (lo + hi)
        if not capped and c_lo > 0:
            arg = (c_lo + c_hi) / (2.0 * math.sqrt(c_lo * c_hi)) * math.cos(hi)
            if arg > 1.0:
                stats["acos_clamps"] += 1
            else:
                jump = math.acos(arg)
                if lo < jump < nxt:
                    nxt = jump
        got = c_interval(nxt)
        if got is None:
            lo = nxt
        else:
            c_lo, c_hi, capped = got
            hi, best = nxt, (nxt, 0.5 * (c_lo + c_hi))
    return best


def _theta_slice(ws, theta, n_gamma, err, g_top, c_cap, stats) -> ThetaSlice:
    half_plane = lmi.mi_feasible(
        ws, [(1.0, lmi.theta_d(theta, math.inf, math.inf, ws))], workspace=ws
    )
    phi0, c_theta = math.pi / 2, 0.0
    if half_plane.feasible:
        found = _step2_cone_search(ws, theta, err, c_cap, stats)
        if found is not None:
            phi0, c_theta = found
    # step 3 entry: either mixed gain/half-plane bisection or the cone fit
    angle_tol = max(err, 1e-9)
    if phi0 >= math.pi / 2 - angle_tol:
        gamma1, lam1 = _mixed_gain_bisection(ws, theta, g_top, err, stats)
        phi1 = math.pi / 2
        conic = False
    else:
        phi1 = phi0
        gamma1 = min(c_theta * math.sin(phi1), g_top)
        lam1 = 1.0  # the level-1 certificate is purely angular
        conic = True
    if abs(g_top - gamma1) <= err * max(g_top, 1.0) or gamma1 <= 0:
        return ThetaSlice(
            theta,
            np.array([0.0, g_top, g_top]),
            np.array([math.pi / 2, math.pi / 2, math.pi]),
            np.array([lam1, 0.0, 0.0]),
            FLAG_DEGENERATE,
        )
    gamma = np.linspace(gamma1, g_top, n_gamma)
    phi = np.empty(n_gamma)
    lam = np.empty(n_gamma)
    phi[0], lam[0] = phi1, lam1
    phi[-1], lam[-1] = 0.0, 0.0
    for k in range(1, n_gamma - 1):
        phi_bst, phi_wst = refine_brackets(gamma, phi, lam, k)
        phi_k, lam_k, ok = _phi_lambda_bisection(
            ws, theta, float(gamma[k]), g_top, phi_bst, phi_wst, err, stats
        )
        if not ok:
            phi_k, lam_k = phi[k - 1], lam[k - 1]
        phi[k], lam[k] = phi_k, lam_k
    return ThetaSlice(theta, gamma, phi, lam, FLAG_CONIC if conic else FLAG_REGULAR)


def _gain_halfplane_blend(ws, theta, g_k):
    """Feasibility of the gain disc combined with a free-weight
    half-plane block (the phi -> pi/2 limit of the mixed family)."""
    block = lmi.theta_d(theta, math.inf, math.inf, ws)
    try:
        cert = ws.solve(
            lmi.theta_d(0.0, 0.0, g_k, ws).matrix,
            scalar_terms=[block.matrix],
            objective=None,
            scalar_bounds=[(0.0, 1e6)],
            label=f"gain+halfplane theta={theta:.3f}",
        )
    except lmi.SolverFailure:
        return None
    if not cert.feasible:
        return None
    mu = max(cert.aux["s0"], 0.0)
    return mu / (1.0 + mu), cert


def _mixed_gain_bisection(ws, theta, g_top, err, stats):
    """Smallest gain-disc radius that still blends with the half-plane
    certificate; the relative-error bisection of the failed-cone branch."""
    block = lmi.theta_d(theta, math.inf, math.inf, ws)
    out = lmi.max_lambda_mixed(ws, theta, g_top * (1 + 1e-6), block, workspace=ws)
    # the peak radius is feasible with zero blend weight by the gain
    # certificate itself; a stalled anchor solve only loses its lambda
    lam_best = out[0] if out is not None else 0.0
    lo, hi = 0.0, g_top
    while hi - lo > err * max(g_top, 1.0):
        mid = 0.5 * (lo + hi)
        got = lmi.max_lambda_mixed(ws, theta, mid, block, workspace=ws)
        if got is not None:
            hi, lam_best = mid, got[0]
        else:
            lo = mid
    return hi, lam_best


# ---------------------------------------------------------------------------
# complementary profile and export
# ---------------------------------------------------------------------------


@dataclass
class ComplementarySlice:
    theta: float
    inv_gamma: np.ndarray   # 1/gamma with inf markers
    pi_minus_phi: np.ndarray
    flag: str


def complementary_profile(p: ThetaProfile) -> list[ComplementarySlice]:
    """Map each profile point (theta, phi, gamma) to
    (theta, pi - phi, 1/gamma); zero gains map to the infinity marker.

    Each mapped point (psi, eta) on a slice certifies robust stability
    against the sector of radius eta - eps over the mirrored angular
    interval of half-width psi + eps, for any small eps > 0.
    """
    out = []
    for s in p.slices:
        with np.errstate(divide="ignore"):
            inv = np.where(s.gamma > 0, 1.0 / np.where(s.gamma > 0, s.gamma, 1.0), np.inf)
        out.append(ComplementarySlice(s.theta, inv, math.pi - s.phi, s.flag))
    return out


def export_profile(p: ThetaProfile, fmt: str, path: str) -> None:
    """Write the profile as CSV (rows theta, k, gamma, phi, lambda, flag)
    or JSON (adds the meta block); floats round-trip exactly."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            _write_csv(p, fh)
    elif fmt == "json":
        with open(path, "w") as fh:
            fh.write(profile_to_json(p))
    else:
        raise ValueError("format must be 'csv' or 'json'")


def _write_csv(p: ThetaProfile, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["theta", "k", "gamma", "phi", "lambda", "flag"])
    for s in p.slices:
        for k in range(len(s.gamma)):
            writer.writerow(
                [repr(float(s.theta)), k + 1, repr(float(s.gamma[k])),
                 repr(float(s.phi[k])), repr(float(s.lam[k])), s.flag]
            )


def profile_to_csv(p: ThetaProfile) -> str:
    buf = io.StringIO()
    _write_csv(p, buf)
    return buf.getvalue()


def profile_to_json(p: ThetaProfile) -> str:
    doc = {
        "meta": p.meta,
        "slices": [
            {
                "theta": float(s.theta),
                "gamma": [float(x) for x in s.gamma],
                "phi": [float(x) for x in s.phi],
                "lambda": [float(x) for x in s.lam],
                "flag": s.flag,
            }
            for s in p.slices
        ],
    }
    return json.dumps(doc, indent=1)


def import_profile(path: str) -> ThetaProfile:
    """Rebuild a profile from a CSV or JSON export."""
    text = open(path).read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        slices = [
            ThetaSlice(
                float(s["theta"]),
                np.array(s["gamma"], dtype=float),
                np.array(s["phi"], dtype=float),
                np.array(s["lambda"], dtype=float),
                s["flag"],
            )
            for s in doc["slices"]
        ]
        thetas = np.array([s.theta for s in slices])
        return ThetaProfile(thetas, slices, doc.get("meta", {}))
    rows = list(csv.reader(io.StringIO(text)))
    header, rows = rows[0], rows[1:]
    slices: dict[float, dict] = {}
    order: list[float] = []
    for th, _k, g, ph, lm, flag in rows:
        key = float(th)
        if key not in slices:
            slices[key] = {"gamma": [], "phi": [], "lam": [], "flag": flag}
            order.append(key)
        slices[key]["gamma"].append(float(g))
        slices[key]["phi"].append(float(ph))
        slices[key]["lam"].append(float(lm))
    built = [
        ThetaSlice(
            th,
            np.array(slices[th]["gamma"]),
            np.array(slices[th]["phi"]),
            np.array(slices[th]["lam"]),
            slices[th]["flag"],
        )
        for th in order
    ]
    return ThetaProfile(np.array(order), built, {})
