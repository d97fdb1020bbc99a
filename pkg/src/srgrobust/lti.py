"""Stable LTI state-space layer: frequency response, certified peak gain
and peak angle, and grid-based robust stability checks.

Stability checks apply the matrix separation conditions frequencywise:
the response (or its mirrored scaled relative graph) must avoid the
forbidden region induced by the uncertainty region at every sampled
frequency.  Grid verdicts are sufficient at grid resolution; the peak
gain and the half-plane/cone certificates are continuum-exact through the
matrix-inequality layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dwshell as dw
from . import geometry as geo
from . import lmi


@dataclass(frozen=True)
class StateSpaceSystem:
    """Real state-space system (A, B, C, D) with A Hurwitz and square IO."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        nx = A.shape[0]
        if A.shape != (nx, nx) or nx < 1:
            raise ValueError("A must be square and nonempty")
        n = D.shape[0]
        if D.shape != (n, n):
            raise ValueError("system must have as many inputs as outputs")
        if B.shape != (nx, n) or C.shape != (n, nx):
            raise ValueError("B, C dimensions inconsistent with A, D")
        if np.max(np.linalg.eigvals(A).real) >= 0:
            raise ValueError("A must be Hurwitz")

    @property
    def nx(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @classmethod
    def static(cls, D) -> "StateSpaceSystem":
        """Constant gain wrapped with a vanishing stable state."""
        D = np.atleast_2d(np.asarray(D, dtype=float))
        n = D.shape[0]
        return cls(-np.eye(1), np.zeros((1, n)), np.zeros((n, 1)), D)

    def to_dict(self):
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "StateSpaceSystem":
        return cls(d["A"], d["B"], d["C"], d["D"])

    @classmethod
    def from_json(cls, text: str) -> "StateSpaceSystem":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FrequencyGrid:
    """Sorted nonnegative frequencies, always including 0, with infinity
    handled symbolically (the response there is D)."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.unique(np.concatenate([[0.0], np.asarray(self.omegas, dtype=float)]))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("frequencies must be finite and nonnegative")
        object.__setattr__(self, "omegas", w)

    @classmethod
    def log(cls, lo: float = 1e-3, hi: float = 1e3, n: int = 400) -> "FrequencyGrid":
        return cls(np.geomspace(lo, hi, n))

    @classmethod
    def parse(cls, spec: str) -> "FrequencyGrid":
        """Parse 'log:lo:hi:n' grid descriptions."""
        parts = spec.split(":")
        if parts[0] != "log" or len(parts) != 4:
            raise ValueError("grid spec must look like log:lo:hi:n")
        return cls.log(float(parts[1]), float(parts[2]), int(parts[3]))

    def with_inf(self):
        """Iterate the grid followed by the infinity marker."""
        yield from self.omegas
        yield math.inf


def freq_response(sys: StateSpaceSystem, omega: float) -> np.ndarray:
    """G(j omega) = C (j omega I - A)^{-1} B + D; D at the infinity marker."""
    if math.isinf(omega):
        return sys.D.astype(complex)
    s = 1j * omega
    x = np.linalg.solve(s * np.eye(sys.nx) - sys.A, sys.B)
    return sys.C @ x + sys.D


def _grid_gain_max(sys, grid: FrequencyGrid):
    best, worst_w = -math.inf, 0.0
    for w in grid.with_inf():
        g = float(np.linalg.svd(freq_response(sys, w), compute_uv=False)[0])
        if g > best:
            best, worst_w = g, w
    return best, worst_w


def hinf_norm(sys: StateSpaceSystem, tol: float = 1e-6,
              workspace: lmi.MiWorkspace | None = None,
              grid: FrequencyGrid | None = None) -> float:
    """Peak frequency-response gain, certified by the matrix-inequality
    minimisation and cross-checked against a dense frequency grid."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    r, _ = lmi.min_r_gain(sys, tol, workspace=workspace)
    grid = grid or FrequencyGrid.log(1e-4, 1e4, 800)
    lower, _ = _grid_gain_max(sys, grid)
    if lower > r + max(tol, 1e-4 * max(r, 1.0)):
        raise lmi.SolverFailure(
            f"grid gain {lower:.6g} exceeds certified bound {r:.6g}"
        )
    return r


@dataclass(frozen=True)
class HinfAngleResult:
    """Certified bracket for the peak angular deviation over frequency."""

    value: float
    lower: float
    upper: float

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def hinf_theta_angle(sys: StateSpaceSystem, theta: float, tol: float = 1e-3,
                     grid: FrequencyGrid | None = None,
                     workspace: lmi.MiWorkspace | None = None) -> HinfAngleResult:
    """Peak angular deviation of the frequencywise theta-SRG from the
    theta-axis: a frequency-grid lower bound together with the certified
    upper bound from bisection over inscribed-disc families.

    The value is the upper bound when the bracket closes within tol,
    otherwise the midpoint; both ends are always reported.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ws = workspace or lmi.MiWorkspace(sys)
    grid = grid or FrequencyGrid.log(1e-3, 1e3, 240)
    lower = 0.0
    for w in grid.with_inf():
        g = freq_response(sys, w)
        if np.linalg.norm(g) == 0:
            continue
        lower = max(lower, _quick_angle_lower(g, theta))
    half_plane = lmi.mi_feasible(
        sys, [(1.0, lmi.theta_d(theta, math.inf, math.inf, sys))], workspace=ws
    )
    if not half_plane.feasible:
        # beyond a half-plane the disc families stop covering; only the
        # sampled lower bound and the trivial pi cap are available
        lo = max(lower, math.pi / 2)
        return HinfAngleResult(lo, lo, math.pi)
    hinf = lmi.min_r_gain(sys, workspace=ws)[0]
    cap = 1e6 * max(hinf, 1e-6)
    lo_phi, hi_phi = max(lower - tol, 0.0), math.pi / 2
    # shrink the certified cone half-angle while the disc family stays feasible
    while hi_phi - lo_phi > tol * 0.5:
        mid = 0.5 * (lo_phi + hi_phi)
        if mid <= 0:
            break
        if lmi.c_range_for_phi(sys, theta, mid, c_cap=cap, workspace=ws) is not None:
            hi_phi = mid
        else:
            lo_phi = mid
    upper = hi_phi
    value = upper if upper - lower <= max(tol, 1e-9) else lower
    return HinfAngleResult(value, lower, upper)


def _quick_angle_lower(g: np.ndarray, theta: float) -> float:
    h = 0.5 * (np.exp(-1j * theta) * g + np.exp(1j * theta) * g.conj().T)
    k = g.conj().T @ g
    cands = [np.linalg.eigh(h)[1]]
    cands.append(np.linalg.eigh(k)[1])
    best = 0.0
    for U in cands:
        mu = g @ U
        nu = np.einsum("ij,ij->j", mu.conj(), mu).real
        t = np.einsum("ij,ij->j", U.conj(), np.exp(-1j * theta) * mu).real
        keep = nu > 1e-14
        if keep.any():
            ang = np.arccos(np.clip(t[keep] / np.sqrt(nu[keep]), -1, 1))
            best = max(best, float(ang.max()))
    return best


# ---------------------------------------------------------------------------
# robust stability checks
# ---------------------------------------------------------------------------


@dataclass
class RsVerdict:
    """Outcome of a frequency-gridded stability check.

    ``margin`` is the smallest per-frequency separation found; a verdict
    is sufficient at grid resolution only.
    """

    robustly_stable: bool
    worst_frequency: float
    margin: float
    detail: list = field(default_factory=list)
    method: str = ""
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "robustly_stable": bool(self.robustly_stable),
            "worst_frequency": float(self.worst_frequency),
            "margin": float(self.margin),
            "method": self.method,
            "warnings": list(self.warnings),
            "detail": [[float(w), float(m)] for w, m in self.detail],
        }


def _per_omega(region_or_fn, omega):
    return region_or_fn(omega) if callable(region_or_fn) else region_or_fn


def _finish_verdict(detail, method, warnings) -> RsVerdict:
    margins = np.array([m for _, m in detail])
    worst = int(np.argmin(margins))
    jumps = np.abs(np.diff(margins))
    if len(jumps) and np.max(jumps) > 4.0 * max(np.median(jumps), 1e-12) + 1e-9:
        warnings = warnings + [
            "margin varies quickly between neighbouring grid points; "
            "consider a denser grid"
        ]
    return RsVerdict(
        bool(margins[worst] > 0),
        detail[worst][0],
        float(margins[worst]),
        detail,
        method,
        warnings,
    )


def _forbidden_clearance(sys, forb: geo.Region, th: float, w: float,
                         n_random: int, n_directions: int, rng) -> float:
    """Smallest signed clearance of the sampled mirrored response SRG
    from the forbidden region at one frequency."""
    g = freq_response(sys, w)
    if np.linalg.norm(g) == 0:
        # sigma(G) = {0}: the origin is never forbidden
        return -float(forb.margin(np.array([0j]))[0])
    pts = dw.srg_theta_sample(g, -th, n_random, n_directions, rng=rng)
    return -float(np.max(forb.margin(pts)))


def rs_check_theta(sys: StateSpaceSystem, region, theta, grid: FrequencyGrid,
                   n_random: int = 192, n_directions: int = 64,
                   seed: int = 0) -> RsVerdict:
    """Fixed-axis stability check: at each grid frequency the sampled
    mirrored response SRG must avoid the forbidden region induced by the
    star hull of the uncertainty region.  The region must be symmetric
    about its theta-axis."""
    rng = np.random.default_rng(seed)
    omegas = list(grid.with_inf())
    probe = [omegas[0], omegas[len(omegas) // 2], omegas[-2]]
    for w in probe:
        reg = _per_omega(region, w)
        th = _per_omega(theta, w)
        if not geo.is_theta_symmetric(reg, th, rng=rng):
            raise ValueError(
                f"region at omega={w} is not symmetric about its theta-axis"
            )
    forbs: dict[int, geo.Region] = {}
    detail = []
    for w in omegas:
        reg = _per_omega(region, w)
        th = _per_omega(theta, w)
        forb = forbs.setdefault(id(reg), geo.forbidden_region(reg))
        detail.append(
            (w, _forbidden_clearance(sys, forb, th, w, n_random, n_directions, rng))
        )
    return _finish_verdict(detail, "fixed-axis separation (grid)", [])


def rs_check_general(sys: StateSpaceSystem, region, vartheta,
                     grid: FrequencyGrid, n_gamma: int = 192,
                     n_random: int = 192, n_directions: int = 64,
                     seed: int = 0) -> RsVerdict:
    """Free-axis stability check along a caller-supplied axis function:
    separation from the forbidden region of the circular hull."""
    rng = np.random.default_rng(seed)
    forbs: dict[tuple, geo.Region] = {}
    detail = []
    for w in grid.with_inf():
        reg = _per_omega(region, w)
        th = _per_omega(vartheta, w)
        key = (id(reg), round(float(th), 12))
        forb = forbs.get(key)
        if forb is None:
            hull = geo.circular_hull(reg, th, n_gamma=n_gamma)
            forb = geo.forbidden_region(hull)
            forbs[key] = forb
        detail.append(
            (w, _forbidden_clearance(sys, forb, th, w, n_random, n_directions, rng))
        )
    return _finish_verdict(detail, "free-axis separation (grid)", [])


def rs_check_named(sys: StateSpaceSystem, shape: str, grid: FrequencyGrid,
                   gamma: float | None = None, alpha: float | None = None,
                   beta: float | None = None) -> RsVerdict:
    """Stability against disc, cone, or sector uncertainty via the
    frequencywise containment conditions (certified per frequency)."""
    detail = []
    if shape == "disc":
        if gamma is None or gamma <= 0:
            raise ValueError("disc shape needs gamma > 0")
        for w in grid.with_inf():
            g = freq_response(sys, w)
            s = float(np.linalg.svd(g, compute_uv=False)[0])
            detail.append((w, 1.0 / gamma - s))
        return _finish_verdict(detail, "disc gain condition", [])
    if shape not in ("cone", "sector"):
        raise ValueError("shape must be disc, cone, or sector")
    if alpha is None or beta is None or beta < alpha:
        raise ValueError("cone/sector shapes need alpha <= beta")
    theta_m = -(alpha + beta) / 2.0
    psi = math.pi - (beta - alpha) / 2.0
    if psi <= 0:
        for w in grid.with_inf():
            detail.append((w, -1.0))
        return _finish_verdict(detail, "cone spans everything", [])
    nu_lo = None
    if shape == "sector":
        if gamma is None or gamma <= 0:
            raise ValueError("sector shape needs gamma > 0")
        nu_lo = (1.0 / gamma) ** 2
    for w in grid.with_inf():
        g = freq_response(sys, w)
        if np.linalg.norm(g) == 0:
            detail.append((w, 1.0))
            continue
        m = dw.cone_containment_margin(g, theta_m, psi, nu_lo=nu_lo)
        detail.append((w, float(min(m, 1e12))))
    name = "cone angle condition" if shape == "cone" else "sector mixed condition"
    return _finish_verdict(detail, name, [])
