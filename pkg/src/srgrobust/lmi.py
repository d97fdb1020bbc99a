"""Frequency-domain matrix inequalities over the nonnegative imaginary
axis, solved as real semidefinite programs.

The core object is the inequality

    [A B; I 0]* [[0, X+iY], [X-iY, 0]] [A B; I 0]  +  Theta  <=  0,
    Y >= 0,

with X, Y complex Hermitian.  Feasibility certifies that the quadratic
constraint encoded by the Hermitian block ``Theta`` holds along the whole
frequency response of the stable system (A, B, C, D), frequencies 0
through infinity inclusive.  ``Theta`` blocks describe disc bounds on the
angled scaled relative graph of the response: a disc of radius r centred
at c*exp(i*theta) on the theta-axis, or its half-plane limit.

Complex Hermitian constraints are realified with the doubling embedding
[[Re H, -Im H], [Im H, Re H]] and handed to a conic solver; returned
certificates are re-verified by eigenvalue computation independent of the
solver.
"""

from __future__ import annotations

import math
import os
import sys as _sys
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

import clarabel

SOLVER_TRACE_ENV = "SRGROBUST_SOLVER_TRACE"

_SQRT2 = math.sqrt(2.0)


class SolverFailure(RuntimeError):
    """Conic solver ended in a state that is neither feasible nor a clean
    infeasibility certificate."""


def realify(h: np.ndarray) -> np.ndarray:
    """Doubling embedding of a complex matrix; Hermitian h maps to a real
    symmetric matrix with the same eigenvalues (doubled multiplicity)."""
    h = np.asarray(h, dtype=complex)
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _svec_index(n: int):
    ii, jj = [], []
    for j in range(n):
        for i in range(j + 1):
            ii.append(i)
            jj.append(j)
    ii, jj = np.array(ii), np.array(jj)
    w = np.where(ii == jj, 1.0, _SQRT2)
    return ii, jj, w


def svec(sym: np.ndarray, index=None) -> np.ndarray:
    """Scaled upper-triangle vectorisation matching the solver's
    semidefinite cone convention."""
    n = sym.shape[0]
    ii, jj, w = index if index is not None else _svec_index(n)
    return sym[ii, jj] * w


def herm_basis(n: int) -> list[np.ndarray]:
    """Real basis of the space of n x n complex Hermitian matrices."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            e[j, i] = 1.0
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1j
            e[j, i] = -1j
            out.append(e)
    return out


# ---------------------------------------------------------------------------
# Theta blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaBlock:
    """Hermitian block encoding a disc bound on the angled response.

    Finite (c, r): the block certifies |G(jw) - c e^{i theta}| <= r in the
    shell sense.  Infinite (c, r): the half-plane limit, certifying
    Re(e^{-i theta} <u, G u>) >= 0.
    """

    theta: float
    c: float
    r: float
    matrix: np.ndarray

    @property
    def is_half_plane(self) -> bool:
        return math.isinf(self.c)


def theta_d(theta: float, c: float, r: float, sys) -> ThetaBlock:
    """Disc-bound block for the system's (C, D) data.

    Both parameters finite: ``[C, D - c e^{i theta} I]* [C, D - c e^{i theta} I]
    - blkdiag(0, r^2 I)``.  Both infinite: the half-plane limit
    ``[[0, -e^{i theta} C'], [-e^{-i theta} C, -(e^{i theta} D' + e^{-i theta} D)]]``.
    """
    C = np.asarray(sys.C, dtype=float)
    D = np.asarray(sys.D, dtype=float)
    n = D.shape[0]
    if math.isinf(c) != math.isinf(r):
        raise ValueError("c and r must be both finite or both infinite")
    if math.isinf(c):
        rot = np.exp(1j * theta)
        mat = np.block(
            [
                [np.zeros((C.shape[1], C.shape[1])), -rot * C.T],
                [-np.conj(rot) * C, -(rot * D.T + np.conj(rot) * D)],
            ]
        )
    else:
        cd = np.concatenate([C, D - c * np.exp(1j * theta) * np.eye(n)], axis=1)
        mat = cd.conj().T @ cd
        mat[C.shape[1]:, C.shape[1]:] -= r * r * np.eye(n)
    mat = 0.5 * (mat + mat.conj().T)
    return ThetaBlock(theta, c, r, mat)


@dataclass
class LmiCertificate:
    feasible: bool
    X: np.ndarray | None = None
    Y: np.ndarray | None = None
    aux: dict = field(default_factory=dict)
    slack_margin: float = math.nan
    status: str = ""

    def __bool__(self):
        return self.feasible


def _status_name(status) -> str:
    return str(status).split(".")[-1]


# ---------------------------------------------------------------------------
# workspace: reusable assembly for one system
# ---------------------------------------------------------------------------


class MiWorkspace:
    """Precomputed constraint columns for repeated solves on one system."""

    def __init__(self, sys):
        A = np.asarray(sys.A, dtype=float)
        B = np.asarray(sys.B, dtype=float)
        C = np.asarray(sys.C, dtype=float)
        D = np.asarray(sys.D, dtype=float)
        self.A, self.B, self.C, self.D = A, B, C, D
        self.nx = A.shape[0]
        self.nio = D.shape[0]
        self.F1 = np.block(
            [[A, B], [np.eye(self.nx), np.zeros((self.nx, self.nio))]]
        )
        self.basis = herm_basis(self.nx)
        self.kyp_X, self.kyp_Y = [], []
        for hb in self.basis:
            mid = np.zeros((2 * self.nx, 2 * self.nx), dtype=complex)
            mid[: self.nx, self.nx:] = hb
            mid[self.nx:, : self.nx] = hb
            self.kyp_X.append(self.F1.T @ mid @ self.F1)
            mid = np.zeros((2 * self.nx, 2 * self.nx), dtype=complex)
            mid[: self.nx, self.nx:] = 1j * hb
            mid[self.nx:, : self.nx] = -1j * hb
            self.kyp_Y.append(self.F1.T @ mid @ self.F1)
        m = self.nx + self.nio
        self._idx_main = _svec_index(2 * m)
        self._idx_y = _svec_index(2 * self.nx)
        self._cols_main = np.column_stack(
            [svec(realify(t), self._idx_main) for t in self.kyp_X + self.kyp_Y]
        )
        ny = len(self.basis)
        ycols = np.column_stack(
            [svec(realify(-hb), self._idx_y) for hb in self.basis]
        )
        self._cols_ypsd = np.concatenate(
            [np.zeros((ycols.shape[0], ny)), ycols], axis=1
        )
        # Schur shape: [[-I_n, V(c)'], [V(c), S]] with V = c cosphi [0 I]'
        big = self.nio + m
        self._idx_big = _svec_index(2 * big)
        self._cols_big = None  # built lazily

    # -- helpers -----------------------------------------------------------

    def kyp_value(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        mid = np.zeros((2 * self.nx, 2 * self.nx), dtype=complex)
        mid[: self.nx, self.nx:] = X + 1j * Y
        mid[self.nx:, : self.nx] = X - 1j * Y
        return self.F1.T @ mid @ self.F1

    def _herm_from(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros((self.nx, self.nx), dtype=complex)
        for c, hb in zip(coeffs, self.basis):
            out += c * hb
        return out

    def gram_cd(self, theta: float = 0.0, c: float = 0.0) -> np.ndarray:
        cd = np.concatenate(
            [self.C, self.D - c * np.exp(1j * theta) * np.eye(self.nio)], axis=1
        )
        return cd.conj().T @ cd

    def _band(self, const: np.ndarray) -> float:
        return 1e-7 * (1.0 + float(np.linalg.norm(const, 2)))

    # -- main-shape solves ---------------------------------------------------

    def solve(self, theta_const: np.ndarray, scalar_terms=(),
              objective=None, scalar_bounds=(), slack_rhs: float | None = None,
              label: str = "") -> LmiCertificate:
        """Solve  KYP(X, Y) + theta_const + sum_k s_k T_k  <=  slack_rhs * I,
        Y >= 0, with optional bounds and a linear objective on the scalars.

        The paper-level inequalities are non-strict, so the default right
        hand side is a small positive band (boundary-feasible data stays
        feasible); re-verification allows the same band.

        ``objective``: None for pure feasibility or (index, sign) to
        minimise sign * s_index.  ``scalar_bounds``: (lo, hi) per scalar,
        entries may be None.
        """
        m = self.nx + self.nio
        theta_const = 0.5 * (theta_const + theta_const.conj().T)
        band = self._band(theta_const)
        if slack_rhs is None:
            slack_rhs = band
        ns = len(scalar_terms)
        ny = len(self.basis)
        nvar = 2 * ny + ns
        cols_s = (
            np.column_stack(
                [svec(realify(t), self._idx_main) for t in scalar_terms]
            )
            if ns
            else np.zeros((self._cols_main.shape[0], 0))
        )
        a_main = np.concatenate([self._cols_main, cols_s], axis=1)
        b_main = svec(realify(-theta_const + slack_rhs * np.eye(m)), self._idx_main)
        a_y = np.concatenate(
            [self._cols_ypsd, np.zeros((self._cols_ypsd.shape[0], ns))], axis=1
        )
        b_y = np.zeros(a_y.shape[0])
        rows, bs = [], []
        for k, (lo, hi) in enumerate(scalar_bounds):
            if lo is not None:
                row = np.zeros(nvar)
                row[2 * ny + k] = -1.0
                rows.append(row)
                bs.append(-lo)
            if hi is not None:
                row = np.zeros(nvar)
                row[2 * ny + k] = 1.0
                rows.append(row)
                bs.append(hi)
        a_bnd = np.vstack(rows) if rows else np.zeros((0, nvar))
        b_bnd = np.array(bs)
        A = sparse.csc_matrix(np.vstack([a_main, a_y, a_bnd]))
        b = np.concatenate([b_main, b_y, b_bnd])
        cones = [
            clarabel.PSDTriangleConeT(2 * m),
            clarabel.PSDTriangleConeT(2 * self.nx),
        ]
        if len(b_bnd):
            cones.append(clarabel.NonnegativeConeT(len(b_bnd)))
        q = np.zeros(nvar)
        if objective is not None:
            idx, sign = objective
            q[2 * ny + idx] = sign
        sol = _run_clarabel(q, A, b, cones, label)
        status = _status_name(sol.status)
        if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return LmiCertificate(False, status=status)
        if status not in ("Solved", "AlmostSolved"):
            raise SolverFailure(f"solver status {status} for {label or 'MI'}")
        x = np.asarray(sol.x)
        X = self._herm_from(x[:ny])
        Y = self._herm_from(x[ny: 2 * ny])
        scalars = {f"s{k}": float(x[2 * ny + k]) for k in range(ns)}
        mi = self.kyp_value(X, Y) + theta_const
        for k, t in enumerate(scalar_terms):
            mi = mi + scalars[f"s{k}"] * t
        slack = -float(np.linalg.eigvalsh(mi)[-1])  # positive when MI < 0
        ymin = float(np.linalg.eigvalsh(Y)[0])
        allow = slack_rhs + 10.0 * band + 1e-9 * abs(slack)
        # solver-level residue on the Y cone is tolerated: it perturbs the
        # certified frequency inequality only at the same epsilon level
        y_allow = 2e-5 * (1 + np.linalg.norm(Y, 2))
        if -slack > allow or ymin < -y_allow:
            raise SolverFailure(
                f"certificate failed re-verification (lam_max {-slack:.2e}, "
                f"allowed {allow:.2e}, ymin {ymin:.2e}) for {label or 'MI'}"
            )
        return LmiCertificate(True, X, Y, scalars, slack, status)

    def min_slack(self, theta_const: np.ndarray, label: str = "") -> float:
        """Smallest t with KYP(X,Y) + theta_const <= t I feasible; the
        non-strict inequality is feasible iff this is <= 0 (within band)."""
        m = self.nx + self.nio
        eye = np.eye(m, dtype=complex)
        cap = 10.0 * (1.0 + float(np.linalg.norm(theta_const, 2)))
        cert = self.solve(
            theta_const,
            scalar_terms=[-eye],
            objective=(0, +1.0),
            scalar_bounds=[(-cap, cap)],
            slack_rhs=0.0,
            label=label or "min_slack",
        )
        if not cert.feasible:
            return math.inf
        return cert.aux["s0"]

    # -- Schur shape for centre-linear discs ---------------------------------

    def _big_cols(self):
        if self._cols_big is None:
            big = self.nio + self.nx + self.nio
            cols = []
            for t in self.kyp_X + self.kyp_Y:
                full = np.zeros((big, big), dtype=complex)
                full[self.nio:, self.nio:] = t
                cols.append(svec(realify(full), self._idx_big))
            self._cols_big = np.column_stack(cols)
        return self._cols_big

    def solve_angle_disc(self, theta: float, phi: float,
                         objective_sign: float, c_cap: float) -> LmiCertificate:
        """Optimise c subject to the disc bound with centre c e^{i theta}
        and radius c sin(phi), written as one linear matrix inequality via
        a Schur complement on the quadratic c^2 cos^2(phi) term."""
        n, nx = self.nio, self.nx
        big = n + nx + n
        gram = self.gram_cd()
        t_inf = theta_d(theta, math.inf, math.inf, self).matrix
        const = np.zeros((big, big), dtype=complex)
        const[:n, :n] = -np.eye(n)
        const[n:, n:] = gram
        band = self._band(const)
        c_col = np.zeros((big, big), dtype=complex)
        c_col[n:, n:] = t_inf
        c_col[:n, n + nx:] = math.cos(phi) * np.eye(n)
        c_col[n + nx:, :n] = math.cos(phi) * np.eye(n)
        ny = len(self.basis)
        a_big = np.concatenate(
            [self._big_cols(), svec(realify(c_col), self._idx_big)[:, None]],
            axis=1,
        )
        b_big = svec(realify(-const + band * np.eye(big)), self._idx_big)
        nvar = 2 * ny + 1
        a_y = np.concatenate(
            [self._cols_ypsd, np.zeros((self._cols_ypsd.shape[0], 1))], axis=1
        )
        b_y = np.zeros(a_y.shape[0])
        rows = np.zeros((2, nvar))
        rows[0, -1] = -1.0  # c >= 0
        rows[1, -1] = 1.0   # c <= cap
        b_bnd = np.array([0.0, c_cap])
        A = sparse.csc_matrix(np.vstack([a_big, a_y, rows]))
        b = np.concatenate([b_big, b_y, b_bnd])
        cones = [
            clarabel.PSDTriangleConeT(2 * big),
            clarabel.PSDTriangleConeT(2 * nx),
            clarabel.NonnegativeConeT(2),
        ]
        q = np.zeros(nvar)
        q[-1] = objective_sign
        sol = _run_clarabel(q, A, b, cones, f"angle-disc theta={theta:.3f}")
        status = _status_name(sol.status)
        if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return LmiCertificate(False, status=status)
        if status not in ("Solved", "AlmostSolved"):
            raise SolverFailure(f"solver status {status} for angle-disc")
        x = np.asarray(sol.x)
        X = self._herm_from(x[:ny])
        Y = self._herm_from(x[ny: 2 * ny])
        c = float(x[-1])
        # re-verify against the quadratic original
        block = theta_d(theta, c, c * math.sin(phi), self)
        mi = self.kyp_value(X, Y) + block.matrix
        slack = -float(np.linalg.eigvalsh(mi)[-1])
        ymin = float(np.linalg.eigvalsh(Y)[0])
        allow = 10.0 * band * (1 + abs(c)) ** 2 + 1e-9 * abs(slack)
        if -slack > allow or ymin < -1e-7 * (1 + np.linalg.norm(Y, 2)):
            raise SolverFailure(
                f"angle-disc certificate failed re-verification "
                f"(lam_max {-slack:.2e}, allowed {allow:.2e}, ymin {ymin:.2e})"
            )
        return LmiCertificate(True, X, Y, {"c": c}, slack, status)


_DECIDED = {
    "Solved",
    "AlmostSolved",
    "PrimalInfeasible",
    "AlmostPrimalInfeasible",
    "DualInfeasible",
    "AlmostDualInfeasible",
}


def _run_clarabel(q, A, b, cones, label=""):
    os.environ.setdefault("RUST_BACKTRACE", "0")
    P = sparse.csc_matrix((len(q), len(q)))
    sol = None
    for relaxed in (False, True):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = 200 if not relaxed else 500
        if relaxed:
            settings.tol_gap_abs = 1e-6
            settings.tol_gap_rel = 1e-6
            settings.tol_feas = 1e-6
            settings.static_regularization_constant = 1e-7
        solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
        try:
            sol = solver.solve()
        except BaseException as exc:  # pyo3 panics do not derive from Exception
            if type(exc).__name__ != "PanicException":
                raise
            sol = None  # internal factorisation panic: try the next rung
            continue
        if os.environ.get(SOLVER_TRACE_ENV) == "1":
            trace = {
                "label": label,
                "relaxed": relaxed,
                "nvar": len(q),
                "ncon": len(b),
                "status": _status_name(sol.status),
                "iterations": sol.iterations,
                "obj": sol.obj_val,
            }
            print(json.dumps(trace), file=_sys.stderr)
        if _status_name(sol.status) in _DECIDED:
            break
    if sol is None:
        raise SolverFailure(f"solver panic on {label or 'MI'}")
    return sol


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def mi_feasible(sys, blocks, workspace: MiWorkspace | None = None) -> LmiCertificate:
    """Feasibility of the non-strict inequality with a fixed weighted sum
    of blocks, decided by minimising the slack; data within the numeric
    band of the boundary is flagged boundary-indeterminate."""
    ws = workspace or MiWorkspace(sys)
    const = np.zeros((ws.nx + ws.nio, ws.nx + ws.nio), dtype=complex)
    for w, blk in blocks:
        const = const + w * blk.matrix
    band = ws._band(const)
    slack = ws.min_slack(const, label="mi_feasible")
    cert = LmiCertificate(slack <= band, slack_margin=-slack, status="Solved")
    cert.aux = {"boundary_indeterminate": bool(abs(slack) <= band)}
    if cert.feasible:
        full = ws.solve(const, label="mi_feasible/recover")
        cert.X, cert.Y = full.X, full.Y
    return cert


def min_r_disc(sys, theta: float, c: float, tol: float = 1e-6,
               workspace: MiWorkspace | None = None) -> tuple[float, LmiCertificate]:
    """Smallest disc radius about c e^{i theta} containing the
    frequencywise angled response, by minimising r^2 (one conic solve)."""
    ws = workspace or MiWorkspace(sys)
    gram = ws.gram_cd(theta, c)
    e_u = np.zeros((ws.nx + ws.nio, ws.nx + ws.nio), dtype=complex)
    e_u[ws.nx:, ws.nx:] = np.eye(ws.nio)
    cert = ws.solve(
        gram,
        scalar_terms=[-e_u],
        objective=(0, +1.0),
        scalar_bounds=[(0.0, None)],
        label=f"min_r theta={theta:.3f} c={c:.3f}",
    )
    if not cert.feasible:
        raise SolverFailure("radius minimisation reported infeasible")
    rho = cert.aux["s0"]
    r = math.sqrt(max(rho, 0.0))
    cert.aux = {"r": r, "rho": rho}
    return r, cert


def min_r_gain(sys, tol: float = 1e-6,
               workspace: MiWorkspace | None = None) -> tuple[float, LmiCertificate]:
    """Peak gain of the stable system over all frequencies (H-infinity
    norm): the smallest origin-centred disc radius."""
    return min_r_disc(sys, 0.0, 0.0, tol, workspace)


def c_range_for_phi(sys, theta: float, phi: float, tol: float = 1e-6,
                    c_cap: float | None = None,
                    workspace: MiWorkspace | None = None):
    """Feasible interval of disc centres c for the bound
    |response - c e^{i theta}| <= c sin(phi), or None when infeasible.

    Returns (c_lo, c_hi, capped) where capped flags that the maximisation
    hit the cap (the feasible set is a half-line for phi = pi/2).
    """
    if not (0.0 < phi <= math.pi / 2 + 1e-12):
        raise ValueError("phi must lie in (0, pi/2]")
    ws = workspace or MiWorkspace(sys)
    if c_cap is None:
        c_cap = 1e6 * max(min_r_gain(sys, workspace=ws)[0], 1e-6)
    try:
        lo = ws.solve_angle_disc(theta, phi, +1.0, c_cap)
        if not lo.feasible:
            return None
        hi = ws.solve_angle_disc(theta, phi, -1.0, c_cap)
    except SolverFailure:
        return None  # not certified at this angle
    if not hi.feasible:
        raise SolverFailure("centre maximisation infeasible after feasible minimisation")
    c_lo, c_hi = lo.aux["c"], hi.aux["c"]
    capped = c_hi >= c_cap * (1 - 1e-6)
    return c_lo, c_hi, capped


def max_lambda_mixed(sys, theta: float, r: float, angle_block: ThetaBlock,
                     tol: float = 1e-6,
                     workspace: MiWorkspace | None = None):
    """Largest weight lambda in [0, 1] for which the blended certificate
    (1 - lambda) * gain disc (radius r) + lambda * angle block is
    feasible; None when no weight works."""
    ws = workspace or MiWorkspace(sys)
    gain = theta_d(0.0, 0.0, r, ws)
    diff = angle_block.matrix - gain.matrix
    try:
        cert = ws.solve(
            gain.matrix,
            scalar_terms=[diff],
            objective=(0, -1.0),
            scalar_bounds=[(0.0, 1.0)],
            label=f"max_lambda theta={theta:.3f} r={r:.4g}",
        )
    except SolverFailure:
        # near-boundary blends can stall the solver; report not-certified
        return None
    if not cert.feasible:
        return None
    lam = min(max(cert.aux["s0"], 0.0), 1.0)
    cert.aux = {"lambda": lam}
    return lam, cert
