"""Doubly nonnegative relaxation of an equality-form QCQP in nonnegative variables.

    min q_0(u)  s.t.  q_k(u) = 0 (k = 1..m),  u >= 0

The redundant products ``u_i u_j >= 0`` lift to ``X >= O`` entrywise, which
gives the primal DNN problem over PSD and nonnegative matrices.  Its dual asks
for ``Q_0 - sum y_k Q_k - s H`` to split into a PSD part plus a nonnegative
part Z; y is free.  Row/column 0 of X is kept nonnegative by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from . import _ipm
from . import linalg as la
from .certifier import (ATTAINMENT_BOUND, CERT_TOL, FAILS, HOLDS, INCONCLUSIVE, VALUE_RTOL,
                        CondStatus, ConditionReport, _min_trace_face, values_close)
from .conic import ConicCertificate, ConicProblem, LinearMap, Sense
from .qcqp_model import (HomogenizedInstance, QcqpInstance, brute_force_zeta, feasibility_residual,
                         homogenize)
from .sdp_relaxation import SLATER_TOL, SlaterDiagnosis, _max_margin, build_primal_sdp
from .sdp_solver import SolverOptions, Status, _converged, _pair_matrix, _run, solve, solve_dual

SLATER_TRACE_CAP = 1e3     # per dimension; see dnn_slater
HAT_CONDITIONS = ("A_hat", "B_hat", "C_hat", "D_hat", "E_hat", "F_hat")


@dataclass
class DnnCertificate:
    """``Q_0 - sum y_k Q_k - s H = S_psd + Z`` with S_psd PSD and Z >= O."""

    X: np.ndarray
    y: np.ndarray
    s: float
    Z: np.ndarray
    S_psd: np.ndarray

    def decomposition_residual(self, hom: HomogenizedInstance) -> float:
        M = dnn_slack(hom, self.y, self.s)
        return float(np.linalg.norm(M - self.S_psd - self.Z))

    def as_conic(self) -> ConicCertificate:
        return ConicCertificate(self.X, self.y, self.s, self.S_psd, self.Z)


def _check_form(inst: QcqpInstance) -> None:
    if not inst.nonneg_vars or any(s != Sense.EQ for _, s in inst.constraints):
        raise ValueError("the DNN relaxation needs an equality-form instance with u >= 0")


def build_pdnn(inst: QcqpInstance, nonneg_row0: bool = True) -> ConicProblem:
    _check_form(inst)
    base = build_primal_sdp(homogenize(inst))
    return ConicProblem(base.dim, base.cost, base.maps, nonneg_matrix=True,
                        nonneg_row0=nonneg_row0)


def dnn_slack(hom: HomogenizedInstance, y, s: float) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != hom.m:
        raise ValueError(f"y must have length {hom.m}")
    M = np.array(hom.Qs[0], dtype=float)
    for yk, Q in zip(y, hom.Qs[1:]):
        M = M - yk * Q
    return M - s * hom.H


@dataclass(frozen=True)
class SplitResult:
    member: bool
    margin: float              # max t with M - tI in PSD + N
    S_psd: np.ndarray
    Z: np.ndarray


def split_psd_nonneg(M: np.ndarray, opts: SolverOptions | None = None,
                     pairs: list[tuple[int, int]] | None = None, tol: float = 1e-8) -> SplitResult:
    """Decide ``M in PSD + N`` by computing ``max t : M - tI = S + Z``.

    This is the dual of ``min M . X`` over ``X`` PSD and entrywise
    nonnegative with ``trace X = 1``, so a negative optimum refutes
    membership through the primal and a nonnegative one yields the split.
    """
    opts = opts or SolverOptions()
    M = (np.asarray(M, dtype=float) + np.asarray(M, dtype=float).T) / 2
    d = M.shape[0]
    pairs = pairs if pairs is not None else [(i, j) for i in range(d) for j in range(i, d)]
    p = len(pairs)
    A = [np.eye(d)] + [_pair_matrix(d, i, j) for i, j in pairs]
    a = np.zeros((1 + p, p))
    for t in range(p):
        a[1 + t, t] = -1.0
    b = np.zeros(1 + p)
    b[0] = 1.0
    sf = _ipm.StandardForm(M, np.array(A), b, np.zeros(p), a)
    res = _run(sf, opts)
    t = float(res.lam[0])
    Z = np.zeros((d, d))
    for k, (i, j) in enumerate(pairs):
        Z += max(float(res.lam[1 + k]), 0.0) * _pair_matrix(d, i, j)
    S = M - Z
    scale = 1.0 + float(np.max(np.abs(M)))
    return SplitResult(bool(t >= -tol * scale), t, S, Z)


@dataclass(frozen=True)
class DualDnn:
    """maximize s over free y with ``dnn_slack(y, s)`` in PSD + N."""

    hom: HomogenizedInstance
    problem: ConicProblem

    def slack(self, y, s: float) -> np.ndarray:
        return dnn_slack(self.hom, y, s)

    def objective(self, y, s: float) -> float:
        return float(s)

    def is_feasible(self, y, s: float, opts: SolverOptions | None = None) -> bool:
        pairs = self.problem.nonneg_pairs()
        return split_psd_nonneg(self.slack(y, s), opts, pairs).member


def build_ddnn(inst: QcqpInstance, nonneg_row0: bool = True) -> DualDnn:
    prob = build_pdnn(inst, nonneg_row0)
    return DualDnn(homogenize(inst), prob)


def dnn_slater(inst: QcqpInstance, opts: SolverOptions | None = None,
               nonneg_row0: bool = True) -> SlaterDiagnosis:
    """Strict feasibility for the DNN primal: X PD and X_ij > 0 on the u-block."""
    _check_form(inst)
    opts = opts or SolverOptions()
    hom = homogenize(inst)
    n = inst.n
    block = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    row0 = [(0, j) for j in range(1, n + 1)] if nonneg_row0 else []
    t, X, res = _max_margin(hom, set(), opts, entry_pairs=block, nonneg_pairs=row0,
                            trace_cap=SLATER_TRACE_CAP * hom.dim)
    if res.pinf > 1e-6:
        return SlaterDiagnosis((), False, float("nan"), None, True, {},
                               ["max-margin problem did not reach feasibility"])
    holds = (t > SLATER_TOL and _converged(res, opts)) or t > 1e-3
    return SlaterDiagnosis((), bool(holds), t, X if holds else None, False, {}, [])


@dataclass(frozen=True)
class DnnCertifyOptions:
    solver: SolverOptions = field(default_factory=SolverOptions)
    tol: float = CERT_TOL
    rtol: float = VALUE_RTOL
    minimizer: tuple | None = None
    zeta: float | None = None
    zeta_attained: bool | None = None
    box: tuple = (0.0, 10.0)
    grid_points: int | None = None
    nonneg_row0: bool = True
    run_slater: bool = True


def check_A_hat(inst: QcqpInstance, x, y, s: float, Z, tol: float = CERT_TOL) -> dict:
    """Saddle point of the DNN Lagrangian at (x, y, s, Z).

    The sup over (y', s', Z') is finite iff ``x x^T`` is DNN-feasible, and the
    inf over x' equals s iff ``M = Q_0 - sum y_k Q_k - Z - s H`` is PSD; the
    two meet iff additionally ``M x = 0`` and ``Z . x x^T = 0``.
    """
    hom = homogenize(inst)
    x = np.asarray(x, dtype=float)
    if x[0] < 0:
        x = -x
    X = np.outer(x, x)
    Z = np.asarray(Z, dtype=float)
    M = dnn_slack(hom, y, s) - Z
    feas = max([abs(float(np.sum(Q * X))) for Q in hom.Qs[1:]] + [abs(x[0] ** 2 - 1.0)]
               + [float(np.max(-X, initial=0.0))])
    res = {
        "feasibility": feas,
        "Z_sign": float(np.max(-Z, initial=0.0)),
        "psd": max(0.0, -float(la.eigvalsh(M)[0])),
        "Mx": float(np.max(np.abs(M @ x), initial=0.0)),
        "ZX": abs(float(np.sum(Z * X))),
    }
    res["status"] = HOLDS if max(res.values()) <= tol else FAILS
    return res


def polish_dnn(hom: HomogenizedInstance, x, y, s: float, Z, tol: float = CERT_TOL):
    """Project an interior-point (y, s, Z) onto the complementarity face at the rank-1 point x.

    Z is zeroed where ``x_i x_j > 0`` and the remaining unknowns get the
    smallest correction making ``(Q_0 - sum y_k Q_k - sH - Z) x = 0``.  The
    cone conditions are checked afterwards, not imposed.
    """
    x = np.asarray(x, dtype=float)
    d, m = hom.dim, hom.m
    thr = tol * (1.0 + float(np.max(np.abs(x))))
    support = np.abs(x) > thr
    Z = np.array(Z, dtype=float)
    Z[np.outer(support, support)] = 0.0
    off = ~support
    Z[np.outer(off, off)] = np.maximum(Z[np.outer(off, off)], 0.0)
    # free Z entries that enter (.) x: i off support, j on support
    free = [(i, j) for i in range(d) for j in range(d) if not support[i] and support[j]]
    cols = [Q @ x for Q in hom.Qs[1:]] + [hom.H @ x]
    cols += [x[j] * np.eye(d)[i] for i, j in free]
    L = np.column_stack(cols) if cols else np.zeros((d, 0))
    r = (dnn_slack(hom, y, s) - Z) @ x
    # d/dy_k of M x is -Q_k x, d/ds is -H x, d/dZ_ij is -e_i x_j
    lo = np.concatenate([np.full(m + 1, -np.inf), [-max(Z[i, j], 0.0) for i, j in free]])
    if L.shape[1] == 0:
        delta = np.zeros(0)
    else:
        delta = lsq_linear(L, r, bounds=(lo, np.full(L.shape[1], np.inf)),
                           method="bvls", tol=1e-14).x
    y = np.asarray(y, dtype=float) + delta[:m]
    s = float(s + delta[m])
    # Z_ji multiplies x_i = 0, so mirroring keeps the equations intact
    for (i, j), dz in zip(free, delta[m + 1:]):
        Z[i, j] += dz
        Z[j, i] = Z[i, j]
    S = dnn_slack(hom, y, s) - Z
    return y, s, Z, S


def certify_dnn(inst: QcqpInstance, opts: DnnCertifyOptions | None = None) -> ConditionReport:
    """Hat-conditions report for the DNN relaxation, plus the plain SDP bound for comparison."""
    opts = opts or DnnCertifyOptions()
    _check_form(inst)
    tol, rtol, sopts = opts.tol, opts.rtol, opts.solver
    shift = inst.objective_shift
    hom = homogenize(inst)
    prob = build_pdnn(inst, opts.nonneg_row0)
    notes: list[str] = []

    P = solve(prob, sopts)
    D = solve_dual(prob, sopts)
    Psdp = solve(build_primal_sdp(hom), sopts)

    def primal_value(out):
        if out.status == Status.OPTIMAL:
            return out.primal_value
        if out.status == Status.PRIMAL_UNBOUNDED_SUSPECTED:
            return float("-inf")
        return float("nan")

    eta_p = primal_value(P)
    eta_p_sdp = primal_value(Psdp)
    eta_d = D.dual_value if D.status == Status.OPTIMAL else float("nan")
    cert = D.certificate
    attained = (D.status == Status.OPTIMAL and cert is not None
                and float(np.max(np.abs(cert.y), initial=0.0)) <= ATTAINMENT_BOUND)
    # inf_x L_hat(x, y, s, Z) is s when the PSD part is PSD, else -inf
    if cert is not None and D.status == Status.OPTIMAL:
        phi = float(cert.s) if la.psd_status(cert.S, 1e-7).is_psd else float("-inf")
    else:
        phi = float("nan")

    zeta_trusted = False
    u_min = None
    zeta, zsrc = float("nan"), "none"
    if opts.minimizer is not None:
        u_min = np.asarray(opts.minimizer, dtype=float)
        if feasibility_residual(inst, u_min) > tol * inst.scale():
            raise ValueError("supplied minimizer is not feasible")
        zeta, zeta_trusted, zsrc = inst.objective(u_min), True, "minimizer"
    elif opts.zeta is not None:
        zeta, zeta_trusted, zsrc = float(opts.zeta) - shift, True, "supplied value"
    elif inst.n <= 4:
        pts = opts.grid_points or {1: 401, 2: 201, 3: 61, 4: 31}[inst.n]
        est = brute_force_zeta(inst, opts.box, pts)
        if est.feasible_found:
            zeta, zsrc, u_min = est.upper_bound, "grid upper bound", est.argmin
    have_zeta = np.isfinite(zeta)

    st: dict = {}

    def value_condition(val):
        if np.isnan(val) or not have_zeta:
            return INCONCLUSIVE
        if val == float("-inf"):
            return FAILS if zeta_trusted else INCONCLUSIVE
        if values_close(val, zeta, rtol):
            return HOLDS
        return FAILS if zeta_trusted else INCONCLUSIVE

    st["D_hat"] = value_condition(eta_p)
    st["E_hat"] = value_condition(eta_d)
    if st["E_hat"] == INCONCLUSIVE and np.isfinite(eta_d) and np.isfinite(eta_p) \
            and eta_p - eta_d > rtol * (1.0 + abs(eta_p)):
        st["E_hat"] = FAILS
    st["F_hat"] = st["E_hat"]

    # C_hat: a rank-1 optimal X, tried from the minimizer, the solver, then the face
    def optimal_point(u):
        u = np.asarray(u, dtype=float)
        radius = 1.0 + float(np.max(np.abs(u), initial=0.0))
        if feasibility_residual(inst, u) > tol * inst.scale() * radius ** 2:
            return None
        return u if values_close(inst.objective(u), eta_p, rtol) else None

    def from_X(X):
        f = la.rank1_extract(X, 1e-6)
        if f is None or not f.has_unit_coordinate:
            return None
        return optimal_point(f.x[1:] / f.x[0])

    u_c, route = None, None
    if eta_p == float("-inf"):
        st["C_hat"], route = FAILS, "primal unbounded"
    elif opts.zeta_attained is False:
        st["C_hat"], route = FAILS, "no minimizer exists, so no rank-1 optimal X"
    elif not np.isfinite(eta_p):
        st["C_hat"] = INCONCLUSIVE
    else:
        u_c = optimal_point(u_min) if u_min is not None else None
        route = "lifted minimizer attains eta_p" if u_c is not None else None
        if u_c is None and P.certificate is not None:
            u_c = from_X(P.certificate.X)
            route = "rank-1 solver solution" if u_c is not None else None
        if u_c is None:
            face = _min_trace_face(prob, eta_p, sopts)
            if face.status == Status.OPTIMAL:
                u_c = from_X(face.certificate.X)
                route = "rank-1 after trace minimization" if u_c is not None else None
        st["C_hat"] = HOLDS if u_c is not None else INCONCLUSIVE
        route = route or "no rank-1 optimal solution found"

    dnn_cert = None
    a_hat = None
    if st["C_hat"] == FAILS or st["D_hat"] == FAILS or st["E_hat"] == FAILS:
        st["B_hat"] = FAILS
    elif D.status == Status.OPTIMAL and not attained:
        st["B_hat"] = FAILS
        notes.append("dual attainment doubtful: multipliers exceed the bound")
    elif np.isfinite(eta_p) and np.isfinite(eta_d) and not values_close(eta_p, eta_d, rtol):
        st["B_hat"] = FAILS
    elif st["C_hat"] == HOLDS and attained:
        x = np.concatenate([[1.0], u_c])
        y_p, s_p, Z_p, S_p = polish_dnn(hom, x, cert.y, cert.s, cert.Z, tol)
        dnn_cert = DnnCertificate(np.outer(x, x), y_p, s_p, Z_p, S_p)
        a_hat = check_A_hat(inst, x, y_p, s_p, Z_p, 10.0 * tol * inst.scale())
        st["B_hat"] = HOLDS if a_hat["status"] == HOLDS else INCONCLUSIVE
    else:
        st["B_hat"] = INCONCLUSIVE
    # A_hat and B_hat are equivalent; the rank-1 certificate is the saddle point
    st["A_hat"] = st["B_hat"]

    slater = dnn_slater(inst, sopts, opts.nonneg_row0) if opts.run_slater else None
    violations = []
    for p, q in (("A_hat", "B_hat"), ("B_hat", "C_hat"), ("C_hat", "D_hat"),
                 ("E_hat", "F_hat"), ("F_hat", "E_hat")):
        if st[p] == HOLDS and st[q] == FAILS:
            violations.append(f"{p} => {q}")
    if slater is not None and slater.holds and st["C_hat"] == HOLDS and st["B_hat"] == FAILS:
        violations.append("Slater2 and C_hat => B_hat")
    if st["B_hat"] == HOLDS and st["D_hat"] != st["E_hat"] and INCONCLUSIVE not in (
            st["D_hat"], st["E_hat"]):
        violations.append("B_hat => (D_hat <=> E_hat)")
    internal = []
    if np.isfinite(eta_p) and np.isfinite(eta_p_sdp) and \
            eta_p < eta_p_sdp - 1e-7 * (1.0 + abs(eta_p_sdp)):
        internal.append("DNN bound below the SDP bound")

    evidence = {k: {} for k in HAT_CONDITIONS}
    evidence["C_hat"] = {"route": route}
    if a_hat is not None:
        evidence["A_hat"] = a_hat
    if dnn_cert is not None:
        evidence["B_hat"] = {"decomposition_residual": dnn_cert.decomposition_residual(hom)}
    values = {"zeta_estimate": zeta + shift if have_zeta else zeta, "zeta_source": zsrc,
              "eta_p": eta_p + shift, "eta_d": eta_d + shift, "phi": phi + shift,
              "eta_p_sdp": eta_p_sdp + shift, "objective_shift": shift}
    wc = dnn_cert if dnn_cert is not None else (
        None if cert is None else DnnCertificate(cert.X, cert.y, cert.s, cert.Z, cert.S))
    witnesses = {
        "u": u_c,
        "X": None if u_c is None else np.outer(np.concatenate([[1.0], u_c]),
                                               np.concatenate([[1.0], u_c])),
        "y": None if wc is None else wc.y,
        "s": None if wc is None else wc.s + shift,
        "S": None if wc is None else wc.S_psd,
        "Z": None if wc is None else wc.Z,
    }
    solver = {"primal": {"status": P.status.value, "iterations": P.iterations,
                         "precision": P.precision, "notes": P.notes},
              "dual": {"status": D.status.value, "iterations": D.iterations,
                       "precision": D.precision, "notes": D.notes, "attained": bool(attained)},
              "sdp_primal": {"status": Psdp.status.value}}
    if internal:
        notes.extend("internal: " + s for s in internal)
    return ConditionReport({k: st[k] for k in HAT_CONDITIONS}, evidence, values, witnesses, slater, not violations, violations,
                           notes, solver, internal)


def tightening_gap(inst: QcqpInstance, opts: SolverOptions | None = None) -> tuple[float, float]:
    """(eta_p of the DNN relaxation, eta_p of the plain SDP) on the same homogenization."""
    opts = opts or SolverOptions()
    hom = homogenize(inst)
    P = solve(build_pdnn(inst), opts)
    Q = solve(build_primal_sdp(hom), opts)
    val = {Status.OPTIMAL: None, Status.PRIMAL_UNBOUNDED_SUSPECTED: float("-inf")}

    def v(out):
        r = val.get(out.status, float("nan"))
        return out.primal_value + inst.objective_shift if r is None else r
    return v(P), v(Q)
