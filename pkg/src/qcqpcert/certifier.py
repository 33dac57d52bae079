"""Global-optimality conditions for a QCQP and their witnesses.

Conditions (inequality form, ``y >= 0``):

* A  -- (u, y) satisfies the KKT conditions and ``A_0 + sum y_k A_k`` is PSD
  (equivalently, a saddle point of the Lagrangian).  A_bar asks for PD.
* B  -- the SDP-KKT system has a solution with rank-1 ``X``.  B_bar also asks
  for ``rank S(y, s) = n``.
* C  -- the primal SDP has a rank-1 optimal solution (the relaxation is exact).
* D  -- ``eta_p = zeta``;  E -- ``eta_d = zeta``;  F -- ``phi = zeta``.

``certify`` fills every status from solver output plus constructive
witnesses; a status is FAILS only when there is an argument for it, and
INCONCLUSIVE otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import nnls

from . import linalg as la
from .conic import ConicCertificate, ConicProblem, LinearMap, Sense
from .qcqp_model import (QcqpInstance, ZetaEstimate, brute_force_zeta, feasibility_residual,
                         homogenize, lagrangian, multiplier_combination)
from .sdp_relaxation import (SlaterDiagnosis, build_primal_sdp, sdp_kkt_residual,
                             slack_matrix, slater_diagnosis)
from .sdp_solver import ConicOutcome, SolverOptions, Status, solve, solve_dual

CERT_TOL = 1e-7        # absolute, on residuals
VALUE_RTOL = 1e-6      # relative, on value comparisons
ATTAINMENT_BOUND = 1e6
RANK_TOL = 1e-6


class CondStatus(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    INCONCLUSIVE = "INCONCLUSIVE"


HOLDS, FAILS, INCONCLUSIVE = CondStatus.HOLDS, CondStatus.FAILS, CondStatus.INCONCLUSIVE
CONDITIONS = ("A", "A_bar", "B", "B_bar", "C", "D", "E", "F")


def values_close(a: float, b: float, rtol: float = VALUE_RTOL) -> bool:
    if not (np.isfinite(a) and np.isfinite(b)):
        return a == b
    return abs(a - b) <= rtol * (1.0 + max(abs(a), abs(b)))


# -- (A') ------------------------------------------------------------------

@dataclass(frozen=True)
class APrimeCheck:
    status: CondStatus
    bar_status: CondStatus
    feasibility: float
    sign: float
    complementarity: float
    stationarity: float
    hess_min_eig: float
    saddle_gap: float = 0.0     # L(u, y) - q_0(u), zero under (5)

    def evidence(self) -> dict:
        return {"feasibility": self.feasibility, "sign": self.sign,
                "complementarity": self.complementarity, "stationarity": self.stationarity,
                "hess_min_eig": self.hess_min_eig, "saddle_gap": self.saddle_gap}


def check_A_prime(inst: QcqpInstance, u, y, tol: float = CERT_TOL) -> APrimeCheck:
    """KKT conditions at (u, y) plus PSD (A) or PD (A_bar) of ``A_0 + sum y_k A_k``."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if u.shape != (inst.n,) or y.size != inst.m:
        raise ValueError("u or y has the wrong length")
    feas = feasibility_residual(inst, u)
    sign = float(np.max(-y, initial=0.0)) if not inst.nonneg_vars else 0.0
    comp = max((abs(yk * q(u)) for yk, (q, _) in zip(y, inst.constraints)), default=0.0)
    L = lagrangian(inst, u, y)
    stat = float(np.max(np.abs(L.grad), initial=0.0))
    hm = la.psd_status(L.hess / 2.0, tol)
    ok = feas <= tol and sign <= tol and comp <= tol and stat <= tol
    status = HOLDS if ok and hm.is_psd else FAILS
    bar = HOLDS if ok and hm.is_pd else FAILS
    return APrimeCheck(status, bar, feas, sign, comp, stat, hm.min_eig,
                       L.value - inst.objective(u))


def check_saddle_point(inst: QcqpInstance, u, y, tol: float = CERT_TOL) -> APrimeCheck:
    """Saddle-point test, evaluated through (A') plus the complementarity identity (5).

    (5) says u is feasible and ``y_k q_k(u) = 0``, which is the same as
    ``L(u, y) = q_0(u)`` for feasible u and y >= 0.
    """
    chk = check_A_prime(inst, u, y, tol)
    if chk.status == HOLDS and abs(chk.saddle_gap) > tol * (1.0 + abs(inst.objective(u))):
        return APrimeCheck(FAILS, FAILS, *list(chk.evidence().values()))
    return chk


def kkt_multipliers(inst: QcqpInstance, u, tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Multipliers at u on the active set minimizing the stationarity residual.

    Inequality multipliers are kept nonnegative (NNLS); equality ones are
    free.  Returns ``(y, ||grad_u L||_inf)``.
    """
    u = np.asarray(u, dtype=float)
    scale = inst.scale() * (1.0 + float(np.max(np.abs(u), initial=0.0))) ** 2
    g0 = inst.objective.gradient(u)
    y = np.zeros(inst.m)
    active = [k for k, (q, _) in enumerate(inst.constraints) if abs(q(u)) <= tol * scale]
    if active:
        G = np.column_stack([inst.constraints[k][0].gradient(u) for k in active])
        if inst.nonneg_vars:
            sol = np.linalg.lstsq(G, -g0, rcond=None)[0]
        else:
            sol = nnls(G, -g0)[0]
        y[active] = sol
    res = float(np.max(np.abs(lagrangian(inst, u, y).grad), initial=0.0))
    return y, res


# -- witnesses between (A') and (B') ----------------------------------------------

def witness_A_to_B(inst: QcqpInstance, u, y, tol: float = CERT_TOL) -> ConicCertificate:
    """The SDP certificate built from (u, y): ``X = [1; u][1; u]^T`` and the matching s."""
    chk = check_A_prime(inst, u, y, tol)
    if chk.status != HOLDS:
        raise ValueError("witness_A_to_B needs (u, y) satisfying (A')")
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    _, b, c = multiplier_combination(inst, y)
    s = float(b @ u + (c - inst.objective.c))
    x = np.concatenate([[1.0], u])
    hom = homogenize(inst)
    return ConicCertificate(np.outer(x, x), y.copy(), s, slack_matrix(hom, y, s))


def witness_B_to_A(inst: QcqpInstance, cert: ConicCertificate, tol: float = CERT_TOL):
    """Recover (u, y) from an SDP-KKT certificate with rank-1 X, or None."""
    hom = homogenize(inst)
    res = sdp_kkt_residual(hom, cert)
    scale = 1.0 + float(np.linalg.norm(cert.X)) * (1.0 + float(np.linalg.norm(cert.S)))
    if res.max() > tol * scale:
        return None
    f = la.rank1_extract(cert.X, RANK_TOL)
    if f is None or not f.has_unit_coordinate:
        return None
    u = f.x[1:] / f.x[0]
    y = np.asarray(cert.y, dtype=float).copy()
    if check_A_prime(inst, u, y, 10 * tol * scale).status != HOLDS:
        return None
    return u, y


# -- Lagrangian dual function ---------------------------------------------------

def lagrangian_dual_value(inst: QcqpInstance, y, tol: float = 1e-9, sign: int = 1) -> float:
    """``phi(y) = inf_u L(u, y)``: ``-b(y)^T A(y)^+ b(y) + c(y)`` or ``-inf``."""
    A, b, c = multiplier_combination(inst, y, sign)
    w, V = np.linalg.eigh((A + A.T) / 2)
    scale = 1.0 + float(np.max(np.abs(w), initial=0.0))
    if w[0] < -tol * scale:
        return float("-inf")
    keep = w > tol * scale
    coef = V.T @ b
    if np.any(np.abs(coef[~keep]) > np.sqrt(tol) * (1.0 + float(np.linalg.norm(b)))):
        return float("-inf")
    return float(-np.sum(coef[keep] ** 2 / w[keep]) + c)


# -- report ------------------------------------------------------------------

@dataclass
class ConditionReport:
    statuses: dict
    evidence: dict
    values: dict
    witnesses: dict
    slater: SlaterDiagnosis | None
    diagram_consistent: bool
    violations: list
    notes: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    internal_errors: list = field(default_factory=list)


@dataclass(frozen=True)
class CertifyOptions:
    solver: SolverOptions = field(default_factory=SolverOptions)
    tol: float = CERT_TOL
    rtol: float = VALUE_RTOL
    minimizer: tuple | None = None   # trusted global minimizer (feasibility is checked)
    zeta: float | None = None        # trusted optimal value, if known analytically
    zeta_attained: bool | None = None  # known (non-)existence of a minimizer
    box: tuple = (-10.0, 10.0)
    grid_points: int | None = None
    run_slater: bool = True


def _grid_points(n: int) -> int:
    return {1: 401, 2: 201, 3: 61, 4: 31}.get(n, 11)


IMPLICATIONS = (("A", "B"), ("B", "A"), ("A_bar", "B_bar"), ("B_bar", "A_bar"),
                ("B", "C"), ("C", "D"), ("E", "D"), ("B", "E"), ("E", "F"), ("F", "E"))


def check_diagram(st: dict, slater_holds: bool | None, has_minimizer: bool) -> list[str]:
    out = [f"{p} => {q}" for p, q in IMPLICATIONS if st[p] == HOLDS and st[q] == FAILS]
    if slater_holds and st["C"] == HOLDS and st["B"] == FAILS:
        out.append("Slater and C => B")
    if has_minimizer and st["D"] == HOLDS and st["C"] == FAILS:
        out.append("minimizer and D => C")
    return out


def _unique_primal(hom, cert: ConicCertificate, tol: float) -> bool:
    """True when complementarity with the dual slack pins X down to one matrix.

    Every optimal X lives in ``V W V^T`` with V spanning null(S); the equality
    maps and the inequality maps with positive multipliers fix W if their
    compressions ``V^T A V`` span the symmetric matrices of that size.
    """
    S = cert.S
    w, V = np.linalg.eigh((S + S.T) / 2)
    scale = 1.0 + float(np.max(np.abs(w), initial=0.0))
    V = V[:, w <= 1e-6 * scale]
    r = V.shape[1]
    if r == 0:
        return True
    mats = [hom.H] + [Q for Q, yk, s in zip(hom.Qs[1:], cert.y, hom.senses)
                      if s == Sense.EQ or yk > tol]
    iu = np.triu_indices(r)
    rows = np.array([(V.T @ M @ V)[iu] for M in mats])
    return int(np.linalg.matrix_rank(rows, tol=1e-8)) == r * (r + 1) // 2


def polish_dual(hom, x, cert: ConicCertificate, tol: float = CERT_TOL) -> ConicCertificate:
    """Project the solver's (y, s) onto {S(y, s) x = 0, y_k = 0 off the active set}.

    Interior-point multipliers carry an error of order sqrt(gap) here; with a
    rank-1 optimum ``x x^T`` in hand, complementarity is a linear system in
    (y, s), and the nearest solution to the solver's point is taken.  The
    original certificate is returned when the projection leaves the dual cone.
    """
    x = np.asarray(x, dtype=float)
    m = hom.m
    act = [k for k in range(m)
           if abs(float(x @ hom.Qs[k + 1] @ x)) <= tol * (1.0 + float(np.linalg.norm(hom.Qs[k + 1])))
           * (1.0 + float(x @ x))]
    signs = [1.0 if sn == Sense.LEQ else -1.0 for sn in hom.senses]
    cols = [signs[k] * (hom.Qs[k + 1] @ x) for k in act] + [-(hom.H @ x)]
    M = np.column_stack(cols)
    z0 = np.concatenate([np.asarray(cert.y, dtype=float)[act], [cert.s]])
    rhs = -(hom.Qs[0] @ x)
    z = z0 + np.linalg.lstsq(M, rhs - M @ z0, rcond=None)[0]
    y = np.zeros(m)
    y[act] = z[:-1]
    new = ConicCertificate(np.outer(x, x), y, float(z[-1]), slack_matrix(hom, y, float(z[-1])))
    if any(y[k] < -tol for k in range(m) if hom.senses[k] == Sense.LEQ):
        return cert
    if np.linalg.norm(M @ z - rhs) > tol * (1.0 + float(np.linalg.norm(rhs))):
        return cert
    old = sdp_kkt_residual(hom, ConicCertificate(np.outer(x, x), cert.y, cert.s, cert.S)).max()
    return new if sdp_kkt_residual(hom, new).max() <= max(old, tol) else cert


def _min_trace_face(problem: ConicProblem, eta_p: float, opts: SolverOptions) -> ConicOutcome:
    """Rank reduction: minimize trace over {feasible X : cost . X <= eta_p + delta}."""
    delta = 1e-7 * (1.0 + abs(eta_p))
    maps = problem.maps + (LinearMap(problem.cost, Sense.LEQ, eta_p + delta),)
    face = ConicProblem(problem.dim, np.eye(problem.dim), maps, problem.nonneg_matrix,
                        problem.nonneg_row0)
    return solve(face, opts)


def _lift(u) -> np.ndarray:
    x = np.concatenate([[1.0], np.asarray(u, dtype=float)])
    return np.outer(x, x)


def certify(inst: QcqpInstance, opts: CertifyOptions | None = None) -> ConditionReport:
    """Run both SDP solves, the Slater diagnosis and the oracle, then decide A..F."""
    opts = opts or CertifyOptions()
    if inst.nonneg_vars:
        raise ValueError("certify expects an inequality-form instance; use certify_dnn")
    tol, rtol, sopts = opts.tol, opts.rtol, opts.solver
    shift = inst.objective_shift
    hom = homogenize(inst)
    primal = build_primal_sdp(hom)
    notes: list[str] = []
    internal: list[str] = []

    P = solve(primal, sopts)
    Dd = solve_dual(primal, sopts)

    if P.status == Status.OPTIMAL:
        eta_p = P.primal_value
    elif P.status == Status.PRIMAL_UNBOUNDED_SUSPECTED:
        eta_p = float("-inf")
    else:
        eta_p = float("nan")
        notes.append(f"primal solve ended {P.status.value}")
    if Dd.status == Status.OPTIMAL:
        eta_d = Dd.dual_value
    elif Dd.status == Status.DUAL_INFEASIBLE_CERTIFIED:
        eta_d = float("-inf")
    else:
        eta_d = float("nan")
        notes.append(f"dual solve ended {Dd.status.value}")

    # -- zeta ---------------------------------------------------------------
    zeta_trusted = False
    u_min = None
    zeta = float("nan")
    zsrc = "none"
    if opts.minimizer is not None:
        u_min = np.asarray(opts.minimizer, dtype=float)
        if feasibility_residual(inst, u_min) > tol * inst.scale():
            raise ValueError("supplied minimizer is not feasible")
        zeta, zeta_trusted, zsrc = inst.objective(u_min), True, "minimizer"
    elif opts.zeta is not None:
        zeta, zeta_trusted, zsrc = float(opts.zeta) - shift, True, "supplied value"
    if inst.n <= 4:
        est: ZetaEstimate = brute_force_zeta(inst, opts.box, opts.grid_points or _grid_points(inst.n))
        if est.feasible_found:
            if not zeta_trusted:
                zeta, zsrc, u_min = est.upper_bound, "grid upper bound", est.argmin
            elif est.upper_bound < zeta - rtol * (1.0 + abs(zeta)):
                # may be a point inside the constraint tolerance; not a toolkit error
                notes.append(f"grid oracle value {est.upper_bound:.10g} is below the supplied "
                             "optimum (within grid feasibility tolerance)")
    have_zeta = np.isfinite(zeta)

    # -- dual attainment, phi -------------------------------------------------
    dual_cert = Dd.certificate
    y_dual = dual_cert.y if dual_cert is not None else None
    attained = (Dd.status == Status.OPTIMAL and y_dual is not None
                and float(np.max(np.abs(y_dual), initial=0.0)) <= ATTAINMENT_BOUND)
    if Dd.status == Status.OPTIMAL and not attained:
        notes.append("dual attainment doubtful: multipliers exceed "
                     f"{ATTAINMENT_BOUND:g} at the gap plateau")
    if Dd.status == Status.DUAL_INFEASIBLE_CERTIFIED:
        phi = float("-inf")
    elif y_dual is not None and Dd.status == Status.OPTIMAL:
        phi = lagrangian_dual_value(inst, y_dual, tol=1e-9)
        if np.isfinite(phi) and not values_close(phi, eta_d, 1e-6):
            # phi(y) at a near-optimal y can undershoot eta_d only by the slack's
            # own inaccuracy; a real mismatch would be a bug.
            internal.append(f"phi(y) = {phi:.10g} differs from eta_d = {eta_d:.10g}")
    else:
        phi = float("nan")

    st: dict = {}
    ev: dict = {k: {} for k in CONDITIONS}

    # -- D, E, F --------------------------------------------------------------
    def value_condition(val: float) -> CondStatus:
        if np.isnan(val) or not have_zeta:
            return INCONCLUSIVE
        if val == float("-inf"):
            # a grid value does not show zeta > -inf; a trusted one does
            return FAILS if zeta_trusted else INCONCLUSIVE
        if values_close(val, zeta, rtol):
            return HOLDS
        if zeta_trusted:
            return FAILS
        return INCONCLUSIVE

    st["D"] = value_condition(eta_p)
    st["E"] = value_condition(eta_d)
    st["F"] = value_condition(eta_d if np.isnan(phi) else max(phi, eta_d))
    if st["E"] == INCONCLUSIVE and np.isfinite(eta_d) and np.isfinite(eta_p) \
            and eta_p - eta_d > rtol * (1.0 + abs(eta_p)):
        st["E"] = FAILS            # eta_d < eta_p <= zeta
    if st["F"] == INCONCLUSIVE and st["E"] == FAILS:
        st["F"] = FAILS            # phi = eta_d
    ev["D"] = {"eta_p": eta_p, "zeta": zeta}
    ev["E"] = {"eta_d": eta_d, "zeta": zeta}
    ev["F"] = {"phi": phi, "zeta": zeta}

    # -- C ----------------------------------------------------------------------
    X_opt = None
    u_c = None
    c_route = None
    if eta_p == float("-inf"):
        st["C"] = FAILS
        c_route = "primal unbounded: no optimal solution"
    elif opts.zeta_attained is False:
        # a rank-1 optimal X would lift a minimizer, and there is none
        st["C"] = FAILS
        c_route = "no QCQP minimizer exists, so no rank-1 optimal X"
    elif not np.isfinite(eta_p):
        st["C"] = INCONCLUSIVE
    else:
        def optimal_point(u) -> np.ndarray | None:
            u = np.asarray(u, dtype=float)
            radius = 1.0 + float(np.max(np.abs(u), initial=0.0))
            if feasibility_residual(inst, u) > tol * inst.scale() * radius ** 2:
                return None
            if not values_close(inst.objective(u), eta_p, rtol):
                return None
            return u

        def optimal_rank1(X) -> np.ndarray | None:
            f = la.rank1_extract(X, RANK_TOL)
            if f is None or not f.has_unit_coordinate:
                return None
            return optimal_point(f.x[1:] / f.x[0])

        # the known or oracle minimizer is tried first: when it attains eta_p
        # its lift is an optimal rank-1 X, and it is more accurate than a
        # factor read off an interior-point iterate
        u_c = optimal_point(u_min) if u_min is not None else None
        if u_c is not None:
            c_route = "lifted minimizer attains eta_p"
        else:
            u_c = optimal_rank1(P.certificate.X)
            if u_c is not None:
                c_route = "rank-1 solver solution"
            else:
                face = _min_trace_face(primal, eta_p, sopts)
                if face.status == Status.OPTIMAL:
                    u_c = optimal_rank1(face.certificate.X)
                    if u_c is not None:
                        c_route = "rank-1 after trace minimization over the optimal face"
        if u_c is not None:
            st["C"] = HOLDS
            X_opt = _lift(u_c)
        elif attained and dual_cert is not None and values_close(eta_p, eta_d, rtol) \
                and _unique_primal(hom, dual_cert, tol):
            st["C"] = FAILS
            c_route = "optimal X is unique and not rank-1"
        else:
            st["C"] = INCONCLUSIVE
            c_route = "no rank-1 optimal solution found"
    ev["C"] = {"route": c_route,
               "solver_X_rank": None if P.certificate is None
               else la.numeric_rank(P.certificate.X, RANK_TOL)}

    # -- B, B_bar -----------------------------------------------------------------
    cert_B = None
    if st["C"] == FAILS or st["D"] == FAILS or st["E"] == FAILS:
        st["B"] = FAILS
    elif Dd.status == Status.DUAL_INFEASIBLE_CERTIFIED or (Dd.status == Status.OPTIMAL
                                                           and not attained):
        st["B"] = FAILS
    elif np.isfinite(eta_p) and np.isfinite(eta_d) and not values_close(eta_p, eta_d, rtol):
        st["B"] = FAILS
    elif st["C"] == HOLDS and attained:
        cert_B = polish_dual(hom, np.concatenate([[1.0], u_c]), dual_cert, tol)
        res = sdp_kkt_residual(hom, cert_B)
        scale = 1.0 + float(np.linalg.norm(X_opt)) * (1.0 + float(np.linalg.norm(dual_cert.S)))
        ev["B"] = {"kkt": res.__dict__, "scale": scale}
        st["B"] = HOLDS if res.max() <= 10 * tol * scale else INCONCLUSIVE
    else:
        st["B"] = INCONCLUSIVE
    if st["B"] == HOLDS:
        rS = la.numeric_rank(cert_B.S, RANK_TOL)
        ev["B_bar"] = {"rank_S": rS, "n": inst.n}
        if rS == inst.n:
            st["B_bar"] = HOLDS
        elif "multipliers purified to the smallest sum" not in Dd.notes:
            st["B_bar"] = FAILS    # interior-point duals have maximal rank on the optimal face
        else:
            st["B_bar"] = INCONCLUSIVE
    else:
        st["B_bar"] = st["B"] if st["B"] == FAILS else INCONCLUSIVE

    # -- A, A_bar ------------------------------------------------------------
    uy = witness_B_to_A(inst, cert_B, tol * 10) if cert_B is not None else None
    a_check = None
    if uy is not None:
        a_check = check_A_prime(inst, uy[0], uy[1], 10 * tol)
    else:
        # direct check at an optimal point with its KKT multipliers
        u_try = u_c if u_c is not None else (u_min if opts.minimizer is not None else None)
        if u_try is not None:
            yk, _ = kkt_multipliers(inst, u_try)
            a_check = check_A_prime(inst, u_try, yk, tol)
            uy = (u_try, yk)
    if a_check is not None and a_check.status == HOLDS:
        st["A"] = HOLDS
        st["A_bar"] = HOLDS if a_check.bar_status == HOLDS else (
            FAILS if st["B_bar"] == FAILS else INCONCLUSIVE)
    elif st["B"] == FAILS:
        st["A"] = FAILS
        st["A_bar"] = FAILS
    else:
        st["A"] = INCONCLUSIVE
        st["A_bar"] = INCONCLUSIVE
    if a_check is not None:
        ev["A"] = a_check.evidence()
        ev["A_bar"] = {"hess_min_eig": a_check.hess_min_eig}

    # -- Slater, diagram ---------------------------------------------------------
    slater = slater_diagnosis(hom, sopts) if opts.run_slater else None
    has_minimizer = zeta_trusted and opts.minimizer is not None
    violations = check_diagram(st, None if slater is None or slater.inconclusive
                               else slater.holds, has_minimizer)
    if st["A"] == HOLDS and uy is not None and have_zeta and \
            not values_close(inst.objective(uy[0]), zeta, rtol) and inst.objective(uy[0]) > zeta:
        internal.append("(A') holds at a point worse than the oracle value")

    witnesses = {
        "u": None if uy is None else uy[0],
        "y": None if uy is None else uy[1],
        "X": X_opt if X_opt is not None else (None if P.certificate is None else P.certificate.X),
        "y_dual": y_dual,
        "s": None if dual_cert is None else dual_cert.s + shift,
        "S": None if dual_cert is None else dual_cert.S,
    }
    values = {"zeta_estimate": zeta + shift if have_zeta else zeta, "zeta_source": zsrc,
              "eta_p": eta_p + shift, "eta_d": eta_d + shift, "phi": phi + shift,
              "objective_shift": shift}
    solver = {"primal": {"status": P.status.value, "gap": P.gap, "iterations": P.iterations,
                         "precision": P.precision, "trace_bound": P.trace_bound,
                         "notes": P.notes},
              "dual": {"status": Dd.status.value, "gap": Dd.gap, "iterations": Dd.iterations,
                       "precision": Dd.precision, "notes": Dd.notes,
                       "attained": bool(attained)}}
    if internal:
        notes.extend("internal: " + s for s in internal)
    st = {k: st[k] for k in CONDITIONS}
    ev = {k: ev[k] for k in sorted(ev, key=lambda k: (k not in CONDITIONS, CONDITIONS.index(k)
                                                      if k in CONDITIONS else 0, k))}
    return ConditionReport(st, ev, values, witnesses, slater, not violations, violations,
                           notes, solver, internal)
