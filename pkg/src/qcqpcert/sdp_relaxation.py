"""Primal/dual SDP relaxations of a homogenized QCQP and the Slater diagnosis.

Primal:  min Q_0 . X   s.t.  Q_k . X <= 0 (or = 0),  H . X = 1,  X PSD.
Dual:    max s         s.t.  S(y, s) = Q_0 + sum y_k Q_k - s H  PSD,  y >= 0.

Equality-form instances flip the sign in front of the sum and leave ``y`` free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _ipm
from . import linalg as la
from .conic import ConicCertificate, ConicProblem, LinearMap, Sense, map_sign
from .qcqp_model import HomogenizedInstance
from .sdp_solver import SolverOptions, Status, _converged, _run

MEMBERSHIP_TOL = 1e-7
SLATER_TOL = 1e-7


def _maps(hom: HomogenizedInstance) -> tuple[LinearMap, ...]:
    maps = [LinearMap(Q, s, 0.0) for Q, s in zip(hom.Qs[1:], hom.senses)]
    maps.append(LinearMap(hom.H, Sense.EQ, 1.0))
    return tuple(maps)


def build_primal_sdp(hom: HomogenizedInstance) -> ConicProblem:
    return ConicProblem(hom.dim, hom.Qs[0], _maps(hom), nonneg_matrix=False)


@dataclass(frozen=True)
class DualSdp:
    """The dual SDP as data: maximize ``s`` subject to ``slack(y, s)`` PSD and sign rules on ``y``."""

    hom: HomogenizedInstance
    problem: ConicProblem     # the primal it is dual to; the solver works from this

    @property
    def m(self) -> int:
        return self.hom.m

    @property
    def nonneg_multipliers(self) -> tuple[bool, ...]:
        return tuple(s == Sense.LEQ for s in self.hom.senses)

    def slack(self, y, s: float) -> np.ndarray:
        return slack_matrix(self.hom, y, s)

    def objective(self, y, s: float) -> float:
        return float(s)

    def is_feasible(self, y, s: float, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        signs_ok = all(yk >= -tol for yk, nn in zip(y, self.nonneg_multipliers) if nn)
        return signs_ok and la.psd_status(self.slack(y, s), tol).is_psd


def build_dual_sdp(hom: HomogenizedInstance) -> DualSdp:
    return DualSdp(hom, build_primal_sdp(hom))


def slack_matrix(hom: HomogenizedInstance, y, s: float) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != hom.m:
        raise ValueError(f"y must have length {hom.m}")
    S = np.array(hom.Qs[0], dtype=float)
    for yk, Q, sense in zip(y, hom.Qs[1:], hom.senses):
        S = S + map_sign(sense) * yk * Q
    S = S - s * hom.H
    return S


@dataclass(frozen=True)
class KktResidual:
    primal_feas: float
    dual_feas: float
    complementarity_y: float
    complementarity_S: float
    sx_norm: float = 0.0

    def max(self) -> float:
        return max(self.primal_feas, self.dual_feas, self.complementarity_y,
                   self.complementarity_S)

    def holds(self, tol: float) -> bool:
        return self.max() <= tol


def sdp_kkt_residual(hom: HomogenizedInstance, cert: ConicCertificate) -> KktResidual:
    """Residuals of the SDP-KKT system: feasibility of both sides and complementarity."""
    X = np.asarray(cert.X, dtype=float)
    y = np.asarray(cert.y, dtype=float).reshape(-1)
    if X.shape != (hom.dim, hom.dim) or y.size != hom.m:
        raise ValueError("certificate dimensions do not match the instance")
    X = (X + X.T) / 2
    pf = max(0.0, -float(la.eigvalsh(X)[0]))
    pf = max(pf, abs(float(np.sum(hom.H * X)) - 1.0))
    qx = np.array([float(np.sum(Q * X)) for Q in hom.Qs[1:]])
    for v, sense in zip(qx, hom.senses):
        pf = max(pf, abs(v) if sense == Sense.EQ else max(v, 0.0))
    S = slack_matrix(hom, y, cert.s)
    if cert.Z is not None:
        S = S - cert.Z
        pf = max(pf, float(np.max(-X, initial=0.0)))
    df = max(0.0, -float(la.eigvalsh(S)[0]))
    for yk, sense in zip(y, hom.senses):
        if sense == Sense.LEQ:
            df = max(df, -yk)
    if cert.Z is not None:
        df = max(df, float(np.max(-cert.Z, initial=0.0)))
    cy = float(np.max(np.abs(y * qx), initial=0.0))
    cs = abs(float(np.sum(S * X)))
    if cert.Z is not None:
        cs = max(cs, abs(float(np.sum(cert.Z * X))))
    return KktResidual(pf, df, cy, cs, float(np.linalg.norm(S @ X)))


# -- Slater diagnosis --------------------------------------------------------

@dataclass
class SlaterDiagnosis:
    m_minus: tuple[int, ...]          # 1-based constraint indices
    holds: bool
    margin: float
    witness: np.ndarray | None = None
    inconclusive: bool = False
    aux_values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _aux_min(hom: HomogenizedInstance, k: int, opts: SolverOptions):
    """min Q_k . X over the relaxed feasible set; -inf when unbounded below."""
    from .sdp_solver import solve
    base = build_primal_sdp(hom)
    return solve(ConicProblem(hom.dim, hom.Qs[k], base.maps), opts)


def _max_margin(hom: HomogenizedInstance, strict: set[int], opts: SolverOptions,
                entry_pairs: list[tuple[int, int]] | None = None,
                nonneg_pairs: list[tuple[int, int]] | None = None,
                trace_cap: float | None = None):
    """max t: X - tI PSD, Q_k . X <= -t (k strict), Q_k . X <= 0 otherwise, H . X = 1.

    Written in ``X' = X - tI`` with ``t >= 0`` as an LP variable.  With
    ``entry_pairs`` the entries ``X_ij >= t`` are required as well, and with
    ``nonneg_pairs`` the entries ``X_ij >= 0`` (the DNN variant).  A
    ``trace_cap`` bounds trace X, which keeps the solve well scaled when the
    feasible set is unbounded; a positive margin under the cap still proves
    strict feasibility.
    """
    d = hom.dim
    m = hom.m
    pairs = [(i, j, True) for i, j in (entry_pairs or [])] + \
        [(i, j, False) for i, j in (nonneg_pairs or [])]
    p = 1 + m + len(pairs) + (1 if trace_cap is not None else 0)
    A, a, b = [], [], []
    for k in range(1, m + 1):
        Q = hom.Qs[k]
        row = np.zeros(p)
        row[0] = float(np.trace(Q)) + (1.0 if k in strict else 0.0)
        if hom.senses[k - 1] == Sense.LEQ:
            row[k] = 1.0
        A.append(Q)
        a.append(row)
        b.append(0.0)
    row = np.zeros(p)
    row[0] = 1.0
    A.append(hom.H)
    a.append(row)
    b.append(1.0)
    for t, (i, j, positive) in enumerate(pairs):
        E = np.zeros((d, d))
        E[i, j] = E[j, i] = 1.0 if i == j else 0.5
        row = np.zeros(p)
        # X_ij - t [positive] = X'_ij + t [i = j] - t [positive] = v >= 0
        row[0] = (1.0 if i == j else 0.0) - (1.0 if positive else 0.0)
        row[1 + m + t] = -1.0
        A.append(E)
        a.append(row)
        b.append(0.0)
    if trace_cap is not None:
        row = np.zeros(p)
        row[0] = float(d)
        row[-1] = 1.0
        A.append(np.eye(d))
        a.append(row)
        b.append(float(trace_cap))
    c = np.zeros(p)
    c[0] = -1.0
    sf = _ipm.StandardForm(np.zeros((d, d)), np.array(A), np.array(b), c, np.array(a))
    # equality constraints carry no slack; drop their unused LP columns
    keep = [0] + [k for k in range(1, m + 1) if hom.senses[k - 1] == Sense.LEQ] \
        + list(range(1 + m, p))
    sf = _ipm.StandardForm(sf.C, sf.A, sf.b, sf.c[keep], sf.a[:, keep])
    res = _run(sf, opts)
    t = float(res.x[0])
    return t, res.X + t * np.eye(d), res


def slater_diagnosis(hom: HomogenizedInstance, opts: SolverOptions | None = None) -> SlaterDiagnosis:
    """Determine the refutable constraints and whether a strictly feasible point exists."""
    opts = opts or SolverOptions()
    if any(s != Sense.LEQ for s in hom.senses):
        raise ValueError("slater_diagnosis expects an inequality-form instance")
    m_minus, values, notes = [], {}, []
    inconclusive = False
    for k in range(1, hom.m + 1):
        out = _aux_min(hom, k, opts)
        thr = MEMBERSHIP_TOL * (1.0 + float(np.linalg.norm(hom.Qs[k])))
        values[k] = out.primal_value
        if out.status == Status.PRIMAL_UNBOUNDED_SUSPECTED:
            m_minus.append(k)
            continue
        if out.status != Status.OPTIMAL:
            inconclusive = True
            notes.append(f"auxiliary problem for constraint {k} ended {out.status.value}")
            continue
        if out.primal_value < -thr:
            m_minus.append(k)
    t, X, res = _max_margin(hom, set(m_minus), opts)
    if res.pinf > 1e-6:
        return SlaterDiagnosis(tuple(m_minus), False, float("nan"), None, True, values,
                               notes + ["max-margin problem did not reach feasibility"])
    holds = t > SLATER_TOL and _converged(res, opts) or t > 1e-3
    return SlaterDiagnosis(tuple(m_minus), bool(holds), t, X if holds else None,
                           inconclusive, values, notes)
