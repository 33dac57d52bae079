"""Small dense conic solver with the diagnostics the certifier needs.

``solve`` targets the primal value and ``solve_dual`` the dual value; on
problems without a Slater point the two are genuinely different
computations, so they are separate entry points.

The primal side runs on a trace-bounded copy of the problem (``tr X <= R``),
which makes the dual strictly feasible and keeps iterates bounded.  ``R``
starts at a small multiple of the minimum feasible trace and grows while the
bound carries a nonzero multiplier.  If the bound stays active the problem is
probed for unboundedness in congruence-scaled coordinates.

The dual side runs the plain primal-dual pair.  Dual infeasibility is first
checked by a sound structural argument (a PSD matrix with a zero diagonal
entry has a zero row), solved as a short sequence of LPs.

Each IPM call starts in double precision and is repeated in 128-bit mpmath
arithmetic when double precision does not reach the tolerances.  Degenerate
problems lose about half their digits, so this is what makes the examples
with no interior point reproducible to 1e-6.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from . import _ipm
from .conic import ConicCertificate, ConicProblem, Sense, dual_slack

MAX_DIM = 64
ESCALATION = ("double", "mp128")
RAY_TOL = 1e-7     # relative violation allowed on a recession direction


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    PRIMAL_UNBOUNDED_SUSPECTED = "PRIMAL_UNBOUNDED_SUSPECTED"
    PRIMAL_INFEASIBLE_SUSPECTED = "PRIMAL_INFEASIBLE_SUSPECTED"
    DUAL_INFEASIBLE_CERTIFIED = "DUAL_INFEASIBLE_CERTIFIED"
    STALLED = "STALLED"


@dataclass(frozen=True)
class SolverOptions:
    tol_gap: float = 1e-9
    tol_feas: float = 1e-9
    max_iters: int = 200
    unbounded_threshold: float = 1e8
    sigma: float = 0.2
    step_fraction: float = 0.98
    seed: int = 0
    precision: str = "auto"          # "auto" escalates double -> mp128
    trace_bound: float | None = None  # fixed R instead of the adaptive ladder

    def __post_init__(self):
        if not (self.tol_gap > 0 and self.tol_feas > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.max_iters < 1 or self.unbounded_threshold <= 0:
            raise ValueError("max_iters and unbounded_threshold must be positive")


@dataclass
class ConicOutcome:
    status: Status
    certificate: ConicCertificate | None
    gap: float
    iterations: int
    trace: list = field(default_factory=list)
    primal_value: float = float("nan")
    dual_value: float = float("nan")
    pinf: float = float("nan")
    dinf: float = float("nan")
    precision: str = "double"
    trace_bound: float | None = None
    trace_multiplier: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == Status.OPTIMAL


# -- translation to the IPM standard form ----------------------------------

@dataclass
class _Layout:
    n_maps: int
    pairs: list
    has_trace: bool


def _pair_matrix(d: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((d, d))
    E[i, j] = E[j, i] = 1.0
    return E


def _standard_form(problem: ConicProblem, trace_bound: float | None = None,
                   scale: np.ndarray | None = None) -> tuple[_ipm.StandardForm, _Layout]:
    d = problem.dim
    D = np.ones(d) if scale is None else scale
    cong = np.outer(D, D)
    leq = [i for i, mp in enumerate(problem.maps) if mp.sense == Sense.LEQ]
    pairs = problem.nonneg_pairs()
    p = len(leq) + len(pairs) + (1 if trace_bound is not None else 0)
    rows_A, rows_a, rhs = [], [], []
    for i, mp in enumerate(problem.maps):
        row = np.zeros(p)
        if mp.sense == Sense.LEQ:
            row[leq.index(i)] = 1.0
        rows_A.append(mp.matrix * cong)
        rows_a.append(row)
        rhs.append(mp.rhs)
    for t, (i, j) in enumerate(pairs):
        row = np.zeros(p)
        row[len(leq) + t] = -1.0
        rows_A.append(_pair_matrix(d, i, j) * cong)
        rows_a.append(row)
        rhs.append(0.0)
    if trace_bound is not None:
        row = np.zeros(p)
        row[-1] = 1.0
        rows_A.append(np.eye(d))
        rows_a.append(row)
        rhs.append(float(trace_bound))
    sf = _ipm.StandardForm(problem.cost * cong, np.array(rows_A), np.array(rhs),
                           np.zeros(p), np.array(rows_a).reshape(len(rows_A), p))
    return sf, _Layout(len(problem.maps), pairs, trace_bound is not None)


def _certificate(problem: ConicProblem, res: _ipm.IpmResult, lay: _Layout,
                 scale: np.ndarray | None = None) -> tuple[ConicCertificate, float]:
    d = problem.dim
    D = np.ones(d) if scale is None else scale
    X = res.X * np.outer(D, D)
    lam = res.lam
    h = problem.h_index
    y = []
    for i in problem.constraint_indices:
        y.append(-lam[i] if problem.maps[i].sense == Sense.LEQ else lam[i])
    y = np.array(y)
    s = float(lam[h])
    Z = None
    if lay.pairs:
        Z = np.zeros((d, d))
        for t, (i, j) in enumerate(lay.pairs):
            Z += lam[lay.n_maps + t] * _pair_matrix(d, i, j)
    tau = float(-lam[-1]) if lay.has_trace else 0.0
    S = dual_slack(problem, y, s)
    if Z is not None:
        S = S - Z
    return ConicCertificate(X=(X + X.T) / 2, y=y, s=s, S=(S + S.T) / 2, Z=Z), tau


def _settings(opts: SolverOptions, precision: str) -> _ipm.IpmSettings:
    return _ipm.IpmSettings(
        tol_gap=opts.tol_gap, tol_feas=opts.tol_feas, max_iters=opts.max_iters,
        step_fraction=opts.step_fraction, precision=precision,
        blowup=1e13 if precision == "double" else 1e20,
    )


def _score(r: _ipm.IpmResult) -> float:
    return max(r.pinf, r.dinf, r.relgap)


def _run(sf: _ipm.StandardForm, opts: SolverOptions, escalate: bool = True) -> _ipm.IpmResult:
    if opts.precision != "auto":
        return _ipm.solve_standard(sf, _settings(opts, opts.precision))
    best = None
    for prec in ESCALATION if escalate else ESCALATION[:1]:
        r = _ipm.solve_standard(sf, _settings(opts, prec))
        r.precision = prec
        if best is None or _score(r) < _score(best):
            best = r
        if r.converged:
            break
    return best


def _converged(r: _ipm.IpmResult, opts: SolverOptions) -> bool:
    return (r.pinf <= 10 * opts.tol_feas and r.dinf <= 10 * opts.tol_feas
            and r.relgap <= 10 * opts.tol_gap)


def _validate(problem: ConicProblem) -> None:
    if problem.dim > MAX_DIM:
        raise ValueError(f"dimension {problem.dim} exceeds the supported maximum {MAX_DIM}")
    mats = [problem.cost] + [mp.matrix for mp in problem.maps]
    if not all(np.all(np.isfinite(M)) for M in mats) or \
            not all(np.isfinite(mp.rhs) for mp in problem.maps):
        raise ValueError("problem data must be finite")


def primal_violation(problem: ConicProblem, X: np.ndarray) -> float:
    """Largest relative violation of the maps, the PSD cone and (if set) X >= O."""
    nx = float(np.linalg.norm(X))
    worst = 0.0
    for mp in problem.maps:
        v = float(np.sum(mp.matrix * X)) - mp.rhs
        v = max(v, 0.0) if mp.sense == Sense.LEQ else abs(v)
        worst = max(worst, v / (1.0 + float(np.linalg.norm(mp.matrix)) * nx + abs(mp.rhs)))
    worst = max(worst, -float(np.linalg.eigvalsh(X)[0]) / (1.0 + nx))
    for i, j in problem.nonneg_pairs():
        worst = max(worst, -float(X[i, j]) / (1.0 + nx))
    return worst


# -- primal side ------------------------------------------------------------

def _min_trace(problem: ConicProblem, opts: SolverOptions):
    """Smallest trace over the feasible set (rough, double precision)."""
    tr_problem = ConicProblem(problem.dim, np.eye(problem.dim), problem.maps,
                              problem.nonneg_matrix, problem.nonneg_row0)
    sf, _ = _standard_form(tr_problem)
    r = _run(sf, opts, escalate=False)
    feasible = r.pinf <= 1e-6
    return (float(np.trace(r.X)) if feasible else None), r


def _outcome(problem, res, lay, opts, status=None, notes=(), R=None, scale=None) -> ConicOutcome:
    cert, tau = _certificate(problem, res, lay, scale)
    if status is None:
        status = Status.OPTIMAL if _converged(res, opts) else Status.STALLED
    return ConicOutcome(
        status=status, certificate=cert, gap=res.relgap, iterations=res.iterations,
        trace=res.trace, primal_value=res.pobj, dual_value=res.dobj, pinf=res.pinf,
        dinf=res.dinf, precision=getattr(res, "precision", opts.precision),
        trace_bound=R, trace_multiplier=tau, notes=list(notes),
    )


def _bound_active(problem, res, lay, R, opts) -> bool:
    _, tau = _certificate(problem, res, lay)
    return tau * R > 1e3 * opts.tol_gap * (1.0 + abs(res.pobj))


def solve(problem: ConicProblem, opts: SolverOptions | None = None) -> ConicOutcome:
    """Minimize ``cost . X`` and report the primal optimal value with a certificate."""
    opts = opts or SolverOptions()
    _validate(problem)
    if opts.trace_bound is not None:
        sf, lay = _standard_form(problem, opts.trace_bound)
        res = _run(sf, opts)
        return _outcome(problem, res, lay, opts, R=opts.trace_bound)

    tmin, rmin = _min_trace(problem, opts)
    if tmin is None:
        sf, lay = _standard_form(problem)
        res = _run(sf, opts, escalate=False)
        return _outcome(problem, res, lay, opts, status=Status.PRIMAL_INFEASIBLE_SUSPECTED,
                        notes=["minimum-trace phase found no feasible point"])

    R0 = 2.0 * tmin + problem.dim
    res = lay = None
    R = R0
    for R in (R0, R0 * 1e2, R0 * 1e4):
        sf, lay = _standard_form(problem, R)
        res = _run(sf, opts, escalate=False)
        if not _converged(res, opts):
            _, tau = _certificate(problem, res, lay)
            if not (res.pinf <= 1e-6 and tau * R > 1e-3 * (1.0 + abs(res.pobj))):
                res = _run(sf, opts)   # clearly-active bounds skip the expensive retry
        if res.pinf > 1e-6:
            continue
        if not _bound_active(problem, res, lay, R, opts):
            return _outcome(problem, res, lay, opts, R=R)

    probe = _recession_ray(problem, opts, rmin.X) or _unbounded_probe(problem, opts, R0)
    if probe is not None:
        return probe
    if res.pinf > 1e-6:
        return _outcome(problem, res, lay, opts, status=Status.PRIMAL_INFEASIBLE_SUSPECTED, R=R)
    return _outcome(problem, res, lay, opts, status=Status.STALLED, R=R,
                    notes=["trace bound stayed active; value may depend on the bound"])


def _recession_ray(problem: ConicProblem, opts: SolverOptions,
                   X_feas: np.ndarray) -> ConicOutcome | None:
    """Find W in the cone with homogeneous maps satisfied and ``cost . W < 0``.

    Together with the feasible ``X_feas`` this proves unboundedness: every
    ``X_feas + t W`` is feasible.
    """
    d = problem.dim
    base_sf, _ = _standard_form(problem)
    p = base_sf.a.shape[1]
    # same rows with zero right-hand sides, plus trace W = 1
    sf = _ipm.StandardForm(base_sf.C, np.concatenate([base_sf.A, np.eye(d)[None]]),
                           np.concatenate([np.zeros(base_sf.b.size), [1.0]]), base_sf.c,
                           np.vstack([base_sf.a, np.zeros((1, p))]))
    res = _run(sf, opts, escalate=False)
    W = (res.X + res.X.T) / 2
    slope = float(np.sum(problem.cost * W))
    thr = 1e-6 * (1.0 + float(np.linalg.norm(problem.cost)))
    worst = -float(np.linalg.eigvalsh(W)[0])
    for mp in problem.maps:
        v = float(np.sum(mp.matrix * W))
        worst = max(worst, (max(v, 0.0) if mp.sense == Sense.LEQ else abs(v))
                    / (1.0 + float(np.linalg.norm(mp.matrix))))
    for i, j in problem.nonneg_pairs():
        worst = max(worst, -float(W[i, j]))
    # the ray problem has no interior (W_00 = 0), so the solve stops short
    # of full accuracy; the relative check on W is what counts
    if res.pinf > 1e-6 or slope > -thr or worst > RAY_TOL:
        return None
    X_feas = (X_feas + X_feas.T) / 2
    base = float(np.sum(problem.cost * X_feas))
    t = 2.0 * (opts.unbounded_threshold + abs(base)) / -slope
    X = X_feas + t * W
    if primal_violation(problem, X) > RAY_TOL:
        return None
    m = len(problem.constraint_indices)
    nan_mat = np.full((d, d), np.nan)
    cert = ConicCertificate(X=X, y=np.full(m, np.nan), s=float("nan"), S=nan_mat)
    return ConicOutcome(
        status=Status.PRIMAL_UNBOUNDED_SUSPECTED, certificate=cert, gap=float("nan"),
        iterations=res.iterations, trace=res.trace, primal_value=float("-inf"),
        pinf=res.pinf, precision="double",
        notes=[f"recession direction with cost slope {slope:.6g} per unit trace"])


def _unbounded_probe(problem: ConicProblem, opts: SolverOptions, R: float) -> ConicOutcome | None:
    """Look for a feasible X with objective <= -Omega via X = D X' D, D = diag(1, sigma I).

    A first solve at a modest scale measures how the objective grows with
    sigma; the scale that should cross -Omega is then tried directly, with a
    few neighbours in case that solve is ill-conditioned.
    """
    omega = opts.unbounded_threshold

    def attempt(sigma):
        D = np.full(problem.dim, sigma)
        D[0] = 1.0
        sf, lay = _standard_form(problem, R, scale=D)
        res = _run(sf, opts, escalate=False)
        X = res.X * np.outer(D, D)
        return res, lay, D, float(np.sum(problem.cost * X)), primal_violation(problem, X)

    sigma0 = 10.0
    res, lay, D, val, feas = attempt(sigma0)
    if not (feas <= opts.tol_feas and val < 0):
        return None
    target = sigma0 * 2.0 * omega / abs(val)
    for sigma in (target, 3 * target, target / 3, 10 * target):
        res, lay, D, val, feas = attempt(sigma)
        if feas <= opts.tol_feas and val <= -omega:
            out = _outcome(problem, res, lay, opts, status=Status.PRIMAL_UNBOUNDED_SUSPECTED,
                           R=R, scale=D,
                           notes=[f"feasible iterate with objective {val:.6g} at scale {sigma:.3g}"])
            out.primal_value = float("-inf")
            return out
    return None


# -- dual side -------------------------------------------------------------

def structural_dual_infeasible(problem: ConicProblem) -> bool:
    """Prove the dual slack can never be PSD, by diagonal sign reasoning.

    Diagonal entries of a PSD matrix are nonnegative and a zero diagonal
    entry forces its row to vanish.  Each round solves LPs over the dual
    variables; an infeasible LP is a proof of dual infeasibility.  Returns
    False when the argument is inconclusive.
    """
    if problem.nonneg_matrix:
        return False
    d = problem.dim
    idx = problem.constraint_indices
    mats = [problem.maps[i].matrix * (1 if problem.maps[i].sense == Sense.LEQ else -1)
            for i in idx]
    nv = len(idx) + 1   # (y, s)
    bounds = [(0, None) if problem.maps[i].sense == Sense.LEQ else (None, None) for i in idx]
    bounds.append((None, None))

    def entry(i, j):
        # S_ij = cost_ij + sum coef_k y_k - s [i=j=0]
        coef = np.array([M[i, j] for M in mats] + [-1.0 if i == j == 0 else 0.0])
        return coef, float(problem.cost[i, j])

    scale = 1.0 + max(float(np.max(np.abs(M))) for M in [problem.cost] + mats)
    zero_rows: set[int] = set()
    while True:
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for i in range(d):
            coef, c0 = entry(i, i)
            A_ub.append(-coef)
            b_ub.append(c0)
        for i in zero_rows:
            for j in range(d):
                coef, c0 = entry(i, j)
                A_eq.append(coef)
                b_eq.append(-c0)
        kw = dict(A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
        if A_eq:
            kw.update(A_eq=np.array(A_eq), b_eq=np.array(b_eq))
        feas = linprog(np.zeros(nv), **kw)
        if feas.status == 2:
            return True
        if feas.status != 0:
            return False
        grown = False
        for i in range(d):
            if i in zero_rows:
                continue
            coef, c0 = entry(i, i)
            r = linprog(-coef, **kw)
            if r.status == 0 and c0 - r.fun <= 1e-12 * scale:
                zero_rows.add(i)
                grown = True
        if not grown:
            return False


def _purify(problem: ConicProblem, s_target: float, opts: SolverOptions):
    """Smallest-sum inequality multipliers with S(y, s_target) PSD, or None."""
    d = problem.dim
    idx = problem.constraint_indices
    leq = [i for i in idx if problem.maps[i].sense == Sense.LEQ]
    C = np.array(problem.cost, dtype=float)
    C[0, 0] -= s_target
    A = np.array([problem.maps[i].matrix for i in idx]).reshape(len(idx), d, d)
    b = np.array([1.0 if i in leq else 0.0 for i in idx])
    a = np.zeros((len(idx), len(leq)))
    for t, i in enumerate(leq):
        a[idx.index(i), t] = 1.0
    sf = _ipm.StandardForm(C, A, b, np.zeros(len(leq)), a)
    r = _run(sf, opts)
    if not (r.dinf <= 10 * opts.tol_feas):
        return None
    y = np.array([-r.lam[t] if i in leq else r.lam[t] for t, i in enumerate(idx)])
    return y


def solve_dual(problem: ConicProblem, opts: SolverOptions | None = None) -> ConicOutcome:
    """Maximize ``s`` over dual-feasible ``(y, s)`` and report the dual optimal value."""
    opts = opts or SolverOptions()
    _validate(problem)
    if structural_dual_infeasible(problem):
        return ConicOutcome(status=Status.DUAL_INFEASIBLE_CERTIFIED, certificate=None,
                            gap=float("nan"), iterations=0, dual_value=float("-inf"),
                            notes=["zero-diagonal sign argument leaves no feasible (y, s)"])
    sf, lay = _standard_form(problem)
    res = _run(sf, opts)
    out = _outcome(problem, res, lay, opts)
    if res.dinf > 10 * opts.tol_feas:
        out.status = Status.STALLED
        return out
    cert = out.certificate
    leq = [k for k, i in enumerate(problem.constraint_indices)
           if problem.maps[i].sense == Sense.LEQ]
    if leq and float(np.max(np.abs(cert.y[leq]))) > 1e3 and not problem.nonneg_matrix:
        # The analytic center of an unbounded optimal face has huge
        # multipliers; pick the smallest ones that still certify the value.
        s_target = res.dobj - 1e-7 * (1.0 + abs(res.dobj))
        y = _purify(problem, s_target, opts)
        if y is not None and np.all(np.isfinite(y)):
            out.notes.append("multipliers purified to the smallest sum")
            cert.y = y
            cert.s = s_target
            S = dual_slack(problem, y, s_target)
            cert.S = (S + S.T) / 2
    return out


# -- trace export -----------------------------------------------------------

TRACE_FIELDS = ("iter", "mu", "primal_obj", "dual_obj", "pinf", "dinf")


def trace_to_csv(outcome: ConicOutcome, stream=None) -> str:
    """Write the iteration log as CSV to ``stream`` (if given) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for row in outcome.trace:
        w.writerow([row["iter"]] + [repr(float(row[k])) for k in TRACE_FIELDS[1:]])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
