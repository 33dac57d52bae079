"""Primal-dual interior-point core for small dense conic programs.

Standard form handled here::

    minimize    C . X + c . x
    subject to  A_i . X + a_i . x = b_i      (i = 1..q)
                X in S^d_+,  x >= 0

with dual ``maximize b . lam`` over ``S = C - sum lam_i A_i  in S^d_+`` and
``z = c - a^T lam >= 0``.  Directions use Nesterov-Todd scaling with a
Mehrotra predictor-corrector from an infeasible start.

Arithmetic is selectable: ``"double"`` runs on LAPACK, ``"long"`` on
``np.longdouble`` and ``"mp<bits>"`` (e.g. ``"mp128"``) on mpmath numbers, the
latter two through the portable kernels in :mod:`qcqpcert.linalg`.  The
degenerate problems this package cares about (no Slater point on one side)
lose half their digits to the central path, so extra precision buys back
accuracy directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import linalg as la


@dataclass
class StandardForm:
    C: np.ndarray                 # (d, d)
    A: np.ndarray                 # (q, d, d)
    b: np.ndarray                 # (q,)
    c: np.ndarray | None = None   # (p,)
    a: np.ndarray | None = None   # (q, p)

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, *self.C.shape)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        q = self.A.shape[0]
        self.c = np.zeros(0) if self.c is None else np.asarray(self.c, dtype=float).reshape(-1)
        if self.a is None:
            self.a = np.zeros((q, self.c.size))
        self.a = np.asarray(self.a, dtype=float).reshape(q, self.c.size)
        if self.b.size != q:
            raise ValueError("b length does not match the number of constraints")

    @property
    def d(self) -> int:
        return self.C.shape[0]

    @property
    def p(self) -> int:
        return self.c.size

    @property
    def q(self) -> int:
        return self.A.shape[0]


@dataclass
class IpmSettings:
    tol_gap: float = 1e-9
    tol_feas: float = 1e-9
    max_iters: int = 200
    step_fraction: float = 0.98
    sigma_max: float = 1.0
    blowup: float = 1e13
    precision: str = "double"
    stall_window: int = 12        # stop when the best score stops halving this often


@dataclass
class IpmResult:
    X: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    S: np.ndarray
    z: np.ndarray
    converged: bool
    iterations: int
    pobj: float
    dobj: float
    pinf: float
    dinf: float
    relgap: float
    reason: str
    trace: list = field(default_factory=list)


class _Backend:
    """Dense kernels for one arithmetic."""

    def __init__(self, precision: str):
        self.precision = precision
        if precision == "double":
            self.dtype = np.float64
        elif precision == "long":
            self.dtype = np.longdouble
        elif precision.startswith("mp"):
            self.dtype = object
            self.bits = int(precision[2:])
        else:
            raise ValueError(f"unknown precision {precision!r}")

    def asarray(self, a):
        a = np.asarray(a, dtype=float)
        if self.dtype is object:
            return np.vectorize(mpmath.mpf, otypes=[object])(a) if a.size else a.astype(object)
        return a.astype(self.dtype)

    def tofloat(self, a):
        return np.asarray(a, dtype=float) if self.dtype is not object else \
            np.vectorize(float, otypes=[float])(a) if np.size(a) else np.asarray(a, dtype=float)

    def eye(self, n):
        return self.asarray(np.eye(n))

    def ones(self, n):
        return self.asarray(np.ones(n))

    def sqrt(self, a):
        return la.sqrt(a)

    def chol(self, M):
        if self.dtype is np.float64:
            return np.linalg.cholesky(M)
        return la.cholesky(M)

    def svd(self, B):
        if self.dtype is np.float64:
            U, s, Vt = np.linalg.svd(B)
            return U, s, Vt.T
        return la.svd_jacobi(B)

    def eigmin(self, M):
        if self.dtype is np.float64:
            return float(np.linalg.eigvalsh(M)[0])
        return float(la.sym_eig(M, tol=la.eps_of(M)).eigvals[0])

    def tri_inv(self, L):
        if self.dtype is np.float64:
            return np.linalg.inv(L)
        return la.solve_lower(L, self.eye(L.shape[0]))

    def solve_psd(self, M, r, reg):
        if self.dtype is np.float64:
            try:
                cf = np.linalg.cholesky(M + reg * np.eye(M.shape[0]))
                return np.linalg.solve(cf.T, np.linalg.solve(cf, r))
            except np.linalg.LinAlgError:
                return np.linalg.lstsq(M, r, rcond=None)[0]
        return la.solve_psd(M, r, reg)


def _sym(M):
    return (M + M.T) / 2


def _fnorm(M) -> float:
    return float(np.sqrt(float(np.sum(M * M)))) if np.size(M) else 0.0


def solve_standard(sf: StandardForm, settings: IpmSettings | None = None) -> IpmResult:
    st = settings or IpmSettings()
    if st.precision.startswith("mp"):
        with mpmath.workprec(int(st.precision[2:])):
            return _solve(sf, st)
    return _solve(sf, st)


def _solve(sf: StandardForm, st: IpmSettings) -> IpmResult:
    bk = _Backend(st.precision)
    d, p, q = sf.d, sf.p, sf.q

    # Row and cost normalization in double; undone on exit.
    rown = np.sqrt(np.einsum("kij,kij->k", sf.A, sf.A) + np.sum(sf.a**2, axis=1))
    rown[rown == 0] = 1.0
    cs = max(1.0, float(np.linalg.norm(sf.C)), float(np.linalg.norm(sf.c)))
    bn = sf.b / rown
    bs = max(1.0, float(np.max(np.abs(bn)))) if q else 1.0

    A = bk.asarray(sf.A / rown[:, None, None])
    a = bk.asarray(sf.a / rown[:, None])
    b = bk.asarray(bn / bs)
    C = bk.asarray(sf.C / cs)
    c = bk.asarray(sf.c / cs)

    nb = 1.0 + _fnorm(b)
    nc = 1.0 + np.hypot(_fnorm(C), _fnorm(c))
    bmax = float(np.max(np.abs(bn / bs))) if q else 0.0
    xi = max(10.0, np.sqrt(d), d * (1.0 + bmax) / 2.0)
    eta = max(10.0, np.sqrt(d))
    X = bk.eye(d) * xi
    x = bk.ones(p) * xi
    S = bk.eye(d) * eta
    z = bk.ones(p) * eta
    lam = bk.asarray(np.zeros(q))
    nu = d + p
    eps = la.eps_of(C)
    trace = []
    reason = "max_iters"
    converged = False

    def residuals(X, x, S, z, lam):
        rp = b - np.array([np.sum(A[k] * X) for k in range(q)], dtype=A.dtype) - a @ x
        Rd = C - np.tensordot(lam, A, axes=(0, 0)) - S if q else C - S
        rdl = c - a.T @ lam - z
        return rp, Rd, rdl

    def measures(X, x, S, z, lam):
        rp, Rd, rdl = residuals(X, x, S, z, lam)
        pobj = float(np.sum(C * X) + c @ x)
        dobj = float(b @ lam) if q else 0.0
        pinf = _fnorm(rp) / nb
        dinf = np.hypot(_fnorm(Rd), _fnorm(rdl)) / nc
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        compl = (float(np.sum(X * S)) + float(x @ z)) / (1.0 + abs(pobj) + abs(dobj))
        return rp, Rd, rdl, pobj, dobj, pinf, dinf, relgap, compl

    best = None
    history = []
    it = 0
    for it in range(st.max_iters + 1):
        rp, Rd, rdl, pobj, dobj, pinf, dinf, relgap, compl = measures(X, x, S, z, lam)
        mu = (np.sum(X * S) + x @ z) / nu
        trace.append(dict(iter=it, mu=float(mu) * cs * bs, primal_obj=pobj * cs * bs,
                          dual_obj=dobj * cs * bs, pinf=pinf, dinf=dinf))
        score = max(pinf, dinf, relgap, compl)
        if best is None or score <= best[0]:
            best = (score, X, x, S, z, lam)
        history.append(best[0])
        if (pinf <= st.tol_feas and dinf <= st.tol_feas
                and relgap <= st.tol_gap and compl <= st.tol_gap):
            converged = True
            reason = "converged"
            break
        if it == st.max_iters:
            break
        w_ = st.stall_window
        if len(history) > w_ and history[-1] > 0.5 * history[-1 - w_]:
            reason = "stalled"
            break
        big = max(float(np.max(np.abs(X))), float(np.max(np.abs(S))),
                  float(np.max(np.abs(lam))) if q else 0.0)
        if big > st.blowup:
            reason = "blowup"
            break

        try:
            Lx = bk.chol(X)
            Ls = bk.chol(S)
        except np.linalg.LinAlgError:
            reason = "cholesky"
            break
        Us, v, Vs = bk.svd(Ls.T @ Lx)   # scaled point: X~ = S~ = diag(v)
        if not float(np.min(bk.tofloat(v))) > 0:
            reason = "degenerate"
            break
        r4 = bk.sqrt(v)
        G = (Lx @ Vs) / r4
        Ginv = (Us.T @ Ls.T) / r4[:, None]
        At = np.array([G.T @ A[k] @ G for k in range(q)], dtype=A.dtype).reshape(q, d, d)
        w = bk.sqrt(x / np.maximum(z, 1e-300)) if p else x
        vl = bk.sqrt(x * z) if p else x
        at = a * w
        Rdt = G.T @ Rd @ G
        rdlt = w * rdl
        Af = At.reshape(q, d * d)
        M = _sym(Af @ Af.T + at @ at.T)
        trM = float(np.trace(bk.tofloat(M))) if q else 1.0
        reg = 10 * eps * max(1.0, trM / max(q, 1))

        def msolve(r):
            try:
                return bk.solve_psd(M, r, reg)
            except np.linalg.LinAlgError:
                return bk.solve_psd(M, r, 1e3 * reg)

        def direction(K, kl):
            rhs = rp - Af @ (K - Rdt).reshape(-1) - at @ (kl - rdlt)
            dlam = msolve(rhs)
            res = rhs - M @ dlam
            nres = _fnorm(res)
            for _ in range(4):   # iterative refinement against the ridge
                if nres <= eps * (1.0 + _fnorm(rhs)):
                    break
                cand = dlam + msolve(res)
                cres = rhs - M @ cand
                if _fnorm(cres) >= nres:
                    break
                dlam, res, nres = cand, cres, _fnorm(cres)
            dSt = Rdt - np.tensordot(dlam, At, axes=(0, 0)) if q else Rdt
            dXt = K - dSt
            dzt = rdlt - at.T @ dlam
            dxt = kl - dzt
            return _sym(dXt), _sym(dSt), dxt, dzt, dlam

        def step_to_boundary(dV, dl):
            T = dV / np.outer(r4, r4)
            lmin = bk.eigmin(_sym(T))
            amax = np.inf if lmin >= 0 else -1.0 / lmin
            if p:
                neg = bk.tofloat(dl) < 0
                if np.any(neg):
                    amax = min(amax, float(np.min(bk.tofloat(-vl[neg] / dl[neg]))))
            return amax

        Vd = np.diag(v)
        dXa, dSa, dxa, dza, _ = direction(-Vd, -vl)
        ap = min(1.0, step_to_boundary(dXa, dxa))
        ad = min(1.0, step_to_boundary(dSa, dza))
        mu_aff = (np.sum((Vd + ap * dXa) * (Vd + ad * dSa))
                  + (vl + ap * dxa) @ (vl + ad * dza)) / nu
        sigma = min(st.sigma_max, max(0.0, float(mu_aff / mu) ** 3)) if mu > 0 else 0.0
        R = sigma * mu * bk.eye(d) - np.diag(v * v) - _sym(dXa @ dSa)
        K = 2 * R / (v[:, None] + v[None, :])
        kl = (sigma * mu - vl * vl - dxa * dza) / vl if p else vl
        dXt, dSt, dxt, dzt, dlam = direction(K, kl)
        ap = min(1.0, st.step_fraction * step_to_boundary(dXt, dxt))
        ad = min(1.0, st.step_fraction * step_to_boundary(dSt, dzt))
        if ap < 1e-12 and ad < 1e-12:
            reason = "stalled"
            break
        dX = _sym(G @ dXt @ G.T)
        dS = _sym(Ginv.T @ dSt @ Ginv)
        # Guard against round-off pushing the update out of the cone.
        for _ in range(30):
            Xn = _sym(X + ap * dX)
            try:
                bk.chol(Xn)
                break
            except np.linalg.LinAlgError:
                ap *= 0.5
        for _ in range(30):
            Sn = _sym(S + ad * dS)
            try:
                bk.chol(Sn)
                break
            except np.linalg.LinAlgError:
                ad *= 0.5
        X = Xn
        S = Sn
        if p:
            x = x + ap * w * dxt
            z = z + ad * dzt / w
        lam = lam + ad * dlam

    if not converged and best is not None:
        _, X, x, S, z, lam = best
    rp, Rd, rdl, pobj, dobj, pinf, dinf, relgap, compl = measures(X, x, S, z, lam)
    scale_lam = cs / rown
    return IpmResult(
        X=bk.tofloat(X) * bs, x=bk.tofloat(x) * bs, lam=bk.tofloat(lam) * scale_lam,
        S=bk.tofloat(S) * cs, z=bk.tofloat(z) * cs,
        converged=converged, iterations=it, pobj=pobj * cs * bs, dobj=dobj * cs * bs,
        pinf=pinf, dinf=dinf, relgap=relgap, reason=reason, trace=trace,
    )
