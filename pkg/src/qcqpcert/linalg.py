"""Dense symmetric linear algebra: Jacobi eigensolver, definiteness, rank, rank-1 extraction.

Every kernel here is written against plain array arithmetic so that it runs
unchanged on ``float64``, ``np.longdouble`` and object arrays of
``mpmath.mpf``.  The interior-point solver relies on that to run in extended
precision on the small, degenerate problems where double precision is not
enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import mpmath
import numpy as np


class EigenDecomposition(NamedTuple):
    eigvals: np.ndarray   # ascending
    eigvecs: np.ndarray   # orthonormal columns


class PsdStatus(NamedTuple):
    min_eig: float
    is_psd: bool
    is_pd: bool


@dataclass(frozen=True)
class Rank1Factor:
    x: np.ndarray
    has_unit_coordinate: bool   # False when x_0 == 0 (degenerate lift)


# -- scalar helpers that work for every supported dtype ---------------------

def _is_object(a) -> bool:
    return isinstance(a, np.ndarray) and a.dtype == object


def sqrt(a):
    if _is_object(a):
        return np.vectorize(mpmath.sqrt, otypes=[object])(a)
    if isinstance(a, mpmath.mpf):
        return mpmath.sqrt(a)
    return np.sqrt(a)


def eps_of(a) -> float:
    if _is_object(a) or isinstance(a, mpmath.mpf):
        return float(mpmath.mpf(2) ** (-mpmath.mp.prec))
    return float(np.finfo(np.asarray(a).dtype).eps)


def _rotation_tangent(num, den):
    """Smaller root t of t^2 + 2 theta t - 1 = 0 for theta = num / den, without overflow."""
    if abs(num) <= abs(den):
        theta = num / den
        sgn = 1 if theta >= 0 else -1
        return sgn / (abs(theta) + sqrt(theta * theta + 1))
    # |theta| > 1: work with r = 1 / theta
    r = den / num
    sgn = 1 if r >= 0 else -1
    return sgn * abs(r) / (1 + sqrt(1 + r * r))


def symmetrize(M):
    M = np.asarray(M)
    return (M + M.T) / 2


# -- eigen-decomposition ---------------------------------------------------

def _check_finite(M):
    if not _is_object(M) and not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")


def sym_eig(M, tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||M||_F`` (or after ``max_sweeps``).  Eigenvalues are returned in
    ascending order with matching orthonormal eigenvector columns.
    """
    M = np.array(M, dtype=object if _is_object(np.asarray(M)) else None)
    if M.dtype.kind in "iub":
        M = M.astype(float)
    _check_finite(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("sym_eig needs a square matrix")
    A = symmetrize(M)
    n = A.shape[0]
    V = np.zeros_like(A)
    for i in range(n):
        V[i, i] = 1
    fro = sqrt(np.sum(A * A))
    if fro == 0 or n == 1:
        return EigenDecomposition(np.diag(A).copy(), V)
    thresh = tol * fro
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = sqrt(np.sum(A[mask] * A[mask]))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0:
                    continue
                t = _rotation_tangent(A[q, q] - A[p, p], 2 * apq)
                c = 1 / sqrt(t * t + 1)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w.astype(float), kind="stable") if not _is_object(w) else \
        sorted(range(n), key=lambda i: w[i])
    return EigenDecomposition(w[order], V[:, order])


def eigvalsh(M, tol: float | None = None):
    M = np.asarray(M)
    return sym_eig(M, tol=tol if tol is not None else eps_of(M)).eigvals


def spectral_norm(M) -> float:
    w = sym_eig(M).eigvals
    return float(max(abs(w[0]), abs(w[-1]))) if len(w) else 0.0


# -- definiteness and rank -------------------------------------------------

def psd_status(M, tol: float = 1e-9) -> PsdStatus:
    """Minimum eigenvalue with PSD / PD verdicts relative to ``1 + ||M||_2``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = sym_eig(np.asarray(M, dtype=float)).eigvals
    scale = 1.0 + max(abs(float(w[0])), abs(float(w[-1])))
    lmin = float(w[0])
    return PsdStatus(lmin, lmin >= -tol * scale, lmin >= tol * scale)


def numeric_rank(M, tol: float = 1e-6) -> int:
    w = np.abs(sym_eig(np.asarray(M, dtype=float)).eigvals)
    cut = tol * max(1.0, float(w.max()) if w.size else 0.0)
    return int(np.sum(w > cut))


def rank1_extract(X, tol: float = 1e-6) -> Rank1Factor | None:
    """Return x with X ~ x x^T when the second eigenvalue is negligible.

    The sign is fixed so that x_0 >= 0; if x_0 vanishes the first nonzero
    entry is made positive and the factor is flagged as a degenerate lift.
    """
    X = np.asarray(X, dtype=float)
    eig = sym_eig(X)
    w, V = eig.eigvals, eig.eigvecs
    l1 = float(w[-1])
    if l1 <= 0:
        return None
    l2 = float(w[-2]) if len(w) > 1 else 0.0
    if l2 > tol * l1:
        return None
    x = np.sqrt(l1) * V[:, -1]
    unit = abs(x[0]) > tol * np.linalg.norm(x)
    if unit:
        if x[0] < 0:
            x = -x
    else:
        x[0] = 0.0
        nz = np.flatnonzero(np.abs(x) > tol * np.linalg.norm(x))
        if nz.size and x[nz[0]] < 0:
            x = -x
    return Rank1Factor(x, bool(unit))


# -- factorizations used by the interior-point core ------------------------

def cholesky(M):
    """Lower Cholesky factor; raises ``np.linalg.LinAlgError`` unless M is PD."""
    M = np.asarray(M)
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - np.sum(L[j, :j] * L[j, :j])
        if not d > 0:
            raise np.linalg.LinAlgError("matrix is not positive definite")
        L[j, j] = sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_lower(L, B):
    """Forward substitution L Y = B (B may be a vector or a matrix)."""
    B = np.asarray(B)
    Y = np.zeros_like(B) if B.dtype == L.dtype else np.zeros(B.shape, dtype=L.dtype)
    for i in range(L.shape[0]):
        Y[i] = (B[i] - L[i, :i] @ Y[:i]) / L[i, i]
    return Y


def solve_upper(U, B):
    B = np.asarray(B)
    Y = np.zeros_like(B) if B.dtype == U.dtype else np.zeros(B.shape, dtype=U.dtype)
    n = U.shape[0]
    for i in range(n - 1, -1, -1):
        Y[i] = (B[i] - U[i, i + 1:] @ Y[i + 1:]) / U[i, i]
    return Y


def solve_psd(M, r, reg: float = 0.0):
    """Solve a symmetric positive (semi)definite system via Cholesky with a ridge."""
    n = M.shape[0]
    Mr = M.copy()
    for i in range(n):
        Mr[i, i] = Mr[i, i] + reg
    L = cholesky(Mr)
    return solve_upper(L.T, solve_lower(L, r))


def svd_jacobi(B, tol: float | None = None, max_sweeps: int = 100):
    """One-sided (Hestenes) Jacobi SVD of a square matrix: ``B = U diag(s) V^T``.

    Singular values come back in descending order.
    """
    B = np.asarray(B)
    W = B.copy()
    n = W.shape[1]
    V = np.zeros((n, n), dtype=W.dtype)
    for i in range(n):
        V[i, i] = 1
    tol = eps_of(B) if tol is None else tol
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = np.sum(W[:, p] * W[:, p])
                beta = np.sum(W[:, q] * W[:, q])
                gamma = np.sum(W[:, p] * W[:, q])
                if gamma == 0 or abs(gamma) <= tol * sqrt(alpha * beta):
                    continue
                rotated = True
                t = _rotation_tangent(beta - alpha, 2 * gamma)
                c = 1 / sqrt(1 + t * t)
                s = c * t
                wp = W[:, p].copy()
                W[:, p] = c * wp - s * W[:, q]
                W[:, q] = s * wp + c * W[:, q]
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
        if not rotated:
            break
    sig = sqrt(np.sum(W * W, axis=0))
    key = [float(v) for v in sig]
    order = sorted(range(n), key=lambda i: -key[i])
    sig = sig[order]
    W = W[:, order]
    V = V[:, order]
    U = W / np.where(sig == 0, 1, sig)
    return U, sig, V
