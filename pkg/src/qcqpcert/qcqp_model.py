"""QCQP data model: quadratic forms, instances, the Lagrangian, homogenization, a grid oracle.

Every quadratic is stored as ``(A, b, c)`` and evaluated as
``q(u) = u^T A u + 2 b^T u + c``; note the factor 2 on the linear term.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize

from .conic import Sense, lifting_matrix

ASYMMETRY_TOL = 1e-9


class InstanceError(ValueError):
    """Raised for malformed or inconsistent problem documents."""


@dataclass(frozen=True)
class QuadraticForm:
    A: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InstanceError("A must be a nonempty square matrix")
        if b.size != A.shape[0]:
            raise InstanceError("b length does not match A")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.isfinite(self.c)):
            raise InstanceError("quadratic form data must be finite")
        A = (A + A.T) / 2
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.A @ u + 2.0 * self.b @ u + self.c)

    def gradient(self, u) -> np.ndarray:
        return 2.0 * (self.A @ np.asarray(u, dtype=float) + self.b)

    def lifted(self) -> np.ndarray:
        n = self.n
        Q = np.zeros((n + 1, n + 1))
        Q[0, 0] = self.c
        Q[0, 1:] = self.b
        Q[1:, 0] = self.b
        Q[1:, 1:] = self.A
        return Q

    def __eq__(self, other):
        return (isinstance(other, QuadraticForm) and np.array_equal(self.A, other.A)
                and np.array_equal(self.b, other.b) and self.c == other.c)

    __hash__ = None


@dataclass(frozen=True)
class QcqpInstance:
    """``min q_0(u)`` subject to ``q_k(u) <= 0`` (or ``= 0`` with ``u >= 0``).

    The objective is stored with ``c = 0``; a nonzero constant from the input
    lives in ``objective_shift`` and is added back to reported values.
    """

    n: int
    objective: QuadraticForm
    constraints: tuple[tuple[QuadraticForm, Sense], ...] = ()
    nonneg_vars: bool = False
    objective_shift: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise InstanceError("n must be at least 1")
        if self.objective.n != self.n:
            raise InstanceError("objective dimension does not match n")
        obj = self.objective
        if obj.c != 0.0:
            object.__setattr__(self, "objective_shift", self.objective_shift + obj.c)
            object.__setattr__(self, "objective", QuadraticForm(obj.A, obj.b, 0.0))
        cons = tuple((q, Sense(s)) for q, s in self.constraints)
        for q, s in cons:
            if q.n != self.n:
                raise InstanceError("constraint dimension does not match n")
            want = Sense.EQ if self.nonneg_vars else Sense.LEQ
            if s != want:
                raise InstanceError(
                    "nonneg_vars instances need 'eq' constraints; others need 'leq'")
        object.__setattr__(self, "constraints", cons)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def form(self, k: int) -> QuadraticForm:
        if not 0 <= k <= self.m:
            raise IndexError(f"constraint index {k} outside 0..{self.m}")
        return self.objective if k == 0 else self.constraints[k - 1][0]

    def forms(self) -> list[QuadraticForm]:
        return [self.objective] + [q for q, _ in self.constraints]

    def scale(self) -> float:
        return max(1.0, *(float(np.max(np.abs(np.concatenate([q.A.ravel(), q.b, [q.c]]))))
                          for q in self.forms()))


@dataclass(frozen=True)
class HomogenizedInstance:
    Qs: tuple[np.ndarray, ...]   # Q_0 .. Q_m
    H: np.ndarray
    senses: tuple[Sense, ...]
    nonneg: bool
    objective_shift: float = 0.0

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return len(self.Qs) - 1


@dataclass(frozen=True)
class LagrangianEval:
    value: float
    grad: np.ndarray
    hess: np.ndarray


# -- parsing ---------------------------------------------------------------

def _matrix(raw, n: int, what: str) -> np.ndarray:
    try:
        A = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{what}: not a numeric matrix") from exc
    if A.shape != (n, n):
        raise InstanceError(f"{what}: expected shape ({n}, {n}), got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InstanceError(f"{what}: entries must be finite")
    asym = float(np.max(np.abs(A - A.T))) if n else 0.0
    if asym > ASYMMETRY_TOL:
        raise InstanceError(f"{what}: matrix is not symmetric (max |A - A^T| = {asym:.3g})")
    return A


def _vector(raw, n: int, what: str) -> np.ndarray:
    try:
        b = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"{what}: not a numeric vector") from exc
    if b.shape != (n,):
        raise InstanceError(f"{what}: expected length {n}, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InstanceError(f"{what}: entries must be finite")
    return b


def _form(raw: Any, n: int, what: str) -> QuadraticForm:
    if not isinstance(raw, dict):
        raise InstanceError(f"{what}: expected an object with A, b, c")
    unknown = set(raw) - {"A", "b", "c", "sense"}
    if unknown:
        raise InstanceError(f"{what}: unknown keys {sorted(unknown)}")
    A = _matrix(raw.get("A", np.zeros((n, n)).tolist()), n, f"{what}.A")
    b = _vector(raw.get("b", [0.0] * n), n, f"{what}.b")
    c = raw.get("c", 0.0)
    if isinstance(c, bool) or not isinstance(c, (int, float)) or not np.isfinite(c):
        raise InstanceError(f"{what}.c: expected a finite number")
    return QuadraticForm(A, b, float(c))


def parse_instance(document: str | bytes | dict) -> QcqpInstance:
    """Validate a JSON problem document (text or already-decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise InstanceError("document must be a JSON object")
    allowed = {"n", "nonneg_vars", "objective", "constraints", "name", "description"}
    unknown = set(document) - allowed
    if unknown:
        raise InstanceError(f"unknown top-level keys {sorted(unknown)}")
    n = document.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InstanceError("n must be a positive integer")
    nonneg = document.get("nonneg_vars", False)
    if not isinstance(nonneg, bool):
        raise InstanceError("nonneg_vars must be a boolean")
    if "objective" not in document:
        raise InstanceError("missing objective")
    objective = _form(document["objective"], n, "objective")
    raw_cons = document.get("constraints", [])
    if not isinstance(raw_cons, list):
        raise InstanceError("constraints must be a list")
    cons = []
    for k, rc in enumerate(raw_cons, start=1):
        what = f"constraints[{k - 1}]"
        q = _form(rc, n, what)
        sense = rc.get("sense", "eq" if nonneg else "leq")
        if sense not in ("leq", "eq"):
            raise InstanceError(f"{what}.sense must be 'leq' or 'eq'")
        cons.append((q, Sense(sense)))
    name = document.get("name", "")
    if not isinstance(name, str):
        raise InstanceError("name must be a string")
    return QcqpInstance(n=n, objective=objective, constraints=tuple(cons),
                        nonneg_vars=nonneg, name=name)


def serialize_instance(inst: QcqpInstance) -> dict:
    """Inverse of :func:`parse_instance` (the objective shift goes back into ``c``)."""
    def form(q: QuadraticForm, c: float | None = None) -> dict:
        return {"A": q.A.tolist(), "b": q.b.tolist(), "c": q.c if c is None else c}

    doc: dict = {"n": inst.n, "nonneg_vars": inst.nonneg_vars}
    if inst.name:
        doc["name"] = inst.name
    doc["objective"] = form(inst.objective, inst.objective_shift)
    doc["constraints"] = [dict(form(q), sense=s.value) for q, s in inst.constraints]
    return doc


# -- evaluation ------------------------------------------------------------

def eval_constraint(inst: QcqpInstance, k: int, u) -> float:
    """``q_k(u)``; ``k = 0`` is the objective (stored with ``c_0 = 0``)."""
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n,):
        raise ValueError(f"u must have length {inst.n}")
    return inst.form(k)(u)


def feasibility_residual(inst: QcqpInstance, u) -> float:
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n,):
        raise ValueError(f"u must have length {inst.n}")
    worst = 0.0
    for q, s in inst.constraints:
        v = q(u)
        worst = max(worst, abs(v) if s == Sense.EQ else max(v, 0.0))
    if inst.nonneg_vars:
        worst = max(worst, float(np.max(-u, initial=0.0)))
    return worst


def homogenize(inst: QcqpInstance) -> HomogenizedInstance:
    Qs = tuple(q.lifted() for q in inst.forms())
    for Q in Qs:
        Q.setflags(write=False)
    H = lifting_matrix(inst.n + 1)
    H.setflags(write=False)
    return HomogenizedInstance(Qs, H, tuple(s for _, s in inst.constraints),
                               inst.nonneg_vars, inst.objective_shift)


def multiplier_combination(inst: QcqpInstance, y, sign: int = 1):
    """``(A(y), b(y), c(y))`` of ``q_0 + sign * sum_k y_k q_k``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != inst.m:
        raise ValueError(f"y must have length {inst.m}")
    A = inst.objective.A.copy()
    b = inst.objective.b.copy()
    c = inst.objective.c
    for yk, (q, _) in zip(y, inst.constraints):
        A += sign * yk * q.A
        b += sign * yk * q.b
        c += sign * yk * q.c
    return A, b, c


def lagrangian(inst: QcqpInstance, u, y) -> LagrangianEval:
    """``L(u, y) = q_0(u) + sum_k y_k q_k(u)`` with its gradient and Hessian in ``u``."""
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.n,):
        raise ValueError(f"u must have length {inst.n}")
    A, b, c = multiplier_combination(inst, y)
    value = float(u @ A @ u + 2.0 * b @ u + c)
    return LagrangianEval(value, 2.0 * (A @ u + b), 2.0 * A)


# -- grid oracle -----------------------------------------------------------

@dataclass(frozen=True)
class ZetaEstimate:
    """Best feasible value found: an upper bound on the optimal value, never a lower bound."""

    upper_bound: float          # internal objective (c_0 = 0); add objective_shift to report
    argmin: np.ndarray | None
    feasible_found: bool
    evaluated: int = 0
    notes: tuple = field(default_factory=tuple)


def _box_axes(n: int, box, points: int) -> list[np.ndarray]:
    lo, hi = box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("box must be finite")
    if np.any(hi < lo):
        raise ValueError("box is empty")
    return [np.linspace(lo[i], hi[i], points) for i in range(n)]


def _tolerances(inst: QcqpInstance, h: float, radius: float) -> np.ndarray:
    # Inequalities must hold essentially exactly, otherwise slack at the grid
    # scale lets the oracle undercut the true optimum.  Equalities get a floor
    # here and a per-point allowance in _eq_allowance.
    tol = []
    for q, s in inst.constraints:
        size = 1.0 + float(np.max(np.abs(q.A))) * radius**2 + float(np.max(np.abs(q.b))) * radius \
            + abs(q.c)
        tol.append(1e-12 * size)
    return np.array(tol)


def _eq_allowance(q: QuadraticForm, U: np.ndarray, h: float) -> np.ndarray:
    """Largest |q(u)| compatible with a root of q inside the grid cell around each row of U.

    Taylor: q(u + d) = q(u) + grad . d + d^T A d with |d_i| <= h/2.
    """
    G = 2.0 * (U @ q.A + q.b)
    n = U.shape[1]
    return 0.5 * h * np.sum(np.abs(G), axis=1) + float(np.linalg.norm(q.A, 2)) * n * h * h / 4.0


def brute_force_zeta(inst: QcqpInstance, box=(-10.0, 10.0), grid_points_per_axis: int = 101,
                     chunk: int = 200_000) -> ZetaEstimate:
    """Grid search plus coordinate-descent refinement over a finite box (``n <= 4``)."""
    n = inst.n
    if n > 4:
        raise ValueError("brute_force_zeta supports n <= 4")
    if grid_points_per_axis < 11:
        raise ValueError("grid_points_per_axis must be at least 11")
    axes = _box_axes(n, box, grid_points_per_axis)
    spans = np.array([ax[-1] - ax[0] for ax in axes])
    h = float(np.max(spans)) / (grid_points_per_axis - 1)
    radius = max(1.0, max(float(np.max(np.abs(ax))) for ax in axes))
    tol = _tolerances(inst, h, radius)

    def feasible_mask(U):
        ok = np.ones(U.shape[0], dtype=bool)
        for (q, s), t in zip(inst.constraints, tol):
            v = np.einsum("ij,jk,ik->i", U, q.A, U) + 2.0 * U @ q.b + q.c
            if s == Sense.EQ:
                ok &= np.abs(v) <= t + _eq_allowance(q, U, h)
            else:
                ok &= v <= t
        if inst.nonneg_vars:
            ok &= np.all(U >= 0, axis=1)
        return ok

    q0 = inst.objective
    total = grid_points_per_axis ** n
    best_val, best_u = np.inf, None
    mesh_shape = (grid_points_per_axis,) * n
    for start in range(0, total, chunk):
        flat = np.arange(start, min(total, start + chunk))
        idx = np.unravel_index(flat, mesh_shape)
        U = np.column_stack([axes[i][idx[i]] for i in range(n)])
        ok = feasible_mask(U)
        if not np.any(ok):
            continue
        U = U[ok]
        vals = np.einsum("ij,jk,ik->i", U, q0.A, U) + 2.0 * U @ q0.b
        vmin = float(vals.min())
        near = vals <= vmin + 1e-12 * (1.0 + abs(vmin))
        cand = U[near][np.argmin(np.linalg.norm(U[near], axis=1))]
        if vmin < best_val - 1e-12 * (1.0 + abs(vmin)) or (
                vmin <= best_val + 1e-12 * (1.0 + abs(vmin))
                and best_u is not None and np.linalg.norm(cand) < np.linalg.norm(best_u)):
            best_val, best_u = min(vmin, best_val), cand
    if best_u is None:
        return ZetaEstimate(np.inf, None, False, total, ("no feasible grid point",))

    # Refinement may not add violation beyond what the grid point already
    # has: near a double root a tolerance t would otherwise let it drift by
    # sqrt(t).
    u = best_u.copy()
    caps = []
    for (q, s), t in zip(inst.constraints, tol):
        v0 = q(u)
        caps.append(max(abs(v0), 1e-6 * t) if s == Sense.EQ else max(v0, 0.0) + 1e-6 * t)

    def ok1(v):
        if inst.nonneg_vars and np.any(v < 0):
            return False
        for (q, s), cap in zip(inst.constraints, caps):
            qv = q(v)
            if (abs(qv) if s == Sense.EQ else qv) > cap:
                return False
        return True

    val = q0(u)
    step = h
    floor = 1e-13 * radius
    while step > floor:
        improved = False
        for i in range(n):
            for sgn in (1.0, -1.0):
                v = u.copy()
                v[i] += sgn * step
                fv = q0(v)
                if fv < val and ok1(v):
                    u, val, improved = v, fv, True
        if not improved:
            step /= 2.0
    notes: tuple = ()
    if any(s == Sense.EQ for _, s in inst.constraints):
        u, val, notes = _restore_equalities(inst, u, val)
    return ZetaEstimate(float(val), u, True, total, notes)


def _restore_equalities(inst: QcqpInstance, u: np.ndarray, val: float):
    """Move a near-feasible grid point onto the equality constraints.

    A grid point only satisfies an equality up to the cell size, so its value
    can undercut the true minimum.  SLSQP from the grid point, followed by a
    bounded least-squares restoration, gives a point feasible to rounding.
    """
    eqs = [q for q, s in inst.constraints if s == Sense.EQ]
    lo = 0.0 if inst.nonneg_vars else -np.inf
    bounds = [(lo if inst.nonneg_vars else None, None)] * inst.n
    cons = [{"type": "eq", "fun": q, "jac": q.gradient} for q in eqs]
    try:
        sol = minimize(inst.objective, u, jac=inst.objective.gradient, method="SLSQP",
                       bounds=bounds, constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
        start = sol.x
    except ValueError:
        start = u
    fix = least_squares(lambda v: np.array([q(v) for q in eqs]), start,
                        jac=lambda v: np.array([q.gradient(v) for q in eqs]),
                        bounds=(np.full(inst.n, lo), np.full(inst.n, np.inf)),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    v = fix.x
    if feasibility_residual(inst, v) <= 1e-10 * inst.scale() * (1.0 + float(np.max(np.abs(v)))) ** 2:
        return v, float(inst.objective(v)), ("equalities restored by local solve",)
    return u, val, ("equalities hold only to grid accuracy",)
