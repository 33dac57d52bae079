"""Random instance generators shared by the property tests and the acceptance run."""

import numpy as np

from qcqpcert.conic import Sense
from qcqpcert.qcqp_model import QcqpInstance, QuadraticForm


def sym(rng, n, scale=1.0):
    B = rng.normal(size=(n, n)) * scale
    return (B + B.T) / 2


def planted_A_prime(rng, strict=True):
    """Instance with a known (u, y) satisfying the KKT + PSD conditions.

    Active constraints get positive multipliers and q_k(u) = 0; inactive ones
    get y_k = 0 and q_k(u) < 0.  The objective is then chosen so that the
    Lagrangian Hessian is the planted P and its gradient vanishes at u.
    """
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 4))
    u = rng.uniform(-1.5, 1.5, size=n)
    y = np.zeros(m)
    cons = []
    for k in range(m):
        A, b = sym(rng, n), rng.normal(size=n)
        base = float(u @ A @ u + 2 * b @ u)
        if k == 0 or rng.random() < 0.5:
            y[k] = rng.uniform(0.2, 2.0)
            c = -base
        else:
            c = -base - rng.uniform(0.1, 1.0)
        cons.append(QuadraticForm(A, b, c))
    G = rng.normal(size=(n, n))
    P = G @ G.T + (0.5 if strict else 0.0) * np.eye(n)
    A0 = P - sum(yk * q.A for yk, q in zip(y, cons))
    b0 = -(P @ u) - sum(yk * q.b for yk, q in zip(y, cons))
    inst = QcqpInstance(n, QuadraticForm(A0, b0, 0.0), tuple((q, Sense.LEQ) for q in cons))
    return inst, u, y


def bounded_instance(rng, n=None, m_extra=None, radius=2.0):
    """Ball-constrained random instance, feasible with room around a planted point.

    The first constraint is ||u||^2 <= radius^2, so the grid box
    [-radius, radius]^n covers the whole feasible set.
    """
    n = int(rng.integers(1, 4)) if n is None else n
    m_extra = int(rng.integers(0, 3)) if m_extra is None else m_extra
    u0 = rng.uniform(-0.5, 0.5, size=n)
    cons = [QuadraticForm(np.eye(n), np.zeros(n), -radius ** 2)]
    for _ in range(m_extra):
        A, b = sym(rng, n), rng.normal(size=n)
        c = -float(u0 @ A @ u0 + 2 * b @ u0) - rng.uniform(0.3, 1.0)
        cons.append(QuadraticForm(A, b, c))
    obj = QuadraticForm(sym(rng, n), rng.normal(size=n), 0.0)
    return QcqpInstance(n, obj, tuple((q, Sense.LEQ) for q in cons))


def dual_feasible_instance(rng):
    """Convex objective (so y = 0 is dual feasible) plus random constraints."""
    n = int(rng.integers(1, 4))
    G = rng.normal(size=(n, n))
    obj = QuadraticForm(G @ G.T + 0.1 * np.eye(n), rng.normal(size=n), 0.0)
    inst = bounded_instance(rng, n=n)
    return QcqpInstance(n, obj, inst.constraints)
