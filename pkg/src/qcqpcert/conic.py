"""Conic problem and certificate containers shared by the relaxations and the solver."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Sense(str, Enum):
    LEQ = "leq"
    EQ = "eq"


@dataclass(frozen=True)
class LinearMap:
    matrix: np.ndarray
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class ConicProblem:
    """``min cost . X`` over ``X`` PSD (optionally also entrywise >= 0) subject to linear maps.

    Exactly one map must be the lifting normalization ``H . X = 1``; its
    position is ``h_index``.  ``nonneg_row0`` only matters when
    ``nonneg_matrix`` is set and decides whether row/column 0 of ``X`` is
    also constrained to be nonnegative.
    """

    dim: int
    cost: np.ndarray
    maps: tuple[LinearMap, ...]
    nonneg_matrix: bool = False
    nonneg_row0: bool = True

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.cost.shape != (self.dim, self.dim):
            raise ValueError("cost has the wrong shape")
        for mp in self.maps:
            if mp.matrix.shape != (self.dim, self.dim):
                raise ValueError("constraint matrix has the wrong shape")
        self.h_index  # validates the normalization row

    @property
    def h_index(self) -> int:
        H = lifting_matrix(self.dim)
        hits = [i for i, mp in enumerate(self.maps)
                if mp.sense == Sense.EQ and mp.rhs == 1.0 and np.array_equal(mp.matrix, H)]
        if len(hits) != 1:
            raise ValueError("problem needs exactly one (H, EQ, 1) normalization map")
        return hits[0]

    @property
    def constraint_indices(self) -> list[int]:
        h = self.h_index
        return [i for i in range(len(self.maps)) if i != h]

    def nonneg_pairs(self) -> list[tuple[int, int]]:
        if not self.nonneg_matrix:
            return []
        lo = 0 if self.nonneg_row0 else 1
        return [(i, j) for i in range(lo, self.dim) for j in range(i, self.dim)]


@dataclass
class ConicCertificate:
    """Primal matrix plus dual ``(y, s)``.

    Multipliers of inequality maps enter the slack with a plus sign and are
    nonnegative (``S = Q0 + sum y_k Q_k - s H``); multipliers of equality maps
    enter with a minus sign and are free (``S = Q0 - sum y_k Q_k - s H``).
    For DNN problems ``Z`` holds the entrywise-nonnegative part, so that the
    full dual slack is ``S + Z`` with ``S`` PSD.
    """

    X: np.ndarray
    y: np.ndarray
    s: float
    S: np.ndarray
    Z: np.ndarray | None = None


def lifting_matrix(dim: int) -> np.ndarray:
    H = np.zeros((dim, dim))
    H[0, 0] = 1.0
    return H


def map_sign(sense: Sense) -> int:
    return 1 if sense == Sense.LEQ else -1


def dual_slack(problem: ConicProblem, y: np.ndarray, s: float) -> np.ndarray:
    """Full dual slack ``cost +/- sum y_k A_k - s H`` (before any DNN split)."""
    S = np.array(problem.cost, dtype=float)
    idx = problem.constraint_indices
    y = np.asarray(y, dtype=float)
    if y.size != len(idx):
        raise ValueError("multiplier vector has the wrong length")
    for yk, i in zip(y, idx):
        mp = problem.maps[i]
        S = S + map_sign(mp.sense) * yk * mp.matrix
    S[0, 0] -= s
    return S
