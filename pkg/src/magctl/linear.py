"""Exact linearization at the equilibrium and the Kalman rank test."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exact import rational_rank
from .system import SystemSpec

Matrix = list[list[Fraction]]


@dataclass(frozen=True)
class Linearization:
    A: Matrix
    B: Matrix
    kalman: Matrix  # [B, AB, ..., A^(n-1) B], n x n*m
    kalman_rank: int

    @property
    def controllable(self) -> bool:
        return self.kalman_rank == len(self.A)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col) if x and y), Fraction(0)) for col in cols]
            for row in a]


def controllability_matrix(A: Matrix, B: Matrix) -> Matrix:
    n = len(A)
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(matmul(A, blocks[-1]))
    return [sum((blk[i] for blk in blocks), []) for i in range(n)]


def linearize(sys: SystemSpec) -> Linearization:
    """``A = d f0/dx`` and ``B = [f1 .. fm]`` at the equilibrium with ``u = 0``.

    The control fields' Jacobians are multiplied by ``u = 0`` and drop out.
    """
    point, c = sys.equilibrium, sys.equilibrium_c
    f0 = sys.fields[0]
    A = [[comp.diff(j).evaluate_exact(point, c) for j in range(sys.n)] for comp in f0]
    cols = [sys.eval_field_exact(f) for f in sys.fields[1:]]
    B = [[cols[k][i] for k in range(sys.m)] for i in range(sys.n)]
    K = controllability_matrix(A, B)
    return Linearization(A, B, K, rational_rank(K))


def kalman_rank(lin: Linearization) -> int:
    return rational_rank(lin.kalman)
