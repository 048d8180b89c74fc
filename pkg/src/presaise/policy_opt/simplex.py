"""Dense revised simplex for the restricted pricing masters.

Maximizes c'x subject to Ax = b, x >= 0, starting from a caller-supplied
feasible basis (the masters always carry an identity slack block). Uses
Dantzig pricing but falls back to Bland's rule after a degenerate stall so
cycling cannot occur, and refactorizes the basis inverse periodically to
keep numerical drift in check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFACTOR_EVERY = 128
STALL_LIMIT = 64


@dataclass
class LpResult:
    status: str  # "optimal" | "unbounded" | "iteration_limit"
    x: np.ndarray
    objective: float
    duals: np.ndarray
    basis: list[int]
    iterations: int


def solve_lp_max(
    A: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    basis: list[int],
    max_iter: int = 50_000,
    tol: float = 1e-9,
) -> LpResult:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("shape mismatch")
    if np.any(b < -tol):
        raise ValueError("b must be nonnegative for the slack start")
    basis = list(basis)
    if len(basis) != m:
        raise ValueError("basis size must equal the row count")

    Binv = np.linalg.inv(A[:, basis])
    xB = Binv @ b
    if np.any(xB < -1e-7):
        raise ValueError("initial basis is not primal feasible")

    obj_prev = float(c[basis] @ xB)
    stall = 0
    bland = False
    iterations = 0
    status = "iteration_limit"
    since_refactor = 0

    while iterations < max_iter:
        iterations += 1
        y = c[basis] @ Binv
        reduced = c - y @ A
        reduced[basis] = 0.0

        if bland:
            eligible = np.flatnonzero(reduced > tol)
            if eligible.size == 0:
                status = "optimal"
                break
            q = int(eligible[0])
        else:
            q = int(np.argmax(reduced))
            if reduced[q] <= tol:
                status = "optimal"
                break

        d = Binv @ A[:, q]
        pos = np.flatnonzero(d > tol)
        if pos.size == 0:
            status = "unbounded"
            break
        ratios = xB[pos] / d[pos]
        best = ratios.min()
        ties = pos[np.flatnonzero(ratios <= best + 1e-12)]
        # smallest basic variable index among ties keeps Bland's rule valid
        leave = int(ties[np.argmin([basis[i] for i in ties])])

        basis[leave] = q
        piv = d[leave]
        Binv[leave, :] /= piv
        others = np.arange(m) != leave
        Binv[others, :] -= np.outer(d[others], Binv[leave, :])
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            Binv = np.linalg.inv(A[:, basis])
            since_refactor = 0
        xB = Binv @ b
        np.maximum(xB, 0.0, out=xB)

        obj = float(c[basis] @ xB)
        if obj > obj_prev + 1e-12 * (1.0 + abs(obj_prev)):
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= STALL_LIMIT:
                bland = True
        obj_prev = obj

    x = np.zeros(n)
    x[basis] = xB
    y = c[basis] @ Binv
    return LpResult(status=status, x=x, objective=float(c @ x),
                    duals=np.asarray(y), basis=basis, iterations=iterations)
