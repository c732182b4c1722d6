"""Dense two-phase simplex for small equality-form linear programs.

Solves min c@x subject to A@x = b, x >= 0. Written for the problem sizes
occupancy-measure programs produce (a few hundred rows and columns), where a
dense tableau is simpler and more transparent than a sparse revised method.
Dantzig pricing with a switch to Bland's rule guards against cycling on the
degenerate bases these programs routinely produce.
"""

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
PHASE1_TOL = 1e-6


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _iterate(T: np.ndarray, basis: np.ndarray, n_cols: int, bland_after: int,
             max_iter: int) -> str:
    """Run pivots until optimal or unbounded. Objective row is T[-1]."""
    for it in range(max_iter):
        cbar = T[-1, :n_cols]
        if it < bland_after:
            col = int(np.argmin(cbar))
            if cbar[col] >= -PIVOT_TOL:
                return "optimal"
        else:
            # Bland: first improving column, guarantees termination
            neg = np.flatnonzero(cbar < -PIVOT_TOL)
            if neg.size == 0:
                return "optimal"
            col = int(neg[0])
        column = T[:-1, col]
        rhs = T[:-1, -1]
        ratios = np.full(column.shape, np.inf)
        pos = column > PIVOT_TOL
        if not np.any(pos):
            return "unbounded"
        ratios[pos] = rhs[pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        # leave by smallest basis index among ties (anti-cycling)
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, row, col)
    raise RuntimeError("simplex iteration limit reached")


def linear_program(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1: artificial basis, minimize the artificial sum
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)

    max_iter = 200 * (m + n + 1)
    bland_after = 20 * (m + n + 1)
    status = _iterate(T, basis, n + m, bland_after, max_iter)
    if status == "unbounded":  # phase-1 objective is bounded below by 0
        raise RuntimeError("phase-1 simplex reported unbounded")
    if -T[-1, -1] > PHASE1_TOL:
        return LPResult(status="infeasible")

    # drive leftover artificials out of the basis; all-zero rows are redundant
    drop_rows = []
    for i in range(m):
        if basis[i] >= n:
            j = int(np.argmax(np.abs(T[i, :n])))
            if abs(T[i, j]) > PIVOT_TOL:
                _pivot(T, basis, i, j)
            else:
                drop_rows.append(i)
    if drop_rows:
        keep = [i for i in range(m) if i not in drop_rows]
        T = T[keep + [m]]
        basis = basis[keep]

    # phase 2 on original columns only
    rows = T.shape[0] - 1
    T2 = np.zeros((rows + 1, n + 1))
    T2[:rows, :n] = T[:rows, :n]
    T2[:rows, -1] = T[:rows, -1]
    reduced = c.copy()
    obj = 0.0
    for i in range(rows):
        reduced -= c[basis[i]] * T2[i, :n]
        obj += c[basis[i]] * T2[i, -1]
    T2[-1, :n] = reduced
    T2[-1, -1] = -obj

    status = _iterate(T2, basis, n, bland_after, max_iter)
    if status == "unbounded":
        return LPResult(status="unbounded")
    x = np.zeros(n)
    x[basis] = T2[:-1, -1]
    np.maximum(x, 0.0, out=x)  # clip rounding residue, true solution is >= 0
    return LPResult(status="optimal", x=x, objective=float(c @ x))
