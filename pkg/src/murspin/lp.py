"""Small dense two-phase simplex (Bland's rule) for the max-min problems.

Problems here have a handful of variables, so a textbook tableau is enough
and keeps the result reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    duals_ub: np.ndarray
    duals_eq: np.ndarray
    pivots: int


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    col_vals = t[:, col].copy()
    col_vals[row] = 0.0
    t -= np.outer(col_vals, t[row])


def _run(t: np.ndarray, basis: list, allowed: np.ndarray, tol: float, max_iter: int) -> int:
    """Maximize the objective stored as the last row (reduced costs, negated)."""
    pivots = 0
    m = t.shape[0] - 1
    while True:
        obj = t[-1, :-1]
        cand = np.flatnonzero((obj < -tol) & allowed)
        if cand.size == 0:
            return pivots
        col = int(cand[0])  # Bland: lowest index entering
        column = t[:m, col]
        pos = column > tol
        if not pos.any():
            raise LPError("problem is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = t[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))  # Bland: lowest leaving index
        _pivot(t, row, col)
        basis[row] = col
        pivots += 1
        if pivots > max_iter:
            raise LPError("simplex iteration limit reached")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol: float = 1e-12, max_iter: int = 10_000) -> LPResult:
    """Maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form: [A_ub I; A_eq 0] [x; slack] = b, rows flipped so b >= 0
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    flip = b < 0
    A[flip] *= -1
    b = np.where(flip, -b, b)

    needs_art = [i for i in range(m) if i >= m_ub or flip[i]]
    n_std = n + m_ub
    n_art = len(needs_art)
    t = np.zeros((m + 1, n_std + n_art + 1))
    t[:m, :n_std] = A
    t[:m, -1] = b
    basis = [0] * m
    for i in range(m_ub):
        if not flip[i]:
            basis[i] = n + i
    for k, i in enumerate(needs_art):
        t[i, n_std + k] = 1.0
        basis[i] = n_std + k

    pivots = 0
    if n_art:
        # phase 1: maximize -sum(artificials)
        t[-1, n_std : n_std + n_art] = 1.0
        for i in needs_art:
            t[-1] -= t[i]
        allowed = np.ones(n_std + n_art, dtype=bool)
        pivots += _run(t, basis, allowed, tol, max_iter)
        if -t[-1, -1] > 1e-9 * max(1.0, np.abs(b).max()):
            raise LPError("problem is infeasible")
        # drive remaining artificials out of the basis
        for i, var in enumerate(basis):
            if var >= n_std:
                row = t[i, :n_std]
                nz = np.flatnonzero(np.abs(row) > tol)
                if nz.size:
                    _pivot(t, i, int(nz[0]))
                    basis[i] = int(nz[0])
                    pivots += 1

    t[-1] = 0.0
    t[-1, :n] = -c
    for i, var in enumerate(basis):
        if var < n_std and t[-1, var] != 0.0:
            t[-1] -= t[-1, var] * t[i]
    allowed = np.zeros(n_std + n_art, dtype=bool)
    allowed[:n_std] = True
    pivots += _run(t, basis, allowed, tol, max_iter)

    x_std = np.zeros(n_std + n_art)
    for i, var in enumerate(basis):
        x_std[var] = t[i, -1]
    x = x_std[:n]

    # duals from B^T y = c_B on the original (unflipped) rows
    c_std = np.concatenate([c, np.zeros(m_ub)])
    real = [i for i, v in enumerate(basis) if v < n_std]
    y = np.zeros(m)
    if real:
        B = A[np.ix_(real, [basis[i] for i in real])]
        try:
            y_real = np.linalg.solve(B.T, c_std[[basis[i] for i in real]])
        except np.linalg.LinAlgError:
            y_real = np.linalg.lstsq(B.T, c_std[[basis[i] for i in real]], rcond=None)[0]
        y[real] = y_real
    y = np.where(flip, -y, y)
    return LPResult(x=x, value=float(c @ x), duals_ub=y[:m_ub], duals_eq=y[m_ub:], pivots=pivots)
