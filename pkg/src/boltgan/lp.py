"""Dense two-phase simplex for small linear programs.

Bland's rule is used for both entering and leaving choices, so the solver
never cycles and is fully deterministic. Intended for a few hundred
variables and a few thousand constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9
_PIVOT_TOL = 1e-12


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


@dataclass
class LPProblem:
    """Optimize ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and
    per-variable ``bounds`` (``None`` for an infinite side; default ``(0, None)``).
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: list | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "inequality")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        elif len(self.bounds) == 2 and not isinstance(self.bounds[0], (tuple, list)):
            self.bounds = [tuple(self.bounds)] * n
        if len(self.bounds) != n:
            raise ValueError(f"{len(self.bounds)} bounds for {n} variables")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")


def _rows(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).ravel()
    if A.shape[1] != n or A.shape[0] != b.size:
        raise ValueError(f"{what} constraints have shape {A.shape} with {b.size} bounds for {n} variables")
    return A, b


@dataclass
class LPResult:
    value: float
    x: np.ndarray
    iterations: int = 0
    extra: dict = field(default_factory=dict)


def lp_solve(problem: LPProblem) -> LPResult:
    """Solve ``problem`` to optimality or raise :class:`LPInfeasible` /
    :class:`LPUnbounded`."""
    p = problem
    n = p.c.size
    # x = offset + T @ y with y >= 0
    cols, offset = [], np.zeros(n)
    extra_ub_rows, extra_ub_rhs = [], []
    for j, (lo, hi) in enumerate(p.bounds):
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            raise LPInfeasible(f"variable {j} has empty bounds [{lo}, {hi}]")
        e = np.zeros(n)
        if np.isfinite(lo):
            offset[j] = lo
            e[j] = 1.0
            cols.append(e)
            if np.isfinite(hi):
                extra_ub_rows.append(len(cols) - 1)
                extra_ub_rhs.append(hi - lo)
        elif np.isfinite(hi):
            offset[j] = hi
            e[j] = -1.0
            cols.append(e)
        else:
            e[j] = 1.0
            cols.append(e)
            cols.append(-e)
    T = np.array(cols).T  # n x ny
    ny = T.shape[1]

    A_ub = p.A_ub @ T
    b_ub = p.b_ub - p.A_ub @ offset
    if extra_ub_rows:
        box = np.zeros((len(extra_ub_rows), ny))
        box[np.arange(len(extra_ub_rows)), extra_ub_rows] = 1.0
        A_ub = np.vstack([A_ub, box])
        b_ub = np.concatenate([b_ub, extra_ub_rhs])
    A_eq = p.A_eq @ T
    b_eq = p.b_eq - p.A_eq @ offset
    c = (-p.c if p.maximize else p.c) @ T

    y, iters = _simplex_standard(c, A_ub, b_ub, A_eq, b_eq)
    x = offset + T @ y
    value = float(p.c @ x)
    return LPResult(value, x, iters)


def _simplex_standard(c, A_ub, b_ub, A_eq, b_eq):
    """min c@y  s.t. A_ub y <= b_ub, A_eq y = b_eq, y >= 0."""
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    ny = c.size
    m = m_ub + m_eq
    # columns: y | slacks | artificials
    A = np.zeros((m, ny + m_ub))
    A[:m_ub, :ny] = A_ub
    A[:m_ub, ny:] = np.eye(m_ub)
    A[m_ub:, :ny] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.where(neg, -b, b)

    basis = np.full(m, -1)
    need_art = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = ny + i
        else:
            need_art.append(i)
    n_real = A.shape[1]
    n_art = len(need_art)
    tab = np.zeros((m + 1, n_real + n_art + 1))
    tab[:m, :n_real] = A
    tab[:m, -1] = b
    for k, i in enumerate(need_art):
        tab[i, n_real + k] = 1.0
        basis[i] = n_real + k

    iters = 0
    if n_art:
        # phase 1: minimize the sum of artificials
        cost = np.zeros(n_real + n_art)
        cost[n_real:] = 1.0
        _set_objective(tab, cost, basis)
        iters += _pivot_loop(tab, basis, n_real + n_art)
        if -tab[-1, -1] > TOL * max(1.0, np.abs(b).max()):
            raise LPInfeasible("linear program is infeasible")
        # drive remaining artificials out of the basis
        keep = []
        for i in range(m):
            if basis[i] >= n_real:
                row = tab[i, :n_real]
                nz = np.nonzero(np.abs(row) > 1e-9)[0]
                if nz.size:
                    _pivot(tab, basis, i, int(nz[0]))
                    keep.append(i)
                # else: redundant row, dropped below
            else:
                keep.append(i)
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = basis[keep]
        tab = np.delete(tab, np.s_[n_real : n_real + n_art], axis=1)

    cost = np.zeros(n_real)
    cost[:ny] = c
    _set_objective(tab, cost, basis)
    iters += _pivot_loop(tab, basis, n_real, phase2=True)
    y = np.zeros(n_real)
    y[basis] = tab[:-1, -1]
    return np.maximum(y[:ny], 0.0), iters


def _set_objective(tab, cost, basis):
    """Write reduced costs ``cost - c_B B^-1 A`` into the last row."""
    n = cost.size
    tab[-1, :] = 0.0
    tab[-1, :n] = cost
    for i, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[i]


def _pivot(tab, basis, r, j):
    tab[r] /= tab[r, j]
    col = tab[:, j].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    basis[r] = j


def _pivot_loop(tab, basis, n_cols, phase2=False, max_iter=50000):
    iters = 0
    m = tab.shape[0] - 1
    while True:
        red = tab[-1, :n_cols]
        candidates = np.nonzero(red < -TOL)[0]
        if candidates.size == 0:
            return iters
        j = int(candidates[0])
        col = tab[:m, j]
        pos = col > _PIVOT_TOL
        if not np.any(pos):
            if phase2:
                raise LPUnbounded("linear program is unbounded")
            raise LPError("phase-1 problem reported unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))[0]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(tab, basis, r, j)
        iters += 1
        if iters > max_iter:
            raise LPError("simplex iteration limit reached")
