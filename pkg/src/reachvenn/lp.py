"""Dense-tableau two-phase simplex solver.

Small and deterministic: Dantzig pricing with lowest-index tie breaks, and a
permanent switch to Bland's rule whenever the objective stalls, so degenerate
problems cannot cycle.  Problem sizes here are tiny (hundreds of columns at
most), so the dense tableau is the right tool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_PHASE1_TOL = 1e-8

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min/max objective @ x subject to eq_matrix @ x == eq_rhs and box bounds.

    ``lower_bounds`` entries may be finite or -inf (free below);
    ``upper_bounds`` entries may be finite or +inf.
    """

    objective: np.ndarray
    sense: str
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.objective, dtype=np.float64)
        a = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        b = np.asarray(self.eq_rhs, dtype=np.float64)
        lb = np.asarray(self.lower_bounds, dtype=np.float64)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if a.shape != (b.size, c.size) or lb.size != c.size:
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("objective, matrix, and rhs must be finite")
        if self.upper_bounds is not None:
            ub = np.asarray(self.upper_bounds, dtype=np.float64)
            if ub.size != c.size:
                raise ValueError("inconsistent LP dimensions")
            if np.any(ub < lb):
                raise ValueError("upper bound below lower bound")
            object.__setattr__(self, "upper_bounds", ub)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", a)
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "lower_bounds", lb)


@dataclass(frozen=True)
class LpResult:
    status: str
    value: float | None = None
    solution: np.ndarray | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


def _pivot(tableau: np.ndarray, row: int, col: int, basis: np.ndarray) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _run_simplex(
    tableau: np.ndarray, basis: np.ndarray, ncols: int, max_iter: int
) -> str:
    """Minimize the cost row of a feasible tableau in place.

    ``tableau`` has shape (m+1, width): m constraint rows, a cost row with
    reduced costs in columns [0, ncols) and -objective in the last column.
    Returns "optimal" or "unbounded".
    """
    m = tableau.shape[0] - 1
    cost = tableau[-1]
    bland = False
    stall = 0
    last_obj = cost[-1]
    for _ in range(max_iter):
        reduced = cost[:ncols]
        if bland:
            eligible = np.flatnonzero(reduced < -_COST_TOL)
            if eligible.size == 0:
                return OPTIMAL
            col = int(eligible[0])
        else:
            col = int(np.argmin(reduced))
            if reduced[col] >= -_COST_TOL:
                return OPTIMAL
        colvals = tableau[:m, col]
        pos = colvals > _PIVOT_TOL
        if not np.any(pos):
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = tableau[:m, -1][pos] / colvals[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        # Among ratio ties, leave the smallest basis index (Bland-compatible).
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tableau, row, col, basis)
        # The cost row stores -objective, so it rises on real progress.
        if cost[-1] <= last_obj + 1e-12:
            stall += 1
            if stall > 2 * (m + ncols) + 50:
                bland = True
        else:
            stall = 0
            last_obj = cost[-1]
    raise RuntimeError("simplex iteration limit exceeded")


class EqualityFormSolver:
    """Reusable simplex for min/max c @ x s.t. A x = b, x >= 0.

    Phase 1 runs once at construction; each ``optimize`` call restarts phase 2
    from the stored feasible basis, which makes solving many objectives over
    one constraint set cheap.
    """

    def __init__(self, a_eq: np.ndarray, b_eq: np.ndarray):
        a = np.atleast_2d(np.asarray(a_eq, dtype=np.float64))
        b = np.asarray(b_eq, dtype=np.float64).copy()
        m, n = a.shape
        a = a.copy()
        flip = b < 0
        a[flip] *= -1.0
        b[flip] *= -1.0

        self.n = n
        tableau = np.zeros((m + 1, n + m + 1))
        tableau[:m, :n] = a
        tableau[:m, n : n + m] = np.eye(m)
        tableau[:m, -1] = b
        basis = np.arange(n, n + m)
        # Phase-1 reduced costs: minimize the artificial sum.
        tableau[-1, :n] = -a.sum(axis=0)
        tableau[-1, -1] = -b.sum()
        status = _run_simplex(tableau, basis, n + m, max_iter=200 * (n + m) + 1000)
        assert status == OPTIMAL  # the artificial sum is bounded below by 0
        self.feasible = -tableau[-1, -1] <= _PHASE1_TOL * max(1.0, float(np.abs(b).max(initial=0.0)))
        if not self.feasible:
            return

        # Drive artificials out of the basis; rows that cannot pivot on a
        # structural column are redundant and dropped.
        keep = []
        for i in range(m):
            if basis[i] < n:
                keep.append(i)
                continue
            structural = np.flatnonzero(np.abs(tableau[i, :n]) > _PIVOT_TOL)
            if structural.size:
                _pivot(tableau, i, int(structural[0]), basis)
                keep.append(i)
        rows = np.array(keep, dtype=int)
        self._tableau = np.ascontiguousarray(
            tableau[np.append(rows, m)][:, np.append(np.arange(n), n + m)]
        )
        self._basis = basis[rows]

    def optimize(self, objective: np.ndarray, sense: str = "min") -> LpResult:
        """Optimize one objective from the stored feasible basis."""
        if not self.feasible:
            return LpResult(INFEASIBLE)
        c = np.asarray(objective, dtype=np.float64)
        if sense == "max":
            c = -c
        elif sense != "min":
            raise ValueError("sense must be 'min' or 'max'")
        tableau = self._tableau.copy()
        basis = self._basis.copy()
        m = tableau.shape[0] - 1
        cost = np.append(c, 0.0)
        for i in range(m):
            cost -= cost[basis[i]] * tableau[i]
        tableau[-1] = cost
        status = _run_simplex(tableau, basis, self.n, max_iter=200 * (self.n + m) + 1000)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED)
        x = np.zeros(self.n)
        x[basis] = tableau[:m, -1]
        value = float(c @ x)
        if sense == "max":
            value = -value
        return LpResult(OPTIMAL, value=value, solution=x)


def solve_lp(lp: LinearProgram) -> LpResult:
    """Solve a general LP; never raises for infeasible or unbounded programs.

    Finite lower bounds are shifted out, free variables are split into
    positive and negative parts, and finite upper bounds become slack rows,
    which reduces everything to equality standard form.
    """
    n = lp.objective.size
    lb = lp.lower_bounds
    ub = lp.upper_bounds if lp.upper_bounds is not None else np.full(n, np.inf)
    free = ~np.isfinite(lb)

    # Column layout: one column per variable, then one extra (negated) column
    # per free variable, then one slack per finite upper bound.
    nfree = int(free.sum())
    nub = int(np.isfinite(ub).sum())
    width = n + nfree + nub
    shift = np.where(free, 0.0, lb)

    a_eq = np.zeros((lp.eq_matrix.shape[0] + nub, width))
    b_eq = np.zeros(lp.eq_matrix.shape[0] + nub)
    a_eq[: lp.eq_matrix.shape[0], :n] = lp.eq_matrix
    b_eq[: lp.eq_matrix.shape[0]] = lp.eq_rhs - lp.eq_matrix @ shift
    neg_col = {}
    k = n
    for j in np.flatnonzero(free):
        a_eq[: lp.eq_matrix.shape[0], k] = -lp.eq_matrix[:, j]
        neg_col[j] = k
        k += 1
    row = lp.eq_matrix.shape[0]
    for j in np.flatnonzero(np.isfinite(ub)):
        a_eq[row, j] = 1.0
        if free[j]:
            a_eq[row, neg_col[j]] = -1.0
        a_eq[row, k] = 1.0
        b_eq[row] = ub[j] - shift[j]
        row += 1
        k += 1

    c = np.zeros(width)
    c[:n] = lp.objective
    for j, kk in neg_col.items():
        c[kk] = -lp.objective[j]

    solver = EqualityFormSolver(a_eq, b_eq)
    result = solver.optimize(c, sense=lp.sense)
    if not result.is_optimal:
        return result
    u = result.solution
    x = u[:n] + shift
    for j, kk in neg_col.items():
        x[j] -= u[kk]
    return LpResult(OPTIMAL, value=float(lp.objective @ x), solution=x)
