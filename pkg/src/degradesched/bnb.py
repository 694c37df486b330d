"""Depth-first branch-and-bound for mixed-integer linear programs.

Relaxations are solved with the HiGHS LP solver via scipy. Branching is
fully deterministic: always the lowest-index fractional integer variable,
with the rounded-down branch explored first, and the incumbent is replaced
only on strict improvement. For binary variables this explores assignments
in lexicographic order, preferring zeros among equal-cost optima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

INT_TOL = 1e-6
IMPROVE_TOL = 1e-9


@dataclass
class BnbResult:
    x: np.ndarray | None
    fun: float
    status: str  # "optimal" | "infeasible" | "unbounded" | "node_limit"
    n_nodes: int


def _solve_lp(c, a_ub, b_ub, a_eq, b_eq, lb, ub):
    bounds = np.column_stack([lb, ub])
    return linprog(
        c,
        A_ub=a_ub if a_ub is not None and a_ub.size else None,
        b_ub=b_ub if b_ub is not None and b_ub.size else None,
        A_eq=a_eq if a_eq is not None and a_eq.size else None,
        b_eq=b_eq if b_eq is not None and b_eq.size else None,
        bounds=bounds,
        method="highs",
    )


def solve_milp_bnb(
    c: np.ndarray,
    a_ub: np.ndarray | None,
    b_ub: np.ndarray | None,
    a_eq: np.ndarray | None,
    b_eq: np.ndarray | None,
    lb: np.ndarray,
    ub: np.ndarray,
    is_int: np.ndarray,
    max_nodes: int = 500_000,
) -> BnbResult:
    """Minimize c @ x subject to A_ub x <= b_ub, A_eq x = b_eq, lb <= x <= ub,
    with x[is_int] integral."""
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    is_int = np.asarray(is_int, dtype=bool)
    int_order = np.flatnonzero(is_int)

    best_x: np.ndarray | None = None
    best_obj = np.inf
    n_nodes = 0
    root_status: str | None = None

    # LIFO stack of (lb, ub) nodes; the zero branch is pushed last so it is
    # explored first.
    stack: list[tuple[np.ndarray, np.ndarray]] = [(lb.copy(), ub.copy())]
    while stack:
        node_lb, node_ub = stack.pop()
        if n_nodes >= max_nodes:
            return BnbResult(best_x, best_obj, "node_limit", n_nodes)
        n_nodes += 1

        res = _solve_lp(c, a_ub, b_ub, a_eq, b_eq, node_lb, node_ub)
        if res.status == 3 and root_status is None:
            return BnbResult(None, -np.inf, "unbounded", n_nodes)
        if res.status != 0:
            if root_status is None:
                root_status = "infeasible"
            continue
        root_status = root_status or "relaxation_solved"

        if res.fun >= best_obj - IMPROVE_TOL:
            continue  # cannot strictly improve the incumbent

        x = res.x
        frac = None
        for j in int_order:
            if node_lb[j] == node_ub[j]:
                continue
            if abs(x[j] - round(x[j])) > INT_TOL:
                frac = j
                break
        if frac is None:
            x = x.copy()
            x[int_order] = np.round(x[int_order])
            best_x, best_obj = x, float(res.fun)
            continue

        floor_val = np.floor(x[frac] + INT_TOL)
        up_lb, up_ub = node_lb.copy(), node_ub.copy()
        up_lb[frac] = floor_val + 1
        stack.append((up_lb, up_ub))
        down_lb, down_ub = node_lb.copy(), node_ub.copy()
        down_ub[frac] = floor_val
        stack.append((down_lb, down_ub))

    if best_x is None:
        return BnbResult(None, np.inf, "infeasible", n_nodes)
    return BnbResult(best_x, best_obj, "optimal", n_nodes)
