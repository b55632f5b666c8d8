"""HiGHS backend for linear programs, used as an interchangeable cross-check."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .program import SolveResult, Status

_STATUS = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}


def solve_highs(p):
    if not p.is_lp:
        raise ValueError("the HiGHS backend only handles linear programs")
    bounds = [(None if not np.isfinite(lb) else lb, None) for lb in p.lower_bounds]
    res = linprog(
        p.linear,
        A_ub=-p.A_in if p.n_in else None,
        b_ub=-p.b_in if p.n_in else None,
        A_eq=p.A_eq if p.n_eq else None,
        b_eq=p.b_eq if p.n_eq else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    status = _STATUS.get(res.status, Status.NUMERICAL_FAILURE)
    if status is not Status.OPTIMAL or res.x is None:
        return SolveResult(status, np.full(p.n_vars, np.nan), float("nan"), float("inf"), message=res.message)
    v = res.x
    duals_eq = -res.eqlin.marginals if p.n_eq else np.zeros(0)
    duals_in = res.ineqlin.marginals * -1 if p.n_in else np.zeros(0)
    return SolveResult(status, v, p.objective(v), 0.0, p.primal_residual(v), iterations=int(res.nit),
                       duals_eq=duals_eq, duals_in=duals_in, message=res.message)
