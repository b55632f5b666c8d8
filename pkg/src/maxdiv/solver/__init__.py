"""LP/QP model container and solver backends."""

from .program import MathProgram, SolveResult, Status
from .ipm import solve_ipm

__all__ = ["MathProgram", "SolveResult", "Status", "solve", "BACKENDS"]


def _highs(p):
    from .highs import solve_highs

    return solve_highs(p)


BACKENDS = {"ipm": solve_ipm, "highs": _highs}


def solve(p, backend="ipm"):
    """Solve ``p`` with the named backend (``"ipm"`` by default).

    Infeasible and unbounded programs are reported through
    ``SolveResult.status``; nothing is raised for them.
    """
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown solver backend {backend!r}") from None
    return fn(p)
