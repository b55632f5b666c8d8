"""Backend-neutral description of a linear or convex quadratic program.

    minimize    1/2 v'Qv + c'v
    subject to  A_eq v  = b_eq
                A_in v >= b_in
                v_j >= lower_j      (j not in free_vars)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


def _matrix(a, ncols):
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    return a


@dataclass(frozen=True)
class MathProgram:
    linear: np.ndarray
    quad: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None
    lower_bounds: np.ndarray | None = None
    free_vars: frozenset = frozenset()
    var_names: tuple | None = None
    row_names: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.linear, dtype=float).ravel()
        n = c.size
        object.__setattr__(self, "linear", c)
        A_eq = _matrix(self.A_eq, n)
        A_in = _matrix(self.A_in, n)
        b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        b_in = np.zeros(0) if self.b_in is None else np.asarray(self.b_in, dtype=float).ravel()
        if A_eq.shape[1] != n or A_in.shape[1] != n:
            raise ValueError("constraint matrices must have one column per variable")
        if A_eq.shape[0] != b_eq.size or A_in.shape[0] != b_in.size:
            raise ValueError("constraint rows and right-hand sides disagree")
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "A_in", A_in)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "b_in", b_in)
        if self.quad is not None:
            Q = np.asarray(self.quad, dtype=float)
            if Q.shape != (n, n):
                raise ValueError(f"quad must be {n}x{n}")
            if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12):
                raise ValueError("quad must be symmetric")
            object.__setattr__(self, "quad", (Q + Q.T) / 2.0)
        free = frozenset(int(i) for i in self.free_vars)
        if any(i < 0 or i >= n for i in free):
            raise ValueError("free variable index out of range")
        object.__setattr__(self, "free_vars", free)
        lb = np.zeros(n) if self.lower_bounds is None else np.asarray(self.lower_bounds, dtype=float).ravel()
        if lb.size != n:
            raise ValueError("lower_bounds must have one entry per variable")
        lb = lb.copy()
        lb[list(free)] = -np.inf
        object.__setattr__(self, "lower_bounds", lb)

    @property
    def n_vars(self):
        return self.linear.size

    @property
    def n_eq(self):
        return self.A_eq.shape[0]

    @property
    def n_in(self):
        return self.A_in.shape[0]

    @property
    def n_rows(self):
        return self.n_eq + self.n_in

    @property
    def is_lp(self):
        return self.quad is None or not np.any(self.quad)

    def objective(self, v):
        v = np.asarray(v, dtype=float)
        val = float(self.linear @ v)
        if self.quad is not None:
            val += 0.5 * float(v @ self.quad @ v)
        return val

    def primal_residual(self, v):
        """Largest absolute violation of any constraint or bound."""
        v = np.asarray(v, dtype=float)
        parts = [0.0]
        if self.n_eq:
            parts.append(np.abs(self.A_eq @ v - self.b_eq).max())
        if self.n_in:
            parts.append(np.maximum(self.b_in - self.A_in @ v, 0).max())
        bounded = np.isfinite(self.lower_bounds)
        if bounded.any():
            parts.append(np.maximum(self.lower_bounds[bounded] - v[bounded], 0).max())
        return float(max(parts))

    def dump(self, fh=None):
        """Plain-text listing of the program, one row per line.

        Returns the text; also writes it to ``fh`` when given.
        """
        names = self.var_names or tuple(f"v{j}" for j in range(self.n_vars))

        def terms(row):
            return " ".join(f"{a:+.17g}*{names[j]}" for j, a in enumerate(row) if a != 0.0) or "0"

        lines = [f"# vars {self.n_vars} eq {self.n_eq} ineq {self.n_in}", "minimize"]
        lines.append("  linear " + terms(self.linear))
        if self.quad is not None and np.any(self.quad):
            ii, jj = np.nonzero(np.triu(self.quad))
            quad = " ".join(f"{self.quad[i, j]:+.17g}*{names[i]}*{names[j]}" for i, j in zip(ii, jj))
            lines.append("  quad/2 " + quad)
        lines.append("subject to")
        for k in range(self.n_eq):
            lines.append(f"  e{k}: {terms(self.A_eq[k])} = {self.b_eq[k]:.17g}")
        for k in range(self.n_in):
            lines.append(f"  g{k}: {terms(self.A_in[k])} >= {self.b_in[k]:.17g}")
        lines.append("bounds")
        for j in range(self.n_vars):
            lb = self.lower_bounds[j]
            lines.append(f"  {names[j]} free" if not np.isfinite(lb) else f"  {names[j]} >= {lb:.17g}")
        lines.append("end")
        text = "\n".join(lines) + "\n"
        if fh is not None:
            fh.write(text)
        return text


@dataclass(frozen=True)
class SolveResult:
    status: Status
    v: np.ndarray
    objective: float
    kkt_residual: float
    primal_residual: float = float("nan")
    iterations: int = 0
    polished: bool = False
    duals_eq: np.ndarray | None = None
    duals_in: np.ndarray | None = None
    message: str = ""

    @property
    def ok(self):
        return self.status is Status.OPTIMAL
