"""Maximum-diversification and minimum-risk programs and their solutions.

The ratio problem ``max DR(x)`` over the simplex (optionally with a target
return) is solved in the substituted variables ``y = x / sum_i x_i rho_i``
where it becomes ``min rho(y)`` subject to ``sum_i y_i rho_i = 1``; the
portfolio is recovered as ``y / sum(y)``. The return target stays linear
in ``y`` as ``sum_i (mu_i - eta) y_i >= 0``.

Variable layouts (``n`` assets, ``T`` scenarios):

===========  =========================================  ========================
measure      variables                                  program
===========  =========================================  ========================
volatility   y (n)                                      QP, Q = 2 * covariance
mad          y (n), d (T)                               LP, 2T deviation rows
cvar         y (n), d (T), zeta (free)                  LP, T tail rows
expectile    y (n), d+ (T), d- (T), zeta (free)         LP, T + 1 balance rows
===========  =========================================  ========================
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diversification import diversification_ratio
from .exceptions import SchaiblePositivityError, SolverError, TargetUnattainableError
from .risk import CVAR, EXPECTILE, MAD, VOLATILITY, Portfolio, asset_risks, risk, tail_count
from .scenarios import covariance, mean_returns
from .solver import MathProgram, Status, solve

__all__ = [
    "DR",
    "MIN_RISK",
    "TargetPolicy",
    "OptimizationOutcome",
    "FrontierPoint",
    "build_dr_problem",
    "build_minrisk_problem",
    "solve_dr",
    "solve_minrisk",
    "eta_bounds",
    "frontier",
]

DR = "dr"
MIN_RISK = "minrisk"
FAMILIES = (DR, MIN_RISK)

# absorbs solver round-off at eta = max(mu), where only a vertex is feasible
RETURN_SLACK = 1e-9


@dataclass(frozen=True)
class TargetPolicy:
    """How the target return ``eta`` is chosen.

    ``mode`` is ``"none"`` (no return constraint), ``"frac"`` (``value`` is
    the fraction ``a`` in ``eta = eta_min + a (eta_max - eta_min)``) or
    ``"abs"`` (``value`` is ``eta`` itself).
    """

    mode: str = "none"
    value: float | None = None

    def __post_init__(self):
        if self.mode not in ("none", "frac", "abs"):
            raise ValueError(f"unknown target mode {self.mode!r}")
        if self.mode == "frac" and (self.value is None or not 0.0 <= self.value <= 1.0):
            raise ValueError("fractional target needs a value in [0, 1]")
        if self.mode == "abs" and self.value is None:
            raise ValueError("absolute target needs a value")

    @classmethod
    def unconstrained(cls):
        return cls("none")

    @classmethod
    def fraction(cls, a):
        return cls("frac", float(a))

    @classmethod
    def absolute(cls, eta):
        return cls("abs", float(eta))

    @property
    def needs_bounds(self):
        return self.mode == "frac"

    def resolve(self, eta_min=None, eta_max=None):
        if self.mode == "none":
            return None
        if self.mode == "abs":
            return self.value
        return eta_min + self.value * (eta_max - eta_min)


@dataclass(frozen=True)
class OptimizationOutcome:
    portfolio: Portfolio
    family: str
    spec: object
    eta: float | None
    achieved_risk: float
    achieved_return: float
    achieved_dr: float | None
    objective: float
    raw_solution: np.ndarray
    solve_result: object

    @property
    def weights(self):
        return self.portfolio.weights

    @property
    def objective_risk(self):
        """Portfolio risk implied by the solver objective (for ``raw_solution``)."""
        return _objective_as_risk(self.spec, self.objective)


@dataclass(frozen=True)
class FrontierPoint:
    eta: float
    outcome: OptimizationOutcome | None
    feasible: bool
    message: str = ""

    @property
    def value(self):
        if self.outcome is None:
            return None
        if self.outcome.family == DR:
            return self.outcome.achieved_dr
        return self.outcome.achieved_risk


def _objective_as_risk(spec, objective):
    if spec.kind == VOLATILITY:
        return float(np.sqrt(max(objective, 0.0)))
    return float(objective)


def _var_names(spec, n, T):
    names = [f"y{i}" for i in range(n)]
    if spec.kind in (MAD, CVAR):
        names += [f"d{t}" for t in range(T)]
    if spec.kind == CVAR:
        names.append("zeta")
    if spec.kind == EXPECTILE:
        names += [f"dp{t}" for t in range(T)] + [f"dm{t}" for t in range(T)] + ["zeta"]
    return tuple(names)


def _build(s, spec, weight_row, eta, mu, cov):
    """Assemble the program common to both families.

    ``weight_row`` is the coefficient vector of the single equality on the
    asset weights (asset risks for the ratio problem, ones for min-risk).
    """
    R = s.returns
    T, n = R.shape
    mu = mean_returns(s) if mu is None else mu
    eye_T = np.eye(T)
    quad = None
    A_in, b_in = [], []
    A_eq, b_eq = [], []
    free = ()

    if spec.kind == VOLATILITY:
        cov = covariance(s) if cov is None else cov
        quad = 2.0 * cov
        linear = np.zeros(n)
        nv = n
        eq_block = np.zeros((0, nv))
    elif spec.kind == MAD:
        nv = n + T
        linear = np.concatenate([np.zeros(n), np.full(T, 1.0 / T)])
        dev = R - mu
        A_in += [np.hstack([-dev, eye_T]), np.hstack([dev, eye_T])]
        b_in += [np.zeros(T), np.zeros(T)]
        eq_block = np.zeros((0, nv))
    elif spec.kind == CVAR:
        nv = n + T + 1
        j = tail_count(spec.epsilon, T)
        if j < 1:
            raise ValueError(f"epsilon too small for sample: round({spec.epsilon} * {T}) = 0")
        # tail weight 1/j, i.e. epsilon * T rounded, matching the asset-level CVaR
        linear = np.concatenate([np.zeros(n), np.full(T, 1.0 / j), [1.0]])
        A_in.append(np.hstack([R, eye_T, np.ones((T, 1))]))
        b_in.append(np.zeros(T))
        free = (n + T,)
        eq_block = np.zeros((0, nv))
    elif spec.kind == EXPECTILE:
        a = spec.alpha
        nv = n + 2 * T + 1
        linear = np.zeros(nv)
        linear[-1] = 1.0
        balance = np.concatenate([np.zeros(n), np.full(T, a), np.full(T, -(1.0 - a)), [0.0]])
        split = np.hstack([R, eye_T, -eye_T, np.ones((T, 1))])
        eq_block = np.vstack([balance, split])
        free = (nv - 1,)
    else:  # pragma: no cover - RiskSpec validates kinds
        raise ValueError(spec.kind)

    A_eq.append(eq_block)
    b_eq.append(np.zeros(eq_block.shape[0]))
    norm = np.zeros(nv)
    norm[:n] = weight_row
    A_eq.append(norm[None, :])
    b_eq.append([1.0])

    if eta is not None:
        ret = np.zeros(nv)
        ret[:n] = mu - eta
        A_in.append(ret[None, :])
        b_in.append([-RETURN_SLACK])

    return MathProgram(
        linear=linear,
        quad=quad,
        A_eq=np.vstack(A_eq),
        b_eq=np.concatenate(b_eq),
        A_in=np.vstack(A_in) if A_in else None,
        b_in=np.concatenate(b_in) if b_in else None,
        free_vars=frozenset(free),
        var_names=_var_names(spec, n, T),
    )


def _check_positive(rho, s):
    if np.any(rho <= 0):
        bad = [s.asset_ids[i] for i in np.flatnonzero(rho <= 0)]
        raise SchaiblePositivityError(
            f"Schaible transform requires positive asset risks; nonpositive for {', '.join(bad)}"
        )


def build_dr_problem(s, spec, eta=None, rho=None, mu=None, cov=None):
    """Program whose optimum ``y`` normalizes to the maximum-DR portfolio."""
    rho = asset_risks(s, spec) if rho is None else np.asarray(rho, dtype=float)
    _check_positive(rho, s)
    return _build(s, spec, rho, eta, mu, cov)


def build_minrisk_problem(s, spec, eta=None, mu=None, cov=None):
    """Program ``min rho(x)`` over the simplex, optionally with ``mu'x >= eta``."""
    return _build(s, spec, np.ones(s.n_assets), eta, mu, cov)


def _run(p, backend, eta):
    res = solve(p, backend=backend)
    if res.status is Status.INFEASIBLE:
        raise TargetUnattainableError(
            "target return unattainable" + (f" (eta={eta:.6g})" if eta is not None else "")
        )
    if res.status is not Status.OPTIMAL:
        raise SolverError(f"solver returned {res.status.value}: {res.message}", res)
    return res


def _check_eta(eta, mu):
    if eta is not None and eta > mu.max() + RETURN_SLACK:
        raise TargetUnattainableError(
            f"target return unattainable: eta={eta:.6g} exceeds the best asset mean {mu.max():.6g}"
        )


def _resolve_eta(s, spec, family, policy, eta, backend, base):
    if eta is not None and policy is not None and policy.mode != "none":
        raise ValueError("give either eta or a target policy, not both")
    if policy is None or policy.mode == "none":
        return eta
    if policy.mode == "abs":
        return policy.value
    lo, hi = eta_bounds(s, spec, family, backend=backend, base=base)
    return policy.resolve(lo, hi)


def solve_dr(s, spec, policy=None, eta=None, backend="ipm", base=None):
    """Maximum diversification ratio portfolio.

    Parameters
    ----------
    s : ScenarioMatrix
    spec : RiskSpec
    policy : TargetPolicy, optional
        Target-return policy; fractional targets trigger an unconstrained
        solve to find ``eta_min``.
    eta : float, optional
        Absolute target return (alternative to ``policy``).
    backend : str
        Solver backend name.
    base : OptimizationOutcome, optional
        Cached unconstrained solution, reused for ``eta_min``.
    """
    rho = asset_risks(s, spec)
    _check_positive(rho, s)
    mu = mean_returns(s)
    cov = covariance(s) if spec.kind == VOLATILITY else None
    eta = _resolve_eta(s, spec, DR, policy, eta, backend, base)
    _check_eta(eta, mu)
    p = _build(s, spec, rho, eta, mu, cov)
    res = _run(p, backend, eta)
    y = np.maximum(res.v[: s.n_assets], 0.0)
    x = Portfolio.from_raw(y)
    dr = diversification_ratio(s, x.weights, spec, rho=rho)
    return OptimizationOutcome(
        portfolio=x,
        family=DR,
        spec=spec,
        eta=eta,
        achieved_risk=dr.denominator,
        achieved_return=float(mu @ x.weights),
        achieved_dr=dr.ratio,
        objective=res.objective,
        raw_solution=res.v,
        solve_result=res,
    )


def solve_minrisk(s, spec, policy=None, eta=None, backend="ipm", base=None):
    """Minimum-risk portfolio on the simplex, optionally with a target return."""
    mu = mean_returns(s)
    cov = covariance(s) if spec.kind == VOLATILITY else None
    eta = _resolve_eta(s, spec, MIN_RISK, policy, eta, backend, base)
    _check_eta(eta, mu)
    p = _build(s, spec, np.ones(s.n_assets), eta, mu, cov)
    res = _run(p, backend, eta)
    x = Portfolio.from_raw(res.v[: s.n_assets])
    achieved = float(risk(s, x.weights, spec, cov=cov))
    rho = asset_risks(s, spec)
    dr = float(x.weights @ rho) / achieved if achieved > 0 and np.all(rho > 0) else None
    return OptimizationOutcome(
        portfolio=x,
        family=MIN_RISK,
        spec=spec,
        eta=eta,
        achieved_risk=achieved,
        achieved_return=float(mu @ x.weights),
        achieved_dr=dr,
        objective=res.objective,
        raw_solution=res.v,
        solve_result=res,
    )


_SOLVERS = {DR: solve_dr, MIN_RISK: solve_minrisk}


def solve_family(s, spec, family, policy=None, eta=None, backend="ipm", base=None):
    try:
        fn = _SOLVERS[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}") from None
    return fn(s, spec, policy=policy, eta=eta, backend=backend, base=base)


def eta_bounds(s, spec, family, backend="ipm", base=None):
    """``(eta_min, eta_max)``: return of the unconstrained optimum and the best asset mean."""
    mu = mean_returns(s)
    if base is None:
        base = solve_family(s, spec, family, backend=backend)
    return base.achieved_return, float(mu.max())


def frontier(s, spec, family, K, backend="ipm"):
    """Solve on ``K`` equally spaced targets from ``eta_min`` to ``eta_max``.

    The first point is the unconstrained optimum itself (it is optimal for
    ``eta = eta_min`` by definition). Targets the solver cannot reach are
    kept with ``feasible=False``.
    """
    if K < 2:
        raise ValueError("frontier needs at least two grid points")
    base = solve_family(s, spec, family, backend=backend)
    lo, hi = eta_bounds(s, spec, family, base=base)
    etas = np.linspace(lo, hi, K)
    points = [FrontierPoint(float(etas[0]), base, True)]
    for eta in etas[1:]:
        try:
            out = solve_family(s, spec, family, eta=float(eta), backend=backend)
            points.append(FrontierPoint(float(eta), out, True))
        except (TargetUnattainableError, SolverError) as exc:
            points.append(FrontierPoint(float(eta), None, False, str(exc)))
    return points
