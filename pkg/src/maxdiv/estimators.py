"""scikit-learn style portfolio estimators.

``fit(X)`` takes a ``(T, n)`` matrix of asset returns (array, DataFrame or
:class:`~maxdiv.scenarios.ScenarioMatrix`) and sets ``weights_``;
``predict(X)`` returns the portfolio return of each row of ``X``. The
estimators support ``get_params``/``set_params``/``clone`` and so compose
with the rest of the ecosystem.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .optimizer import DR, MIN_RISK, TargetPolicy, eta_bounds, solve_dr, solve_minrisk
from .risk import RiskSpec
from .scenarios import ScenarioMatrix, covariance

__all__ = ["MaxDiversification", "MinimumRisk", "RiskParity", "EqualWeighted"]


def check_returns(X, min_samples=1):
    """Validate a return matrix and wrap it as a ScenarioMatrix."""
    if isinstance(X, ScenarioMatrix):
        return X
    names = getattr(X, "columns", None)
    arr = check_array(X, dtype=float, ensure_min_samples=min_samples, ensure_all_finite=True)
    ids = tuple(str(c) for c in names) if names is not None else None
    return ScenarioMatrix(arr, ids)


class BasePortfolio(BaseEstimator):
    """Shared fit bookkeeping and the ``predict`` map."""

    def _set_assets(self, s):
        self.n_features_in_ = s.n_assets
        self.feature_names_in_ = np.asarray(s.asset_ids, dtype=object)

    def predict(self, X):
        """Portfolio return of each scenario in ``X``."""
        check_is_fitted(self, "weights_")
        if isinstance(X, ScenarioMatrix):
            X = X.returns
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} assets, estimator was fitted on {self.n_features_in_}")
        return X @ self.weights_

    def score(self, X, y=None):
        """Mean over standard deviation of the predicted portfolio returns."""
        r = self.predict(X)
        sd = r.std()
        return float(r.mean() / sd) if sd > 0 else 0.0


class _RiskModel(BasePortfolio):
    _family = None

    def __init__(self, risk_measure="volatility", epsilon=0.05, alpha=0.9,
                 target_mode="none", target=None, backend="ipm"):
        self.risk_measure = risk_measure
        self.epsilon = epsilon
        self.alpha = alpha
        self.target_mode = target_mode
        self.target = target
        self.backend = backend

    @property
    def spec(self):
        return RiskSpec.make(self.risk_measure, epsilon=self.epsilon, alpha=self.alpha)

    def _policy(self):
        if self.target_mode in (None, "none"):
            return TargetPolicy.unconstrained()
        return TargetPolicy(self.target_mode, self.target)

    def fit(self, X, y=None, base=None):
        """Solve on the return scenarios ``X``.

        ``base`` may carry an already solved unconstrained outcome of the
        same family and measure, reused for ``eta_min``.
        """
        s = check_returns(X)
        self._set_assets(s)
        for stale in ("eta_min_", "eta_max_"):
            self.__dict__.pop(stale, None)
        solver = solve_dr if self._family == DR else solve_minrisk
        policy = self._policy()
        if base is None and policy.mode != "abs":
            base = solver(s, self.spec, backend=self.backend)
        if base is not None:
            self.eta_min_, self.eta_max_ = eta_bounds(s, self.spec, self._family, base=base)
        if policy.mode == "none":
            outcome = base
        else:
            eta = policy.resolve(getattr(self, "eta_min_", None), getattr(self, "eta_max_", None))
            outcome = solver(s, self.spec, eta=eta, backend=self.backend)
        self.outcome_ = outcome
        self.weights_ = np.array(outcome.weights)
        self.eta_ = outcome.eta
        self.risk_ = outcome.achieved_risk
        self.expected_return_ = outcome.achieved_return
        return self


class MaxDiversification(_RiskModel):
    """Long-only portfolio maximizing the diversification ratio.

    Parameters
    ----------
    risk_measure : {"volatility", "mad", "cvar", "expectile"}
    epsilon : float, default=0.05
        CVaR tail probability.
    alpha : float, default=0.9
        Expectile level, in ``[1/2, 1)``.
    target_mode : {"none", "frac", "abs"}, default="none"
        How ``target`` is read: ignored, as a fraction of ``[eta_min, eta_max]``,
        or as an absolute expected return.
    target : float, optional
    backend : {"ipm", "highs"}, default="ipm"
        Solver backend; ``"highs"`` handles only the linear measures.

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
    raw_weights_ : ndarray
        Solution ``y`` of the substituted program, ``weights_ = y / sum(y)``.
    diversification_ratio_ : float
    outcome_ : OptimizationOutcome
    """

    _family = DR

    def fit(self, X, y=None, base=None):
        super().fit(X, y, base=base)
        self.raw_weights_ = self.outcome_.raw_solution[: self.n_features_in_]
        self.diversification_ratio_ = self.outcome_.achieved_dr
        return self


class MinimumRisk(_RiskModel):
    """Long-only minimum-risk portfolio, optionally with a target return.

    Takes the same parameters as :class:`MaxDiversification`; volatility
    means minimum variance.
    """

    _family = MIN_RISK


def risk_parity_weights(cov, kappa=1.0, tol=1e-10, max_iter=100):
    """Equal-risk-contribution weights for a positive definite covariance.

    Minimizes ``x'Cx / 2 - kappa * sum(log x)`` by damped Newton steps; at
    the optimum ``x_i (Cx)_i = kappa`` for every asset, so the normalized
    point equalizes total risk contributions.
    """
    C = np.asarray(cov, dtype=float)
    n = C.shape[0]
    if n == 1:
        return np.ones(1)
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise ValueError("risk parity undefined: covariance is not positive definite") from None
    ev = np.linalg.eigvalsh(C)
    if ev[0] <= 1e-14 * ev[-1]:
        raise ValueError("risk parity undefined: covariance is singular")

    def f(x):
        return 0.5 * x @ C @ x - kappa * np.log(x).sum()

    x = 1.0 / np.sqrt(np.diag(C))
    x *= np.sqrt(kappa * n / (x @ C @ x))
    for _ in range(max_iter):
        g = C @ x - kappa / x
        if np.abs(x * g).max() <= tol * kappa:
            break
        H = C + np.diag(kappa / x**2)
        step = -np.linalg.solve(H, g)
        t = 1.0
        neg = step < 0
        if np.any(neg):
            t = min(1.0, 0.99 * np.min(-x[neg] / step[neg]))
        fx = f(x)
        while f(x + t * step) > fx + 1e-4 * t * (g @ step) and t > 1e-12:
            t *= 0.5
        x = x + t * step
    return x / x.sum()


class RiskParity(BasePortfolio):
    """Volatility risk parity: every asset contributes equally to portfolio volatility."""

    def __init__(self, kappa=1.0):
        self.kappa = kappa

    def fit(self, X, y=None):
        s = check_returns(X, min_samples=2)
        self._set_assets(s)
        self.covariance_ = covariance(s)
        self.weights_ = risk_parity_weights(self.covariance_, kappa=self.kappa)
        return self


class EqualWeighted(BasePortfolio):
    def fit(self, X, y=None):
        s = check_returns(X)
        self._set_assets(s)
        self.weights_ = np.full(s.n_assets, 1.0 / s.n_assets)
        return self
