"""Diversification-ratio portfolio construction for four risk measures.

The ratio ``sum_i x_i rho_i / rho(x)`` is maximized over long-only
portfolios for volatility, mean absolute deviation, CVaR and expectile
risk, by rescaling the ratio problem into a single LP or QP. Minimum-risk
baselines, risk parity and a rolling out-of-sample backtest come with it.
"""

from .backtest import BacktestConfig, BacktestResult, compute_metrics, run_backtest, turnover
from .diversification import DrValue, diversification_ratio, diversification_ratios
from .estimators import EqualWeighted, MaxDiversification, MinimumRisk, RiskParity, risk_parity_weights
from .exceptions import (
    DataError,
    MaxDivError,
    SchaiblePositivityError,
    SolverError,
    TargetUnattainableError,
    UndefinedRatioError,
)
from .metrics import MetricTable
from .optimizer import TargetPolicy, eta_bounds, frontier, solve_dr, solve_minrisk
from .risk import Portfolio, RiskSpec, asset_risks, cvar, expectile, mad, risk, volatility
from .scenarios import ScenarioMatrix, covariance, load_prices, load_returns, mean_returns, plan_windows, to_returns
from .strategies import ALL_STRATEGIES, StrategyId, common_target, run_strategy

__version__ = "0.1.0"

__all__ = [
    "ALL_STRATEGIES",
    "BacktestConfig",
    "BacktestResult",
    "DataError",
    "DrValue",
    "EqualWeighted",
    "MaxDivError",
    "MaxDiversification",
    "MetricTable",
    "MinimumRisk",
    "Portfolio",
    "RiskParity",
    "RiskSpec",
    "ScenarioMatrix",
    "SchaiblePositivityError",
    "SolverError",
    "StrategyId",
    "TargetPolicy",
    "TargetUnattainableError",
    "UndefinedRatioError",
    "asset_risks",
    "common_target",
    "compute_metrics",
    "covariance",
    "cvar",
    "diversification_ratio",
    "diversification_ratios",
    "eta_bounds",
    "expectile",
    "frontier",
    "load_prices",
    "load_returns",
    "mad",
    "mean_returns",
    "plan_windows",
    "risk",
    "risk_parity_weights",
    "run_backtest",
    "run_strategy",
    "solve_dr",
    "solve_minrisk",
    "to_returns",
    "turnover",
    "volatility",
]
