"""Rolling-window out-of-sample evaluation.

Each window fits every strategy on the ``in_len`` observations right
before its holding period, then holds the weights fixed for ``hold_len``
observations. Strategies that fail in any window are dropped from the
run with a diagnostic instead of being patched with a fallback.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, MaxDivError
from .metrics import (
    MetricTable,
    ave_count,
    drawdown_stats,
    jensen_alpha_info,
    omega,
    rachev10,
    roi_summary,
    sharpe,
    var5,
)
from .optimizer import TargetPolicy
from .scenarios import ScenarioMatrix, _write_rows, plan_windows
from .strategies import ALL_STRATEGIES, INDEX, InSampleContext, StrategyConfig, StrategyId

log = logging.getLogger(__name__)

__all__ = [
    "BacktestConfig",
    "StrategyRun",
    "BacktestResult",
    "run_backtest",
    "turnover",
    "compute_metrics",
]

TURNOVER_CONVENTIONS = ("inception", "strict")


@dataclass(frozen=True)
class BacktestConfig:
    """Rolling protocol settings.

    Parameters
    ----------
    in_len, hold_len : int
        In-sample window length and holding period, in observations.
    strategies : tuple of str or StrategyId
    epsilon, alpha : float
        CVaR tail probability and expectile level.
    index_col : str, optional
        Column of the return matrix holding the market index. It is removed
        from the asset universe and feeds the ``Index`` strategy and the
        benchmark-relative metrics.
    turnover_convention : {"inception", "strict"}
        ``"inception"`` treats the first rebalance as free and averages the
        remaining transitions; ``"strict"`` charges the first rebalance
        against an all-cash start and averages over every rebalance.
    target : TargetPolicy, optional
        Overrides the shared target of the suffix-1 strategies.
    """

    in_len: int = 500
    hold_len: int = 20
    strategies: tuple = ALL_STRATEGIES
    epsilon: float = 0.05
    alpha: float = 0.9
    index_col: str | None = None
    backend: str = "ipm"
    turnover_convention: str = "inception"
    target: TargetPolicy | None = None
    roi_horizon: int = 250

    def __post_init__(self):
        if self.in_len < 2:
            raise DataError("in_len must be at least 2")
        if self.hold_len < 1:
            raise DataError("hold_len must be at least 1")
        if self.turnover_convention not in TURNOVER_CONVENTIONS:
            raise DataError(f"unknown turnover convention {self.turnover_convention!r}")
        ids = tuple(StrategyId.parse(s) if not isinstance(s, StrategyId) else s for s in self.strategies)
        if not ids:
            raise DataError("empty strategy set")
        if len(set(ids)) != len(ids):
            raise DataError("duplicate strategy in the strategy set")
        object.__setattr__(self, "strategies", ids)

    def strategy_config(self):
        return StrategyConfig(epsilon=self.epsilon, alpha=self.alpha,
                              backend=self.backend, target=self.target)


@dataclass
class StrategyRun:
    name: str
    out_returns: np.ndarray
    wealth: np.ndarray
    rebalance_log: list
    failed: bool = False
    error: str | None = None

    @property
    def weights(self):
        """Rebalance weights stacked as (S, n); empty for the index."""
        if not self.rebalance_log or self.rebalance_log[0][1] is INDEX:
            return np.empty((0, 0))
        return np.vstack([np.asarray(p, dtype=float) for _, p in self.rebalance_log])


@dataclass
class BacktestResult:
    config: BacktestConfig
    plan: object
    asset_ids: tuple
    dates: tuple | None
    runs: dict = field(default_factory=dict)
    index_returns: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    @property
    def succeeded(self):
        return {k: r for k, r in self.runs.items() if not r.failed}

    @property
    def failed(self):
        return {k: r.error for k, r in self.runs.items() if r.failed}

    def turnover(self, name):
        run = self.runs[name]
        if run.rebalance_log and run.rebalance_log[0][1] is INDEX:
            return None
        return turnover(run.weights, self.config.turnover_convention)

    def write_csv(self, outdir, header_comment=None):
        """Write ``returns.csv``, ``wealth.csv`` and ``rebalances.csv`` into ``outdir``."""
        os.makedirs(outdir, exist_ok=True)
        ok = self.succeeded
        names = list(ok)
        n_out = self.plan.out_len
        start = self.plan.in_len
        keys = [self.dates[start + t] if self.dates is not None else str(start + t) for t in range(n_out)]

        rows = [[keys[t]] + [repr(float(ok[k].out_returns[t])) for k in names] for t in range(n_out)]
        _write_rows(os.path.join(outdir, "returns.csv"), ["date", *names], rows, header_comment)

        wkeys = ["inception", *keys]
        rows = [[wkeys[t]] + [repr(float(ok[k].wealth[t])) for k in names] for t in range(n_out + 1)]
        _write_rows(os.path.join(outdir, "wealth.csv"), ["date", *names], rows, header_comment)

        rows = []
        for w, (_, in_end, _, _) in enumerate(self.plan):
            when = self.dates[in_end] if self.dates is not None else str(in_end)
            for k in names:
                p = ok[k].rebalance_log[w][1]
                if p is INDEX:
                    continue
                rows.append([w, k, when] + [repr(float(v)) for v in np.asarray(p)])
        _write_rows(os.path.join(outdir, "rebalances.csv"),
                    ["window", "strategy", "date", *self.asset_ids], rows, header_comment)


def turnover(weights, convention="inception"):
    """Average l1 change between consecutive rebalance weights.

    Parameters
    ----------
    weights : array-like of shape (S, n)
        Weights chosen at each of the ``S`` rebalances, in order.
    convention : {"inception", "strict"}
        See :class:`BacktestConfig`.
    """
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    S = W.shape[0]
    if S < 1:
        raise ValueError("turnover needs at least one rebalance")
    if convention == "strict":
        W = np.vstack([np.zeros(W.shape[1]), W])
        return float(np.abs(np.diff(W, axis=0)).sum() / S)
    if convention != "inception":
        raise ValueError(f"unknown turnover convention {convention!r}")
    if S == 1:
        return 0.0
    return float(np.abs(np.diff(W, axis=0)).sum() / (S - 1))


def _split_index(s, index_col, index_returns):
    if index_col is None:
        if index_returns is not None:
            index_returns = np.asarray(index_returns, dtype=float)
            if index_returns.shape != (s.n_scenarios,):
                raise DataError("index series length does not match the return matrix")
        return s, index_returns
    if index_returns is not None:
        raise DataError("pass either index_col or index_returns, not both")
    if index_col not in s.asset_ids:
        raise DataError(f"index column {index_col!r} not found")
    j = s.asset_ids.index(index_col)
    keep = [i for i in range(s.n_assets) if i != j]
    if not keep:
        raise DataError("no assets left after removing the index column")
    assets = ScenarioMatrix(s.returns[:, keep], tuple(s.asset_ids[i] for i in keep), s.dates)
    return assets, s.returns[:, j].copy()


def run_backtest(s, cfg=None, index_returns=None):
    """Run the rolling protocol on the return matrix ``s``.

    Parameters
    ----------
    s : ScenarioMatrix
        Full return history, oldest first.
    cfg : BacktestConfig, optional
    index_returns : array-like of shape (T,), optional
        Benchmark returns aligned with ``s``, as an alternative to
        ``cfg.index_col``.

    Returns
    -------
    BacktestResult
    """
    cfg = cfg or BacktestConfig()
    assets, index = _split_index(s, cfg.index_col, index_returns)
    plan = plan_windows(assets.n_scenarios, cfg.in_len, cfg.hold_len)
    result = BacktestResult(cfg, plan, assets.asset_ids, assets.dates, index_returns=None)

    names = []
    for sid in cfg.strategies:
        if sid is StrategyId.Index and index is None:
            msg = "Index strategy skipped: no index series supplied"
            log.warning(msg)
            result.warnings.append(msg)
            continue
        names.append(sid)

    n_out = plan.out_len
    out = {sid: np.empty(n_out) for sid in names}
    logs = {sid: [] for sid in names}
    errors = {}
    R = assets.returns
    scfg = cfg.strategy_config()
    for w, (in_start, in_end, out_start, out_end) in enumerate(plan):
        ctx = InSampleContext(assets.slice(in_start, in_end), scfg)
        lo, hi = out_start - cfg.in_len, out_end - cfg.in_len
        for sid in names:
            if sid in errors:
                continue
            try:
                p = ctx.run(sid)
            except (MaxDivError, ValueError, np.linalg.LinAlgError) as exc:
                errors[sid] = f"window {w}: {type(exc).__name__}: {exc}"
                log.warning("%s failed in %s", sid, errors[sid])
                continue
            logs[sid].append((w, p))
            if p is INDEX:
                out[sid][lo:hi] = index[out_start:out_end]
            else:
                out[sid][lo:hi] = R[out_start:out_end] @ p.weights
        result.warnings.extend(f"window {w}: {m}" for m in ctx.warnings)

    for sid in names:
        name = str(sid)
        if sid in errors:
            result.runs[name] = StrategyRun(name, np.empty(0), np.empty(0), logs[sid], True, errors[sid])
            result.warnings.append(f"{name} excluded: {errors[sid]}")
            continue
        wealth = np.concatenate([[1.0], np.cumprod(1.0 + out[sid])])
        result.runs[name] = StrategyRun(name, out[sid], wealth, logs[sid])
    if index is not None:
        result.index_returns = index[cfg.in_len:]
    return result


def compute_metrics(result):
    """Metric table over the strategies that completed the run."""
    table = MetricTable()
    bench = result.index_returns
    horizon = result.config.roi_horizon
    for name, run in result.succeeded.items():
        r = run.out_returns
        mdd, ulcer = drawdown_stats(run.wealth[1:])
        alpha_j = info = None
        if bench is not None:
            alpha_j, info = jensen_alpha_info(r, bench)
        is_index = run.rebalance_log and run.rebalance_log[0][1] is INDEX
        table.rows[name] = {
            "mu_out": float(r.mean()),
            "sigma_out": float(r.std()),
            "sharpe": sharpe(r),
            "mdd": mdd,
            "ulcer": ulcer,
            "rachev10": rachev10(r),
            "turnover": result.turnover(name),
            "alpha_j": alpha_j,
            "info_ratio": info,
            "var5": var5(r),
            "omega": omega(r),
            "ave_count": None if is_index else ave_count(run.weights),
        }
        table.roi[name] = roi_summary(r, horizon)
    return table
