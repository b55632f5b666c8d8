"""The nineteen-strategy catalog used in the rolling comparison.

Suffix ``0`` strategies have no return constraint. Suffix ``1`` strategies
share one target return per in-sample window: the largest of the eight
values ``eta_min + (eta_max - eta_min) / 3`` over the four min-risk and
four max-DR models.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .estimators import EqualWeighted, MaxDiversification, MinimumRisk, RiskParity, risk_parity_weights
from .exceptions import SchaiblePositivityError
from .optimizer import DR, MIN_RISK, TargetPolicy, solve_dr, solve_minrisk
from .risk import CVAR, EXPECTILE, MAD, VOLATILITY, Portfolio, RiskSpec
from .scenarios import mean_returns

log = logging.getLogger(__name__)

__all__ = [
    "StrategyId",
    "ALL_STRATEGIES",
    "INDEX",
    "StrategyConfig",
    "InSampleContext",
    "common_target",
    "risk_parity_vol",
    "equally_weighted",
    "make_estimator",
    "run_strategy",
]


class StrategyId(str, enum.Enum):
    MV0 = "MV0"
    MAD0 = "MAD0"
    CVaR0 = "CVaR0"
    Expe0 = "Expe0"
    MV1 = "MV1"
    MAD1 = "MAD1"
    CVaR1 = "CVaR1"
    Expe1 = "Expe1"
    DRvol0 = "DRvol0"
    DRMAD0 = "DRMAD0"
    DRCVaR0 = "DRCVaR0"
    DRExpe0 = "DRExpe0"
    DRvol1 = "DRvol1"
    DRMAD1 = "DRMAD1"
    DRCVaR1 = "DRCVaR1"
    DRExpe1 = "DRExpe1"
    RP = "RP"
    EW = "EW"
    Index = "Index"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name):
        for sid in cls:
            if sid.value.lower() == str(name).strip().lower():
                return sid
        raise ValueError(f"unknown strategy {name!r}")

    @property
    def model(self):
        """``(family, measure, targeted)`` for optimization strategies, else None."""
        return _MODELS.get(self)


ALL_STRATEGIES = tuple(StrategyId)

_MODELS = {}
for _fam, _prefix_names in ((MIN_RISK, ("MV", "MAD", "CVaR", "Expe")), (DR, ("DRvol", "DRMAD", "DRCVaR", "DRExpe"))):
    for _name, _kind in zip(_prefix_names, (VOLATILITY, MAD, CVAR, EXPECTILE)):
        _MODELS[StrategyId(_name + "0")] = (_fam, _kind, False)
        _MODELS[StrategyId(_name + "1")] = (_fam, _kind, True)

OPTIMIZED = tuple(sid for sid in ALL_STRATEGIES if sid in _MODELS)


class _IndexMarker:
    """Sentinel: out-of-sample returns come from the market index column."""

    def __repr__(self):
        return "INDEX"


INDEX = _IndexMarker()


@dataclass(frozen=True)
class StrategyConfig:
    epsilon: float = 0.05
    alpha: float = 0.9
    backend: str = "ipm"
    # None means the common target across the eight models
    target: TargetPolicy | None = None
    rp_kappa: float = 1.0

    def spec(self, kind):
        return RiskSpec.make(kind, epsilon=self.epsilon, alpha=self.alpha)


class InSampleContext:
    """Per-window cache of unconstrained solves and the common target."""

    def __init__(self, s, config=None):
        self.s = s
        self.config = config or StrategyConfig()
        self.warnings = []
        self._base = {}
        self._target = None

    def base(self, family, kind):
        key = (family, kind)
        if key not in self._base:
            solver = solve_dr if family == DR else solve_minrisk
            self._base[key] = solver(self.s, self.config.spec(kind), backend=self.config.backend)
        return self._base[key]

    def eta_third(self, family, kind):
        lo = self.base(family, kind).achieved_return
        hi = float(mean_returns(self.s).max())
        return lo + (hi - lo) / 3.0

    def common_target(self):
        if self._target is None:
            values = []
            for family in (MIN_RISK, DR):
                for kind in (VOLATILITY, MAD, CVAR, EXPECTILE):
                    try:
                        values.append(self.eta_third(family, kind))
                    except SchaiblePositivityError as exc:
                        msg = f"{family}/{kind} excluded from the common target: {exc}"
                        log.warning(msg)
                        self.warnings.append(msg)
            if not values:
                raise SchaiblePositivityError("no model available for the common target")
            self._target = max(values)
        return self._target

    def estimator(self, sid):
        """Fitted estimator for ``sid`` (not defined for Index)."""
        sid = StrategyId.parse(sid) if not isinstance(sid, StrategyId) else sid
        if sid is StrategyId.Index:
            raise ValueError("the index strategy has no estimator")
        if sid not in _MODELS:
            return make_estimator(sid, self.config).fit(self.s)
        family, kind, targeted = _MODELS[sid]
        if not targeted:
            return make_estimator(sid, self.config).fit(self.s, base=self.base(family, kind))
        policy = self.config.target
        if policy is None:
            policy = TargetPolicy.absolute(self.common_target())
        est = make_estimator(sid, self.config, policy)
        base = self.base(family, kind) if policy.mode == "frac" else None
        return est.fit(self.s, base=base)

    def run(self, sid):
        sid = StrategyId.parse(sid) if not isinstance(sid, StrategyId) else sid
        if sid is StrategyId.Index:
            return INDEX
        return Portfolio(self.estimator(sid).weights_)


def make_estimator(sid, config=None, policy=None):
    """Unfitted estimator for a catalog strategy."""
    config = config or StrategyConfig()
    sid = StrategyId.parse(sid) if not isinstance(sid, StrategyId) else sid
    if sid is StrategyId.RP:
        return RiskParity(kappa=config.rp_kappa)
    if sid is StrategyId.EW:
        return EqualWeighted()
    if sid is StrategyId.Index:
        raise ValueError("the index strategy has no estimator")
    family, kind, targeted = _MODELS[sid]
    cls = MaxDiversification if family == DR else MinimumRisk
    policy = policy if targeted and policy is not None else TargetPolicy.unconstrained()
    return cls(risk_measure=kind, epsilon=config.epsilon, alpha=config.alpha,
               target_mode=policy.mode, target=policy.value, backend=config.backend)


def common_target(s, epsilon=0.05, alpha=0.9, context=None):
    """Shared target return of the suffix-1 strategies for in-sample data ``s``."""
    ctx = context or InSampleContext(s, StrategyConfig(epsilon=epsilon, alpha=alpha))
    return ctx.common_target()


def risk_parity_vol(cov, kappa=1.0):
    """Volatility risk-parity portfolio for covariance ``cov``."""
    return Portfolio(risk_parity_weights(cov, kappa=kappa))


def equally_weighted(n):
    if n < 1:
        raise ValueError("need at least one asset")
    return Portfolio(np.full(n, 1.0 / n))


def run_strategy(sid, in_sample, config=None, context=None):
    """Fit one strategy on ``in_sample``; Index returns the :data:`INDEX` sentinel."""
    ctx = context or InSampleContext(in_sample, config)
    return ctx.run(sid)
