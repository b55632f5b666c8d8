"""Asset- and portfolio-level risk measures on a discrete scenario set.

Every measure accepts either a single weight vector of shape ``(n,)`` or a
stack of them of shape ``(G, n)`` and then returns ``G`` values. Weights do
not have to sum to one: the ratio problems evaluate risk on unnormalized
vectors and all four measures are positively homogeneous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .scenarios import covariance

__all__ = [
    "RiskSpec",
    "Portfolio",
    "tail_count",
    "portfolio_returns",
    "volatility",
    "mad",
    "cvar",
    "expectile",
    "expectile_loss",
    "asset_risks",
    "risk",
    "total_risk_contributions_vol",
]

VOLATILITY = "volatility"
MAD = "mad"
CVAR = "cvar"
EXPECTILE = "expectile"
KINDS = (VOLATILITY, MAD, CVAR, EXPECTILE)

_ALIASES = {
    "vol": VOLATILITY,
    "volatility": VOLATILITY,
    "variance": VOLATILITY,
    "mad": MAD,
    "cvar": CVAR,
    "expectile": EXPECTILE,
    "expe": EXPECTILE,
}


@dataclass(frozen=True)
class RiskSpec:
    """A risk measure and its parameter.

    ``epsilon`` is the CVaR tail probability and ``alpha`` the expectile
    level; each is only allowed for its own measure.
    """

    kind: str
    epsilon: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown risk measure {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == CVAR:
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ValueError("CVaR needs epsilon in (0, 1)")
        elif self.epsilon is not None:
            raise ValueError("epsilon is only meaningful for CVaR")
        if kind == EXPECTILE:
            if self.alpha is None or not 0.5 <= self.alpha < 1.0:
                raise ValueError("expectile needs alpha in [1/2, 1)")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for expectiles")

    @classmethod
    def make(cls, kind, epsilon=0.05, alpha=0.9):
        """Build a spec, keeping only the parameter ``kind`` uses."""
        kind = _ALIASES.get(str(kind).lower(), kind)
        return cls(
            kind,
            epsilon=epsilon if kind == CVAR else None,
            alpha=alpha if kind == EXPECTILE else None,
        )

    def __str__(self):
        if self.kind == CVAR:
            return f"cvar(epsilon={self.epsilon:g})"
        if self.kind == EXPECTILE:
            return f"expectile(alpha={self.alpha:g})"
        return self.kind


class Portfolio:
    """Long-only weights on the unit simplex.

    Entries down to ``-1e-12`` are treated as round-off and clamped to zero.
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("portfolio weights must be a non-empty finite vector")
        if np.any(w < -1e-12):
            raise ValueError(f"negative weight {w.min():.3e}; portfolios are long-only")
        w[w < 0] = 0.0
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum():.12g}, expected 1")
        w.setflags(write=False)
        self._w = w

    @classmethod
    def from_raw(cls, y):
        """Normalize a nonnegative vector onto the simplex."""
        y = np.asarray(y, dtype=float)
        y = np.where(y < 0, 0.0, y)
        return cls(y / y.sum())

    @property
    def weights(self):
        return self._w

    def __array__(self, dtype=None, copy=None):
        return self._w if dtype is None else self._w.astype(dtype)

    def __len__(self):
        return self._w.size

    def __repr__(self):
        return f"Portfolio({np.array2string(self._w, precision=6)})"


def tail_count(prob, n):
    """``round(prob * n)`` with ties rounded up (``2.5 -> 3``)."""
    # the small offset keeps products such as 0.35 * 10 = 3.4999999999999996 on the tie
    return int(math.floor(prob * n + 0.5 + 1e-9))


def _as_weights(x, n):
    w = np.asarray(x, dtype=float)
    if w.shape[-1] != n:
        raise DataError(f"weights have {w.shape[-1]} entries, scenario matrix has {n} assets")
    return w


def portfolio_returns(s, x):
    """Scenario returns of ``x``: shape ``(T,)`` or ``(T, G)`` for stacked weights."""
    w = _as_weights(x, s.n_assets)
    return s.returns @ w.T


def volatility(s, x, cov=None):
    """Standard deviation of the portfolio return, computed from the covariance."""
    cov = covariance(s) if cov is None else cov
    w = _as_weights(x, s.n_assets)
    var = np.einsum("...i,ij,...j->...", w, cov, w)
    return np.sqrt(np.maximum(var, 0.0))


def _mad_sample(r):
    return np.abs(r - r.mean(axis=0)).mean(axis=0)


def mad(s, x):
    """Mean absolute deviation of the portfolio return from its mean."""
    return _mad_sample(portfolio_returns(s, x))


def _cvar_sample(r, epsilon):
    n = r.shape[0]
    j = tail_count(epsilon, n)
    if j < 1:
        raise DataError(f"epsilon too small for sample: round({epsilon} * {n}) = 0")
    worst = np.partition(r, j - 1, axis=0)[:j] if j < n else r
    return -worst.mean(axis=0)


def cvar(s, x, epsilon):
    """Average loss over the ``round(epsilon * T)`` worst scenarios."""
    return _cvar_sample(portfolio_returns(s, x), epsilon)


def expectile(values, alpha):
    """``alpha``-expectile of equally weighted samples along axis 0.

    The root of ``alpha * sum((v - e)_+) = (1 - alpha) * sum((v - e)_-)``.
    The residual is decreasing and piecewise linear in ``e``; the segment
    containing the root is located on the sorted sample and solved exactly.
    """
    v = np.sort(np.asarray(values, dtype=float), axis=0)
    n = v.shape[0]
    prefix = np.cumsum(v, axis=0)
    total = prefix[-1]
    k = np.arange(1, n + 1).reshape((n,) + (1,) * (v.ndim - 1))
    # residual evaluated at each order statistic, with the first k samples at or below it
    g = alpha * (total - prefix - (n - k) * v) - (1.0 - alpha) * (k * v - prefix)
    # g is nonincreasing; the root lies right of the last nonnegative point
    last = (g >= 0).sum(axis=0) - 1
    last = np.maximum(last, 0)
    pk = np.take_along_axis(prefix, last[None, ...], axis=0)[0]
    kk = last + 1.0
    e = (alpha * (total - pk) + (1.0 - alpha) * pk) / (alpha * (n - kk) + (1.0 - alpha) * kk)
    # exact clamp to the bracket so round-off never leaves [min, max]
    return np.clip(e, v[0], v[-1])


def expectile_residual(values, e, alpha):
    """First-order-condition residual of a candidate expectile ``e``."""
    d = np.asarray(values, dtype=float) - e
    return alpha * np.maximum(d, 0).sum(axis=0) - (1 - alpha) * np.maximum(-d, 0).sum(axis=0)


def expectile_loss(s, x, alpha):
    """``alpha``-expectile of the portfolio loss (negative return)."""
    return expectile(-portfolio_returns(s, x), alpha)


def _sample_risk(r, spec):
    if spec.kind == MAD:
        return _mad_sample(r)
    if spec.kind == CVAR:
        return _cvar_sample(r, spec.epsilon)
    if spec.kind == EXPECTILE:
        return expectile(-r, spec.alpha)
    return r.std(axis=0)


def asset_risks(s, spec):
    """Risk of each asset held alone, as a vector of length n."""
    if spec.kind == VOLATILITY:
        return np.sqrt(np.diag(covariance(s)))
    return _sample_risk(s.returns, spec)


def risk(s, x, spec, cov=None):
    """Portfolio risk of ``x`` under ``spec``."""
    if spec.kind == VOLATILITY:
        return volatility(s, x, cov=cov)
    return _sample_risk(portfolio_returns(s, x), spec)


def total_risk_contributions_vol(cov, x):
    """Euler decomposition ``x_i (cov x)_i / sigma(x)`` of portfolio volatility."""
    cov = np.asarray(cov, dtype=float)
    w = np.asarray(x, dtype=float)
    marginal = cov @ w
    var = float(w @ marginal)
    if var <= 0.0:
        raise ValueError("undefined gradient: portfolio volatility is zero")
    return w * marginal / math.sqrt(var)
