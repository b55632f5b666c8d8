"""Diversification ratio: weighted asset risk over portfolio risk."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import UndefinedRatioError
from .risk import asset_risks, risk


@dataclass(frozen=True)
class DrValue:
    numerator: float
    denominator: float
    warnings: tuple = field(default=())

    @property
    def ratio(self):
        return self.numerator / self.denominator

    def __float__(self):
        return self.ratio


def diversification_ratio(s, x, spec, rho=None):
    """``sum_i x_i rho_i / rho(x)`` for the measure in ``spec``.

    ``rho`` may carry precomputed asset risks. Nonpositive asset risks are
    allowed but noted in ``warnings``, since the ratio then loses its
    lower bound of one.
    """
    rho = asset_risks(s, spec) if rho is None else np.asarray(rho, dtype=float)
    w = np.asarray(x, dtype=float)
    den = float(risk(s, w, spec))
    if den <= 0.0:
        raise UndefinedRatioError(f"ratio undefined: nonpositive portfolio risk {den:.3e}")
    warnings = ()
    if np.any(rho <= 0):
        bad = [s.asset_ids[i] for i in np.flatnonzero(rho <= 0)]
        warnings = (f"nonpositive asset risk for {', '.join(bad)}",)
    return DrValue(float(w @ rho), den, warnings)


def diversification_ratios(s, X, spec, rho=None):
    """Vectorized ratio for a stack of weight vectors ``X`` of shape (G, n).

    Returns ``nan`` where the portfolio risk is not positive.
    """
    rho = asset_risks(s, spec) if rho is None else np.asarray(rho, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    den = np.asarray(risk(s, X, spec), dtype=float)
    num = X @ rho
    out = np.full(den.shape, np.nan)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out
