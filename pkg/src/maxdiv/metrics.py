"""Out-of-sample performance measures.

All statistics are per period (no annualization) and use population
(1/N) moments. A measure that is undefined for the given sample returns
``None`` rather than ``nan``, and tables render it as ``NA``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .risk import tail_count

__all__ = [
    "sharpe",
    "drawdown_series",
    "drawdown_stats",
    "rachev10",
    "jensen_alpha_info",
    "var5",
    "omega",
    "roi_series",
    "roi_summary",
    "ave_count",
    "METRICS",
    "MetricTable",
]

NA = "NA"

# (column, label, higher_is_better); ave_count is reported but not ranked
METRICS = (
    ("mu_out", "mu_out", True),
    ("sigma_out", "sigma_out", False),
    ("sharpe", "Sharpe", True),
    ("mdd", "MDD", True),
    ("ulcer", "Ulcer", False),
    ("rachev10", "Rachev10", True),
    ("turnover", "Turn", False),
    ("alpha_j", "AlphaJ", True),
    ("info_ratio", "InfoR", True),
    ("var5", "VaR5", False),
    ("omega", "Omega", True),
    ("ave_count", "ave#", None),
)
ROI_COLUMNS = ("mean", "vol", "p5", "p25", "p50", "p75", "p95")


def _flat_spread(x):
    """True when the sample has no variation beyond floating-point noise."""
    scale = np.abs(x).max(initial=0.0)
    return x.std() <= 1e-12 * scale


def sharpe(returns):
    r = np.asarray(returns, dtype=float)
    if r.size == 0 or _flat_spread(r):
        return None
    return float(r.mean() / r.std())


def drawdown_series(wealth):
    """Relative distance of each wealth value below its running peak."""
    w = np.asarray(wealth, dtype=float)
    peak = np.maximum.accumulate(w)
    return (w - peak) / peak


def drawdown_stats(wealth):
    """``(mdd, ulcer)`` for a wealth path.

    The running peak starts at the first value passed, so callers holding
    a path that begins with the initial capital should drop it.
    """
    dd = drawdown_series(wealth)
    if dd.size == 0:
        raise ValueError("empty wealth path")
    return float(dd.min()), float(math.sqrt(np.mean(dd * dd)))


def _tail_mean(r, prob, worst):
    j = tail_count(prob, r.size)
    if j < 1:
        return None
    ordered = np.sort(r)
    part = ordered[:j] if worst else ordered[-j:]
    return float(part.mean())


def rachev10(returns, alpha=0.1, beta=0.1):
    """Mean of the best ``alpha`` tail over CVaR of the worst ``beta`` tail."""
    r = np.asarray(returns, dtype=float)
    best = _tail_mean(r, alpha, worst=False)
    worst = _tail_mean(r, beta, worst=True)
    if best is None or worst is None or worst == 0.0:
        return None
    return best / -worst


def jensen_alpha_info(returns, index_returns):
    """``(alpha_j, info_ratio)`` against a benchmark return series."""
    r = np.asarray(returns, dtype=float)
    ri = np.asarray(index_returns, dtype=float)
    if r.shape != ri.shape:
        raise ValueError("portfolio and index return series differ in length")
    alpha = None
    if not _flat_spread(ri):
        beta = float(np.mean((r - r.mean()) * (ri - ri.mean())) / ri.var())
        alpha = float(r.mean() - beta * ri.mean())
    diff = r - ri
    info = None if _flat_spread(diff) else float(diff.mean() / diff.std())
    return alpha, info


def var5(returns, level=0.05):
    """Negative of the ``round(level * N)``-th smallest return."""
    r = np.asarray(returns, dtype=float)
    j = tail_count(level, r.size)
    if j < 1:
        return None
    return float(-np.partition(r, j - 1)[j - 1])


def omega(returns, eta=0.0):
    r = np.asarray(returns, dtype=float) - eta
    loss = np.mean(np.minimum(r, 0.0))
    if loss == 0.0:
        return None
    return float(np.mean(np.maximum(r, 0.0)) / abs(loss))


def roi_series(returns, horizon=250):
    """Compounded return over every window of ``horizon`` consecutive periods."""
    r = np.asarray(returns, dtype=float)
    if r.size <= horizon:
        return None
    growth = np.log1p(r)
    # direct products keep the small-sample cases exact; log sums only for long series
    if r.size * horizon <= 2_000_000:
        windows = np.lib.stride_tricks.sliding_window_view(1.0 + r, horizon)
        return np.prod(windows, axis=1) - 1.0
    csum = np.concatenate([[0.0], np.cumsum(growth)])
    return np.expm1(csum[horizon:] - csum[:-horizon])


def roi_summary(returns, horizon=250):
    roi = roi_series(returns, horizon)
    if roi is None:
        return None
    pct = np.percentile(roi, [5, 25, 50, 75, 95])
    return dict(zip(ROI_COLUMNS, [float(roi.mean()), float(roi.std()), *map(float, pct)]))


def ave_count(weights, threshold=1e-5):
    """Average number of assets held above ``threshold`` across rebalances."""
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    if W.shape[0] == 0:
        raise ValueError("no rebalances")
    return float((W > threshold).sum(axis=1).mean())


def _fmt(v):
    if v is None:
        return NA
    return repr(float(v))


@dataclass
class MetricTable:
    """Per-strategy metric rows plus annual ROI summaries."""

    rows: dict = field(default_factory=dict)
    roi: dict = field(default_factory=dict)

    @property
    def strategies(self):
        return list(self.rows)

    def column(self, name):
        return {k: r.get(name) for k, r in self.rows.items()}

    def ranks(self):
        """Rank of each strategy per metric, 1 = best; ``None`` when not ranked."""
        out = {k: {} for k in self.rows}
        for col, _, higher in METRICS:
            vals = [(k, r.get(col)) for k, r in self.rows.items()]
            present = [(k, v) for k, v in vals if v is not None]
            if higher is None:
                continue
            order = sorted(present, key=lambda kv: -kv[1] if higher else kv[1])
            for rank, (k, _) in enumerate(order, start=1):
                out[k][col] = rank
        return out

    def to_csv(self, path_or_buf, header_comment=None):
        from .scenarios import _write_rows

        header = ["strategy"] + [c for c, _, _ in METRICS]
        rows = [[k] + [_fmt(r.get(c)) for c, _, _ in METRICS] for k, r in self.rows.items()]
        _write_rows(path_or_buf, header, rows, header_comment)

    def ranks_to_csv(self, path_or_buf, header_comment=None):
        from .scenarios import _write_rows

        ranked = [c for c, _, h in METRICS if h is not None]
        ranks = self.ranks()
        rows = [[k] + [ranks[k].get(c, NA) for c in ranked] for k in self.rows]
        _write_rows(path_or_buf, ["strategy", *ranked], rows, header_comment)

    def roi_to_csv(self, path_or_buf, header_comment=None):
        from .scenarios import _write_rows

        rows = []
        for k in self.rows:
            summ = self.roi.get(k)
            rows.append([k] + [_fmt(None if summ is None else summ[c]) for c in ROI_COLUMNS])
        _write_rows(path_or_buf, ["strategy", *ROI_COLUMNS], rows, header_comment)

    def to_text(self, digits=5):
        """Aligned plain-text rendering."""
        header = ["Approach"] + [label for _, label, _ in METRICS]
        body = []
        for k, r in self.rows.items():
            cells = [k]
            for c, _, _ in METRICS:
                v = r.get(c)
                cells.append(NA if v is None else f"{v:.{digits}g}")
            body.append(cells)
        widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(len(header))]
        lines = ["  ".join(str(cell).rjust(w) if i else str(cell).ljust(w)
                           for i, (cell, w) in enumerate(zip(row, widths)))
                 for row in [header, *body]]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path):
        import csv

        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        reader = csv.DictReader(lines)
        rows = {}
        for rec in reader:
            name = rec.pop("strategy")
            rows[name] = {k: (None if v == NA else float(v)) for k, v in rec.items()}
        return cls(rows=rows)
