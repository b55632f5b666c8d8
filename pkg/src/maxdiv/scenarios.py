"""Price ingestion, return scenarios, moment estimates and rolling windows."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime

import numpy as np

from .exceptions import DataError

__all__ = [
    "PriceSeries",
    "ScenarioMatrix",
    "WindowPlan",
    "load_prices",
    "load_returns",
    "to_returns",
    "mean_returns",
    "covariance",
    "plan_windows",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _parse_date(text):
    try:
        return date.fromisoformat(text)
    except ValueError:
        return datetime.fromisoformat(text)


@dataclass(frozen=True)
class PriceSeries:
    """Adjusted prices, one row per date and one column per asset."""

    dates: tuple
    prices: np.ndarray
    asset_ids: tuple

    def __post_init__(self):
        prices = _frozen(self.prices)
        if prices.ndim != 2:
            raise DataError("prices must be a 2-d matrix")
        if prices.shape != (len(self.dates), len(self.asset_ids)):
            raise DataError(
                f"prices shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.asset_ids)} assets"
            )
        if not np.all(np.isfinite(prices)):
            raise DataError("missing or non-finite price")
        if np.any(prices <= 0):
            r, c = np.argwhere(prices <= 0)[0]
            raise DataError(f"non-positive price at row {r + 1}, column {self.asset_ids[c]!r}")
        parsed = [_parse_date(d) if isinstance(d, str) else d for d in self.dates]
        for k in range(1, len(parsed)):
            if parsed[k] == parsed[k - 1]:
                raise DataError(f"duplicate date {self.dates[k]!r} at row {k + 1}")
            if parsed[k] < parsed[k - 1]:
                raise DataError(f"non-increasing date {self.dates[k]!r} at row {k + 1}")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))

    @property
    def n_assets(self):
        return len(self.asset_ids)

    def select(self, columns):
        """Return a new series restricted to ``columns`` (in that order)."""
        idx = [self.asset_ids.index(c) for c in columns]
        return PriceSeries(self.dates, self.prices[:, idx], tuple(columns))


@dataclass(frozen=True)
class ScenarioMatrix:
    """T equally likely return scenarios for n assets.

    ``returns[t, i]`` is the return of asset ``i`` in scenario ``t``; every
    scenario carries probability ``1/T``.
    """

    returns: np.ndarray
    asset_ids: tuple = None
    dates: tuple = None

    def __post_init__(self):
        r = _frozen(self.returns)
        if r.ndim == 1:
            r = _frozen(r.reshape(-1, 1))
        if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
            raise DataError("returns must be a non-empty T x n matrix")
        if not np.all(np.isfinite(r)):
            raise DataError("returns contain non-finite values")
        ids = self.asset_ids
        if ids is None:
            ids = tuple(f"A{i + 1}" for i in range(r.shape[1]))
        if len(ids) != r.shape[1]:
            raise DataError("asset_ids length does not match the number of columns")
        if self.dates is not None and len(self.dates) != r.shape[0]:
            raise DataError("dates length does not match the number of scenarios")
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "asset_ids", tuple(ids))
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def n_scenarios(self):
        return self.returns.shape[0]

    @property
    def n_assets(self):
        return self.returns.shape[1]

    @property
    def probabilities(self):
        return np.full(self.n_scenarios, 1.0 / self.n_scenarios)

    def slice(self, start, stop):
        """Scenarios ``start`` (inclusive) to ``stop`` (exclusive)."""
        dates = None if self.dates is None else self.dates[start:stop]
        return ScenarioMatrix(self.returns[start:stop], self.asset_ids, dates)

    def to_csv(self, path_or_buf, header_comment=None):
        """Write the return matrix as CSV (``date`` column first when known)."""
        rows = []
        for t in range(self.n_scenarios):
            key = self.dates[t] if self.dates is not None else str(t)
            rows.append([key] + [repr(float(v)) for v in self.returns[t]])
        _write_rows(path_or_buf, ["date", *self.asset_ids], rows, header_comment)


@dataclass(frozen=True)
class WindowPlan:
    """Rolling in-sample / out-of-sample index ranges (half-open)."""

    in_len: int
    hold_len: int
    n_obs: int
    windows: tuple = field(default=())

    def __iter__(self):
        return iter(self.windows)

    def __len__(self):
        return len(self.windows)

    @property
    def out_len(self):
        return self.n_obs - self.in_len


def _write_rows(path_or_buf, header, rows, header_comment=None):
    def emit(fh):
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if hasattr(path_or_buf, "write"):
        emit(path_or_buf)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            emit(fh)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline=""), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8-sig"), newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), False


def _read_table(source, delimiter, what, check_dates, positive):
    fh, owned = _open_text(source)
    try:
        lines = (ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))
        reader = csv.reader(lines, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty {what} file") from None
        header = [h.strip() for h in header]
        if len(header) < 2:
            raise DataError("header must contain a date column and at least one asset")
        assets = header[1:]
        if len(set(assets)) != len(assets):
            raise DataError("duplicate asset column in header")
        dates, values = [], []
        for k, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"ragged row {k}: expected {len(header)} fields, got {len(row)}")
            d = row[0].strip()
            if check_dates:
                try:
                    _parse_date(d)
                except ValueError:
                    raise DataError(f"malformed date {d!r} at row {k}") from None
            vals = []
            for col, cell in zip(assets, row[1:]):
                cell = cell.strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"malformed {what} {cell!r} at row {k}, column {col!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"missing {what} at row {k}, column {col!r}")
                if positive and v <= 0:
                    raise DataError(f"non-positive {what} {cell} at row {k}, column {col!r}")
                vals.append(v)
            dates.append(d)
            values.append(vals)
    finally:
        if owned:
            fh.close()
    if not values:
        raise DataError(f"{what} file has no data rows")
    return tuple(dates), np.array(values), tuple(assets)


def load_prices(source, delimiter=","):
    """Parse a header-bearing price CSV into a :class:`PriceSeries`.

    The first column holds ISO-8601 dates, every other column one asset.
    Lines starting with ``#`` are ignored. Any malformed cell is an error
    naming its row and column; no value is ever filled in.
    """
    dates, prices, assets = _read_table(source, delimiter, "price", True, True)
    return PriceSeries(dates, prices, assets)


def load_returns(source, delimiter=","):
    """Parse a return CSV (as written by :meth:`ScenarioMatrix.to_csv`).

    The first column is a free-form row label, usually a date.
    """
    dates, returns, assets = _read_table(source, delimiter, "return", False, False)
    return ScenarioMatrix(returns, assets, dates)


def to_returns(p):
    """Simple returns ``P_t / P_{t-1} - 1``; one scenario fewer than prices."""
    if p.prices.shape[0] < 2:
        raise DataError("insufficient history: need at least two prices")
    r = p.prices[1:] / p.prices[:-1] - 1.0
    return ScenarioMatrix(r, p.asset_ids, p.dates[1:])


def mean_returns(s):
    return s.returns.mean(axis=0)


def covariance(s):
    """Population (1/T) covariance of the scenario matrix."""
    if s.n_scenarios < 2:
        raise DataError("covariance needs at least two scenarios")
    dev = s.returns - s.returns.mean(axis=0)
    cov = dev.T @ dev / s.n_scenarios
    # exact symmetry, the product above is symmetric only up to rounding
    return (cov + cov.T) / 2.0


def plan_windows(n_obs, in_len, hold_len):
    """Tile ``[in_len, n_obs)`` with holding periods of ``hold_len``.

    Each in-sample range is the ``in_len`` observations immediately before
    its holding period; the last holding period is truncated at ``n_obs``.
    """
    if in_len < 1 or hold_len < 1:
        raise DataError("in_len and hold_len must be positive")
    if n_obs <= in_len:
        raise DataError("no out-of-sample period: series is not longer than the in-sample window")
    windows = []
    out_start = in_len
    while out_start < n_obs:
        out_end = min(out_start + hold_len, n_obs)
        windows.append((out_start - in_len, out_start, out_start, out_end))
        out_start = out_end
    return WindowPlan(in_len, hold_len, n_obs, tuple(windows))
