"""Command-line interface: ``maxdiv {ingest,optimize,frontier,backtest,report}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags. Every CSV written carries a
``# config-sha256: ...`` first line hashing the resolved settings and the
input data, so two outputs with the same line came from the same run.

Exit codes: 0 success, 2 input error, 3 unattainable target, 4 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from .backtest import BacktestConfig, compute_metrics, run_backtest
from .exceptions import DataError, SchaiblePositivityError, SolverError, TargetUnattainableError
from .metrics import MetricTable
from .optimizer import DR, MIN_RISK, TargetPolicy, frontier
from .risk import KINDS, RiskSpec, asset_risks
from .scenarios import _write_rows, load_prices, load_returns, mean_returns, to_returns
from .strategies import ALL_STRATEGIES, InSampleContext, StrategyConfig, StrategyId

log = logging.getLogger("maxdiv")

EXIT_OK, EXIT_INPUT, EXIT_TARGET, EXIT_SOLVER = 0, 2, 3, 4
COMMANDS = ("ingest", "optimize", "frontier", "backtest", "report")


@dataclass
class RunConfig:
    data: str | None = None
    data_kind: str = "prices"
    measure: str = "volatility"
    family: str = DR
    epsilon: float = 0.05
    alpha: float = 0.9
    in_len: int = 500
    hold_len: int = 20
    strategies: tuple = ()
    eta_mode: str | None = None
    eta: float | None = None
    grid: int = 10
    out: str = "."
    index_col: str | None = None
    turnover: str = "inception"
    backend: str = "ipm"
    seed: int = 0
    summary: bool = False

    def validate(self, command):
        if self.data_kind not in ("prices", "returns"):
            raise DataError(f"data_kind must be 'prices' or 'returns', got {self.data_kind!r}")
        self.measure = RiskSpec.make(self.measure, self.epsilon, self.alpha).kind
        if self.family not in (DR, MIN_RISK):
            raise DataError(f"family must be {DR!r} or {MIN_RISK!r}")
        if self.eta is not None and self.eta_mode is None:
            self.eta_mode = "abs"
        if self.eta_mode is not None:
            TargetPolicy(self.eta_mode, self.eta)
        if self.grid < 2:
            raise DataError("grid must be at least 2")
        if self.in_len < 2 or self.hold_len < 1:
            raise DataError("in_len must be >= 2 and hold_len >= 1")
        self.strategies = tuple(str(StrategyId.parse(s)) for s in self.strategies)
        if command in ("ingest", "optimize", "frontier", "backtest") and not self.data:
            raise DataError("--data is required")
        return self

    @property
    def policy(self):
        if self.eta_mode is None:
            return None
        return TargetPolicy(self.eta_mode, self.eta)

    def canonical(self):
        return "\n".join(f"{f.name}={getattr(self, f.name)!r}" for f in dataclasses.fields(self))


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name, text):
    kind = _FIELDS[name].type
    text = text.strip()
    if name == "strategies":
        return tuple(t for t in (x.strip() for x in text.split(",")) if t)
    if text.lower() in ("", "none") and "None" in str(kind):
        return None
    try:
        if "bool" in str(kind):
            if text.lower() in _BOOL_TRUE:
                return True
            if text.lower() in _BOOL_FALSE:
                return False
            raise ValueError(text)
        if "int" in str(kind):
            return int(text)
        if "float" in str(kind):
            return float(text)
    except ValueError:
        raise DataError(f"bad value {text!r} for {name}") from None
    return text


def read_config(path):
    """Parse a ``key = value`` file; ``#`` starts a comment, unknown keys are errors."""
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        for k, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{k}: expected key = value")
            key, val = (x.strip() for x in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELDS:
                raise DataError(f"{path}:{k}: unknown key {key!r}")
            values[key] = _coerce(key, val)
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="maxdiv", description="Diversification-ratio portfolio toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("--data", help="input CSV (prices unless --data-kind returns)")
        p.add_argument("--data-kind", choices=("prices", "returns"))
        p.add_argument("--out", help="output directory")
        return p

    def model(p):
        p.add_argument("--measure", help="vol, mad, cvar or expectile")
        p.add_argument("--epsilon", type=float, help="CVaR tail probability")
        p.add_argument("--alpha", type=float, help="expectile level")
        p.add_argument("--backend", choices=("ipm", "highs"))
        return p

    def strategies(p):
        p.add_argument("--strategy", action="append", dest="strategy", metavar="ID",
                       help="strategy id, repeatable")
        p.add_argument("--strategies", metavar="LIST", help="comma separated strategy ids")
        p.add_argument("--eta-mode", choices=("none", "frac", "abs"))
        p.add_argument("--eta", type=float, help="target return (absolute unless --eta-mode frac)")
        return p

    p = common(sub.add_parser("ingest", help="prices to returns"))
    p.add_argument("--summary", action="store_true", default=None, help="also write per-asset mean and volatility")

    strategies(model(common(sub.add_parser("optimize", help="solve strategies on the full sample"))))

    p = model(common(sub.add_parser("frontier", help="trace a frontier over equally spaced targets")))
    p.add_argument("--family", choices=(DR, MIN_RISK))
    p.add_argument("--grid", type=int, metavar="K")

    p = strategies(model(common(sub.add_parser("backtest", help="rolling out-of-sample comparison"))))
    p.add_argument("--in-len", type=int)
    p.add_argument("--hold-len", type=int)
    p.add_argument("--index-col", metavar="NAME")
    p.add_argument("--turnover", choices=("inception", "strict"))
    p.add_argument("--seed", type=int)

    p = model(common(sub.add_parser("report", help="render a metric table; export asset risks")))
    p.add_argument("--metrics", help="metric CSV (default OUT/metrics.csv)")
    return parser


def resolve_config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None and name != "strategies":
            values[name] = v
    picked = list(getattr(args, "strategy", None) or [])
    if getattr(args, "strategies", None):
        picked += _coerce("strategies", args.strategies)
    if picked:
        values["strategies"] = tuple(picked)
    return RunConfig(**values).validate(args.command)


def _load(cfg):
    try:
        if cfg.data_kind == "returns":
            return load_returns(cfg.data)
        return to_returns(load_prices(cfg.data))
    except OSError as exc:
        raise DataError(f"cannot read {cfg.data}: {exc.strerror}") from None


def config_hash(cfg):
    h = hashlib.sha256(cfg.canonical().encode())
    if cfg.data and os.path.isfile(cfg.data):
        with open(cfg.data, "rb") as fh:
            h.update(hashlib.sha256(fh.read()).digest())
    return h.hexdigest()


def _stamp(cfg):
    return f"config-sha256: {config_hash(cfg)}"


def _path(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _num(v):
    return "NA" if v is None else repr(float(v))


def cmd_ingest(cfg):
    prices = load_prices(cfg.data)
    s = to_returns(prices)
    stamp = _stamp(cfg)
    s.to_csv(_path(cfg, "returns.csv"), stamp)
    print(f"{s.n_scenarios} returns x {s.n_assets} assets -> {_path(cfg, 'returns.csv')}")
    if cfg.summary:
        mu = mean_returns(s)
        sd = s.returns.std(axis=0)
        rows = [[a, _num(m), _num(v)] for a, m, v in zip(s.asset_ids, mu, sd)]
        _write_rows(_path(cfg, "summary.csv"), ["asset", "mean", "volatility"], rows, stamp)
        width = max(len(a) for a in s.asset_ids)
        for a, m, v in zip(s.asset_ids, mu, sd):
            print(f"{a:<{width}}  mean={m: .6g}  vol={v:.6g}")
    return EXIT_OK


def _strategy_config(cfg):
    return StrategyConfig(epsilon=cfg.epsilon, alpha=cfg.alpha, backend=cfg.backend, target=cfg.policy)


def cmd_optimize(cfg):
    s = _load(cfg)
    ids = cfg.strategies or tuple(str(x) for x in ALL_STRATEGIES if x is not StrategyId.Index)
    ctx = InSampleContext(s, _strategy_config(cfg))
    weight_rows, diag_rows = [], []
    code = EXIT_OK
    for name in ids:
        sid = StrategyId.parse(name)
        if sid is StrategyId.Index:
            print(f"{name}: skipped, the index has no weights")
            continue
        try:
            est = ctx.estimator(sid)
        except TargetUnattainableError as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            diag_rows.append([name, "target_unattainable", "NA", "NA", "NA", "NA", str(exc)])
            code = max(code, EXIT_TARGET)
            continue
        except (SolverError, SchaiblePositivityError) as exc:
            print(f"{name}: solver failure: {exc}", file=sys.stderr)
            diag_rows.append([name, "solver_failure", "NA", "NA", "NA", "NA", str(exc)])
            code = max(code, EXIT_SOLVER)
            continue
        w = est.weights_
        outcome = getattr(est, "outcome_", None)
        eta = outcome.eta if outcome is not None else None
        risk = outcome.achieved_risk if outcome is not None else None
        ret = float(mean_returns(s) @ w)
        dr = getattr(est, "diversification_ratio_", None)
        weight_rows.append([name] + [repr(float(v)) for v in w])
        diag_rows.append([name, "optimal", _num(eta), _num(risk), _num(ret), _num(dr), ""])
        print(f"{name}: return={ret:.6g}" + (f" dr={dr:.6g}" if dr is not None else "")
              + "  " + " ".join(f"{a}={v:.4f}" for a, v in zip(s.asset_ids, w)))
    stamp = _stamp(cfg)
    _write_rows(_path(cfg, "weights.csv"), ["strategy", *s.asset_ids], weight_rows, stamp)
    _write_rows(_path(cfg, "diagnostics.csv"),
                ["strategy", "status", "eta", "risk", "expected_return", "dr", "message"], diag_rows, stamp)
    return code


def cmd_frontier(cfg):
    s = _load(cfg)
    spec = RiskSpec.make(cfg.measure, cfg.epsilon, cfg.alpha)
    points = frontier(s, spec, cfg.family, cfg.grid, backend=cfg.backend)
    value_col = "dr" if cfg.family == DR else "risk"
    rows = []
    for k, pt in enumerate(points):
        w = pt.outcome.weights if pt.outcome is not None else [None] * s.n_assets
        ret = pt.outcome.achieved_return if pt.outcome is not None else None
        rows.append([k, _num(pt.eta), int(pt.feasible), _num(pt.value), _num(ret)] + [_num(v) for v in w])
    header = ["k", "eta", "feasible", value_col, "return", *s.asset_ids]
    _write_rows(_path(cfg, "frontier.csv"), header, rows, _stamp(cfg))
    for pt in points:
        print(f"eta={pt.eta:.6g}  {value_col}={_num(pt.value)}" + ("" if pt.feasible else f"  ({pt.message})"))
    return EXIT_OK


def cmd_backtest(cfg):
    s = _load(cfg)
    bcfg = BacktestConfig(
        in_len=cfg.in_len, hold_len=cfg.hold_len,
        strategies=cfg.strategies or ALL_STRATEGIES,
        epsilon=cfg.epsilon, alpha=cfg.alpha, index_col=cfg.index_col,
        backend=cfg.backend, turnover_convention=cfg.turnover, target=cfg.policy,
    )
    result = run_backtest(s, bcfg)
    for msg in result.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    table = compute_metrics(result)
    stamp = _stamp(cfg)
    result.write_csv(cfg.out, stamp)
    table.to_csv(_path(cfg, "metrics.csv"), stamp)
    table.ranks_to_csv(_path(cfg, "ranks.csv"), stamp)
    table.roi_to_csv(_path(cfg, "roi.csv"), stamp)
    text = table.to_text()
    with open(_path(cfg, "metrics.txt"), "w") as fh:
        fh.write(f"# {stamp}\n{text}")
    print(text, end="")
    return EXIT_OK


def cmd_report(cfg, metrics_path=None):
    done = False
    path = metrics_path or os.path.join(cfg.out, "metrics.csv")
    if os.path.isfile(path):
        print(MetricTable.from_csv(path).to_text(), end="")
        done = True
    elif metrics_path:
        raise DataError(f"metric file not found: {metrics_path}")
    if cfg.data:
        s = _load(cfg)
        cols = {kind: asset_risks(s, RiskSpec.make(kind, cfg.epsilon, cfg.alpha)) for kind in KINDS}
        rows = [[a] + [_num(cols[k][i]) for k in KINDS] for i, a in enumerate(s.asset_ids)]
        _write_rows(_path(cfg, "asset_risks.csv"), ["asset", *KINDS], rows, _stamp(cfg))
        print(f"asset risks -> {_path(cfg, 'asset_risks.csv')}")
        done = True
    if not done:
        raise DataError(f"nothing to report: no {path} and no --data")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "optimize":
            return cmd_optimize(cfg)
        if args.command == "frontier":
            return cmd_frontier(cfg)
        if args.command == "backtest":
            return cmd_backtest(cfg)
        return cmd_report(cfg, getattr(args, "metrics", None))
    except TargetUnattainableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TARGET
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
