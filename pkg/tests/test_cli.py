import csv

import numpy as np
import pytest

from helpers import equicorrelated_cov, random_scenarios, sample_with_cov
from maxdiv.cli import main, read_config
from maxdiv.exceptions import DataError


def _write_prices(path, returns, names=None):
    T, n = returns.shape
    names = names or [f"S{i + 1}" for i in range(n)]
    prices = 100 * np.vstack([np.ones(n), np.cumprod(1 + returns, axis=0)])
    with open(path, "w") as fh:
        fh.write("date," + ",".join(names) + "\n")
        for t, row in enumerate(prices):
            day = np.datetime64("2020-01-01") + t
            fh.write(f"{day}," + ",".join(repr(float(v)) for v in row) + "\n")
    return str(path)


def _read(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# config-sha256: ")
    return list(csv.reader(lines[1:]))


@pytest.fixture
def prices(tmp_path):
    return _write_prices(tmp_path / "p.csv", random_scenarios(np.random.default_rng(0), 90, 4).returns)


def test_ingest_and_summary(tmp_path, capsys):
    src = tmp_path / "p.csv"
    src.write_text("date,A,B\n2020-01-01,100,50\n2020-01-02,110,49\n2020-01-03,121,51\n")
    out = tmp_path / "o"
    assert main(["ingest", "--data", str(src), "--out", str(out), "--summary"]) == 0
    rows = _read(out / "returns.csv")
    assert rows[0] == ["date", "A", "B"] and len(rows) == 3
    summary = _read(out / "summary.csv")
    assert summary[0] == ["asset", "mean", "volatility"]
    assert float(summary[1][1]) == pytest.approx(0.1)


def test_bad_file_exit_code_names_row(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    src.write_text("date,A\n2020-01-01,100\n2020-01-02,x\n")
    assert main(["ingest", "--data", str(src), "--out", str(tmp_path)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_optimize_equicorrelated_and_ew(tmp_path):
    R = sample_with_cov(equicorrelated_cov([0.01, 0.02, 0.04], 0.5), 60, np.random.default_rng(1)).returns
    returns = tmp_path / "r.csv"
    with open(returns, "w") as fh:
        fh.write("date,a,b,c\n")
        for t, row in enumerate(R):
            fh.write(f"t{t}," + ",".join(repr(float(v)) for v in row) + "\n")
    out = tmp_path / "o"
    code = main(["optimize", "--data", str(returns), "--data-kind", "returns", "--out", str(out),
                 "--strategy", "DRvol0", "--strategy", "EW"])
    assert code == 0
    rows = {r[0]: [float(v) for v in r[1:]] for r in _read(out / "weights.csv")[1:]}
    np.testing.assert_allclose(rows["DRvol0"], np.array([4, 2, 1]) / 7, atol=1e-6)
    np.testing.assert_allclose(rows["EW"], [1 / 3] * 3)
    diag = _read(out / "diagnostics.csv")
    assert diag[0] == ["strategy", "status", "eta", "risk", "expected_return", "dr", "message"]


def test_optimize_unattainable_target(prices, tmp_path, capsys):
    code = main(["optimize", "--data", prices, "--out", str(tmp_path), "--strategy", "DRCVaR1", "--eta", "0.5"])
    assert code == 3
    assert "target return unattainable" in capsys.readouterr().err


def test_frontier_file(prices, tmp_path):
    assert main(["frontier", "--data", prices, "--out", str(tmp_path), "--measure", "mad", "--grid", "2"]) == 0
    rows = _read(tmp_path / "frontier.csv")
    assert rows[0] == ["k", "eta", "feasible", "dr", "return", "S1", "S2", "S3", "S4"]
    assert len(rows) == 3
    assert main(["frontier", "--data", prices, "--out", str(tmp_path), "--family", "minrisk", "--grid", "4"]) == 0
    rows = _read(tmp_path / "frontier.csv")
    assert rows[0][3] == "risk"
    risks = [float(r[3]) for r in rows[1:]]
    assert all(b >= a - 1e-8 for a, b in zip(risks, risks[1:]))


def test_backtest_ew_only_and_report(prices, tmp_path, capsys):
    out = tmp_path / "bt"
    args = ["backtest", "--data", prices, "--out", str(out), "--in-len", "60", "--hold-len", "10",
            "--strategies", "EW,RP"]
    assert main(args) == 0
    metrics = _read(out / "metrics.csv")
    col = metrics[0].index("turnover")
    ew = next(r for r in metrics[1:] if r[0] == "EW")
    assert float(ew[col]) == 0.0
    first = (out / "metrics.csv").read_bytes()
    assert main(args) == 0
    assert (out / "metrics.csv").read_bytes() == first
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    assert "EW" in capsys.readouterr().out


def test_report_without_inputs_is_input_error(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == 2


def test_config_file_and_overrides(prices, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# settings\ndata = {prices}\nmeasure = mad  # inline\nin-len = 60\nhold_len = 10\n"
                   "strategies = EW\n")
    values = read_config(str(cfg))
    assert values["in_len"] == 60 and values["strategies"] == ("EW",)
    out = tmp_path / "o"
    assert main(["backtest", "--config", str(cfg), "--out", str(out), "--hold-len", "30"]) == 0
    assert len({r[0] for r in _read(out / "rebalances.csv")[1:]}) == 1


def test_unknown_config_key(tmp_path, prices):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("data = x\nwindow = 3\n")
    with pytest.raises(DataError, match="bad.cfg:2: unknown key"):
        read_config(str(cfg))
    assert main(["optimize", "--config", str(cfg)]) == 2


def test_missing_data_and_bad_strategy(tmp_path, prices):
    assert main(["optimize", "--out", str(tmp_path)]) == 2
    assert main(["optimize", "--data", prices, "--out", str(tmp_path), "--strategy", "MV9"]) == 2


def test_config_hash_tracks_data(tmp_path):
    path = tmp_path / "p.csv"
    heads = []
    for seed in (2, 3):
        _write_prices(path, random_scenarios(np.random.default_rng(seed), 5, 2).returns)
        main(["ingest", "--data", str(path), "--out", str(tmp_path / "o")])
        heads.append((tmp_path / "o" / "returns.csv").read_text().splitlines()[0])
    assert heads[0] != heads[1]
