import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxdiv.exceptions import DataError
from maxdiv.scenarios import (
    PriceSeries,
    ScenarioMatrix,
    covariance,
    load_prices,
    load_returns,
    mean_returns,
    plan_windows,
    to_returns,
)

CSV = b"date,A,B\n2020-01-01,100,50\n2020-01-02,110,49\n2020-01-03,121,51\n"


def _prices(col):
    dates = tuple(f"2020-01-{d:02d}" for d in range(1, len(col) + 1))
    return PriceSeries(dates, np.asarray(col, dtype=float).reshape(-1, 1), ("A",))


def test_load_prices_parses_header_and_rows():
    p = load_prices(CSV)
    assert p.asset_ids == ("A", "B")
    assert p.prices.shape == (3, 2)
    np.testing.assert_array_equal(p.prices[:, 0], [100, 110, 121])


def test_load_prices_from_text_stream_and_path(tmp_path):
    assert load_prices(io.StringIO(CSV.decode())).prices.shape == (3, 2)
    path = tmp_path / "p.csv"
    path.write_bytes(b"# comment line\n" + CSV)
    assert load_prices(str(path)).dates[0] == "2020-01-01"


@pytest.mark.parametrize(
    "body, message",
    [
        (b"date,A\n2020-01-01,1\n2020-01-02,0\n", "non-positive price"),
        (b"date,A\n2020-01-02,1\n2020-01-01,2\n", "non-increasing date"),
        (b"date,A\n2020-01-01,1\n2020-01-01,2\n", "duplicate date"),
        (b"date,A,B\n2020-01-01,1\n", "ragged row 2"),
        (b"date,A\n2020-01-01,abc\n", "malformed price 'abc' at row 2, column 'A'"),
        (b"date,A\nyesterday,1\n", "malformed date"),
        (b"date,A\n2020-01-01,\n", "row 2"),
        (b"date,A\n2020-01-01,nan\n", "missing price"),
        (b"", "empty"),
        (b"date,A,A\n2020-01-01,1,1\n", "duplicate asset"),
    ],
)
def test_load_prices_errors_name_the_problem(body, message):
    with pytest.raises(DataError, match=message):
        load_prices(body)


def test_to_returns_examples():
    np.testing.assert_allclose(to_returns(_prices([100, 110, 121])).returns.ravel(), [0.1, 0.1], rtol=1e-14)
    np.testing.assert_array_equal(to_returns(_prices([50, 50, 50])).returns.ravel(), [0, 0])
    np.testing.assert_array_equal(to_returns(_prices([100, 50])).returns.ravel(), [-0.5])
    with pytest.raises(DataError, match="insufficient history"):
        to_returns(_prices([100]))


def test_to_returns_keeps_dates_of_later_price():
    s = to_returns(load_prices(CSV))
    assert s.dates == ("2020-01-02", "2020-01-03")
    assert s.asset_ids == ("A", "B")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=2, max_size=40))
def test_compounding_reconstructs_price_ratio(path):
    s = to_returns(_prices(np.cumprod(path) * 10))
    prices = np.cumprod(path) * 10
    assert np.prod(1 + s.returns) == pytest.approx(prices[-1] / prices[0], rel=1e-12)


def test_mean_returns_examples():
    assert mean_returns(ScenarioMatrix([[0.1], [-0.1]]))[0] == pytest.approx(0.0, abs=1e-17)
    assert mean_returns(ScenarioMatrix([[0.1], [0.1]]))[0] == pytest.approx(0.1)
    np.testing.assert_allclose(mean_returns(ScenarioMatrix([[0.02, 0.0], [0.04, 0.02]])), [0.03, 0.01])


def test_covariance_examples():
    assert covariance(ScenarioMatrix([[-1.0], [1.0]]))[0, 0] == 1.0
    same = covariance(ScenarioMatrix([[1.0, 1.0], [3.0, 3.0], [2.0, 2.0]]))
    assert np.linalg.matrix_rank(same) == 1
    assert same[0, 1] / np.sqrt(same[0, 0] * same[1, 1]) == pytest.approx(1.0)
    anti = covariance(ScenarioMatrix([[-1.0, 1.0], [1.0, -1.0]]))
    assert anti[0, 1] / np.sqrt(anti[0, 0] * anti[1, 1]) == pytest.approx(-1.0)


def test_covariance_symmetric_and_matches_numpy_population():
    rng = np.random.default_rng(0)
    R = rng.standard_normal((40, 6))
    C = covariance(ScenarioMatrix(R))
    assert np.abs(C - C.T).max() <= 1e-14
    assert np.all(np.diag(C) >= 0)
    np.testing.assert_allclose(C, np.cov(R, rowvar=False, bias=True), rtol=1e-12)


def test_scenario_matrix_validation_and_probabilities():
    s = ScenarioMatrix(np.zeros((4, 2)))
    np.testing.assert_array_equal(s.probabilities, [0.25] * 4)
    assert s.asset_ids == ("A1", "A2")
    with pytest.raises(DataError):
        ScenarioMatrix([[np.nan]])
    with pytest.raises(DataError):
        ScenarioMatrix(np.zeros((3, 2)), ("a",))
    with pytest.raises(ValueError):
        s.returns[0, 0] = 1.0


def test_plan_windows_examples():
    plan = plan_windows(540, 500, 20)
    assert plan.windows == ((0, 500, 500, 520), (20, 520, 520, 540))
    plan = plan_windows(510, 500, 20)
    assert plan.windows == ((0, 500, 500, 510),)
    with pytest.raises(DataError, match="no out-of-sample period"):
        plan_windows(500, 500, 20)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 60), st.integers(1, 15), st.integers(1, 80))
def test_plan_windows_partition_out_of_sample(in_len, hold_len, extra):
    T = in_len + extra
    plan = plan_windows(T, in_len, hold_len)
    assert len(plan) == -(-(T - in_len) // hold_len)
    covered = [t for (_, _, a, b) in plan for t in range(a, b)]
    assert covered == list(range(in_len, T))
    for in_start, in_end, out_start, _ in plan:
        assert in_end == out_start and in_end - in_start == in_len


def test_returns_csv_round_trip():
    s = to_returns(load_prices(CSV))
    buf = io.StringIO()
    s.to_csv(buf, "hash")
    text = buf.getvalue()
    assert text.startswith("# hash\ndate,A,B\n")
    back = load_returns(text.encode())
    np.testing.assert_array_equal(back.returns, s.returns)
    assert back.dates == s.dates
