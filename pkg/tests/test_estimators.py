import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from helpers import equicorrelated_cov, random_scenarios, sample_with_cov
from maxdiv.estimators import EqualWeighted, MaxDiversification, MinimumRisk, RiskParity, risk_parity_weights
from maxdiv.optimizer import solve_dr
from maxdiv.risk import RiskSpec, total_risk_contributions_vol


def test_params_round_trip_and_clone():
    est = MaxDiversification(risk_measure="cvar", epsilon=0.1, target_mode="frac", target=0.5)
    params = est.get_params()
    assert params["risk_measure"] == "cvar" and params["target"] == 0.5
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(alpha=0.8)
    assert twin.alpha == 0.8 and est.alpha == 0.9


def test_fit_matches_functional_api():
    s = random_scenarios(np.random.default_rng(0), 60, 4)
    est = MaxDiversification(risk_measure="mad").fit(s.returns)
    ref = solve_dr(s, RiskSpec.make("mad"))
    np.testing.assert_allclose(est.weights_, ref.weights, atol=1e-12)
    assert est.diversification_ratio_ == pytest.approx(ref.achieved_dr)
    np.testing.assert_allclose(est.raw_weights_ / est.raw_weights_.sum(), est.weights_, atol=1e-9)


def test_predict_and_score():
    s = random_scenarios(np.random.default_rng(1), 40, 3)
    est = EqualWeighted().fit(s)
    np.testing.assert_allclose(est.predict(s.returns), s.returns.mean(axis=1), rtol=1e-14)
    assert np.isfinite(est.score(s.returns))
    with pytest.raises(ValueError):
        est.predict(s.returns[:, :2])
    with pytest.raises(NotFittedError):
        MinimumRisk().predict(s.returns)


def test_fractional_target_raises_return():
    s = random_scenarios(np.random.default_rng(2), 80, 4, drift=0.001)
    free = MinimumRisk(risk_measure="expectile").fit(s)
    half = MinimumRisk(risk_measure="expectile", target_mode="frac", target=0.5).fit(s)
    assert half.eta_ == pytest.approx(0.5 * (half.eta_min_ + half.eta_max_))
    assert half.expected_return_ >= half.eta_ - 1e-9
    assert half.risk_ >= free.risk_ - 1e-10


def test_risk_parity_equalizes_contributions():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 8))
        B = rng.standard_normal((n + 2, n))
        C = B.T @ B / n
        x = risk_parity_weights(C)
        trc = total_risk_contributions_vol(C, x)
        assert np.ptp(trc) <= 1e-8 * trc.mean()
    x = risk_parity_weights(equicorrelated_cov([0.1, 0.2, 0.4], 0.5))
    np.testing.assert_allclose(x, np.array([4, 2, 1]) / 7, atol=1e-10)
    with pytest.raises(ValueError):
        risk_parity_weights(np.ones((2, 2)))


def test_risk_parity_estimator():
    s = sample_with_cov(np.diag([0.01, 0.04]), 30, np.random.default_rng(4))
    np.testing.assert_allclose(RiskParity().fit(s).weights_, [2 / 3, 1 / 3], atol=1e-10)
