import warnings

import numpy as np
import pytest

from ucal import fixtures
from ucal.agents import best_response
from ucal.metrics import agent_reg, cal, reg, vcal, vreg
from ucal.scoring import PLScoringRule, VShapedRule, brier, random_pl_rule, separable_rule


def test_low_brier_values():
    T = 20
    t, u = fixtures.gen_low_brier(T)
    assert float(np.sum(brier()(t.predictions, t.outcomes))) == pytest.approx(0.2 * T)
    exp = fixtures.expected_low_brier(T)
    assert reg(brier(), t) == pytest.approx(exp["Reg"], abs=1e-12)
    assert agent_reg(u, t) == pytest.approx(exp["AgentReg_wager"], abs=1e-12)
    assert vcal(t).value == pytest.approx(exp["VCal"], abs=1e-12)


def test_low_brier_quarter_variant():
    T = 40
    t, u = fixtures.gen_low_brier(T, "quarter_wrong")
    exp = fixtures.expected_low_brier(T, "quarter_wrong")
    assert vcal(t).value == pytest.approx(0.25 * T)
    assert reg(brier(), t) == pytest.approx(exp["Reg"], abs=1e-12)
    assert agent_reg(u, t) == pytest.approx(exp["AgentReg_wager"], abs=1e-12)


def test_low_brier_divisibility():
    with pytest.raises(fixtures.FixtureError):
        fixtures.gen_low_brier(30)
    with pytest.raises(fixtures.FixtureError):
        fixtures.gen_low_brier(20, "quarter_wrong")
    with pytest.raises(fixtures.FixtureError):
        fixtures.gen_low_brier(40, "other")


@pytest.mark.parametrize("v", [0.05, 0.2, 0.33, 0.45])
def test_exact_forecast_vreg(v):
    t = fixtures.gen_named_transcript("exact", 200)
    assert vreg(v, t) == pytest.approx(-v * 200, abs=1e-9)


def test_running_mean_shape():
    T = 1000
    t = fixtures.gen_named_transcript("running_mean", T)
    assert np.all(t.predictions[: T // 2] == 1.0)
    assert t.predictions[-1] == pytest.approx(0.5)
    assert cal(t) == pytest.approx(fixtures.running_mean_cal_exact(T), rel=1e-12)
    assert cal(t) >= fixtures.expected_named_transcript("running_mean", T)["Cal_min"]


def test_unknown_example():
    with pytest.raises(fixtures.FixtureError):
        fixtures.gen_named_transcript("nope", 10)


def test_sr_counterexample_brier():
    T, eps = 1000, 0.01
    rule = PLScoringRule.from_function(lambda p: p * (1 - p), n_segments=100)
    ce = fixtures.gen_sr_counterexample(rule, eps, T)
    assert abs(reg(rule.to_bivariate(), ce.transcript)) <= ce.rounding_bound
    assert ce.predicted_gap == pytest.approx(T * (0.25 - eps))
    assert reg(ce.modified.to_bivariate(), ce.transcript) > 0.9 * ce.predicted_gap


def test_sr_counterexample_vshape():
    ce = fixtures.gen_sr_counterexample(VShapedRule(0.5), 0.01, 1000)
    assert ce.miss_fraction == pytest.approx(0.5)
    assert reg(VShapedRule(0.5).to_bivariate(), ce.transcript) == pytest.approx(0.0, abs=1e-9)
    assert reg(ce.modified.to_bivariate(), ce.transcript) == pytest.approx(ce.predicted_gap, abs=1e-9)


def test_sr_counterexample_large_eps_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ce = fixtures.gen_sr_counterexample(VShapedRule(0.5), 0.7, 100)
    assert any("concavity gap" in str(w.message) for w in caught)
    assert reg(ce.modified.to_bivariate(), ce.transcript) <= 1e-9


def test_sr_counterexample_linear_rule():
    with pytest.raises(fixtures.FixtureError):
        fixtures.gen_sr_counterexample(PLScoringRule([], [0.0, 1.0]), 0.01, 100)


def test_perturbed_calibrated():
    T = 1000
    t = fixtures.gen_perturbed_calibrated(T)
    exp = fixtures.expected_perturbed(T)
    assert cal(t) >= exp["Cal_min"]
    assert reg(brier(), t) <= exp["Reg_max"]
    assert vcal(t).value <= exp["VCal_max"] + 1e-9
    assert cal(fixtures.gen_perturbed_calibrated(T, perturb=False)) == 0.0


def test_multiclass_epochs():
    T = 900
    t, u = fixtures.gen_multiclass_epoch_example(T)
    exp = fixtures.expected_multiclass_epochs(T)
    for i, b in enumerate(fixtures.per_outcome_views(t)):
        assert cal(b) == pytest.approx(exp[f"Cal_outcome_{i}"], abs=1e-9)
    us = fixtures.epoch_utilities()
    assert agent_reg(u, t) == pytest.approx(exp["AgentReg_raw"], abs=1e-9)
    assert agent_reg(us["div6"], t) == pytest.approx(exp["AgentReg_div6"], abs=1e-9)
    assert agent_reg(us["affine"], t) == pytest.approx(T / 9, abs=1e-9)


def test_epoch_best_responses():
    _, u = fixtures.gen_multiclass_epoch_example(9)
    for p in set(fixtures.EPOCH_FORECASTS):
        want = 1 if np.allclose(p, (2 / 3, 1 / 3, 0)) else 0
        assert best_response(u, np.array(p)) == want


def test_epoch_separable_rules_have_no_regret():
    t, _ = fixtures.gen_multiclass_epoch_example(90)
    rng = np.random.default_rng(0)
    for _ in range(20):
        rule = separable_rule([random_pl_rule(rng) for _ in range(3)])
        assert reg(rule, t) <= 1e-9


@pytest.mark.parametrize("name", ["quarter_wrong", "exact", "running_mean"])
def test_fixtures_are_deterministic(name):
    assert fixtures.gen_named_transcript(name, 400) == fixtures.gen_named_transcript(name, 400)
