import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _gen import random_binary, random_multiclass
from ucal import fixtures
from ucal.agents import UtilityMatrix, random_agent
from ucal.metrics import (
    METRIC_ORDER,
    agent_reg,
    agent_swap_reg,
    cal,
    cal_l1,
    cal_l1_multiclass,
    cal_l2,
    reg,
    regret_report,
    vcal,
    vreg,
    vreg_curve,
    weak_cal_witness,
)
from ucal.scoring import PLScoringRule, VShapedRule, brier, random_pl_rule
from ucal.transcript import Transcript, TranscriptError


def naive_reg(rule, t):
    total = 0.0
    beta = float(np.mean(t.outcomes))
    for p, x in zip(t.predictions, t.outcomes):
        total += rule(float(p), int(x)) - rule(beta, int(x))
    return total


# -- reg ---------------------------------------------------------------------


def test_base_rate_predictions_have_zero_regret():
    x = np.array([1, 0, 0, 1, 1])
    t = Transcript(np.full(5, 0.6), x)
    assert reg(brier(), t) == 0.0
    assert vreg(0.3, t) == 0.0


def test_reg_low_brier():
    t, _ = fixtures.gen_low_brier(20)
    assert reg(brier(), t) == pytest.approx(-0.05 * 20, abs=1e-12)


def test_reg_matches_double_loop():
    t = random_binary(np.random.default_rng(0), 20)
    for rule in (brier(), VShapedRule(0.37).to_bivariate()):
        assert reg(rule, t) == pytest.approx(naive_reg(rule, t), abs=1e-12)


def test_reg_arity_mismatch():
    t = random_multiclass(np.random.default_rng(1), 10, 3)
    with pytest.raises(Exception):
        reg(brier(), t)


# -- calibration -------------------------------------------------------------


def test_cal_examples():
    assert cal_l1(fixtures.gen_named_transcript("exact", 100)) == 0.0
    x = np.array([0, 1] * 10)
    assert cal_l1(Transcript(np.full(20, 0.5), x)) == 0.0
    assert cal(fixtures.gen_named_transcript("running_mean", 1000)) >= 0.25 * 1000


def test_cal2_examples():
    assert cal_l2(fixtures.gen_named_transcript("exact", 100)) == 0.0
    assert cal_l2(Transcript(np.full(12, 0.5), np.ones(12, dtype=int))) == pytest.approx(0.25 * 12)


def test_cal_grouping_is_exact_unless_quantized():
    t = Transcript([0.3, 0.3 + 1e-12], [1, 0])
    assert cal_l1(t) == pytest.approx(0.7 + 0.3 + 1e-12)
    assert cal_l1(t, decimals=6) == pytest.approx(0.4, abs=1e-9)


def test_multiclass_cal_binary_consistency():
    t = random_binary(np.random.default_rng(2), 40)
    two = Transcript(np.column_stack([1 - t.predictions, t.predictions]), t.outcomes, K=2)
    assert cal_l1(two) == pytest.approx(cal_l1(t))


# -- agents ------------------------------------------------------------------


def test_agent_reg_low_brier():
    t, u = fixtures.gen_low_brier(20)
    assert agent_reg(u, t) == pytest.approx(0.1 * 20, abs=1e-12)


def test_single_action_agent_has_no_regret():
    t = random_binary(np.random.default_rng(3), 30)
    u = UtilityMatrix([[0.4, -0.3]])
    assert agent_reg(u, t) == 0.0 and agent_swap_reg(u, t) == 0.0


def test_swap_regret_dominates_external_regret():
    rng = np.random.default_rng(4)
    for _ in range(50):
        t = random_binary(rng, 30)
        u = random_agent(rng, 4)
        assert agent_swap_reg(u, t) >= -1e-12


# -- V-regret ----------------------------------------------------------------


def test_vreg_quarter_wrong():
    t = fixtures.gen_named_transcript("quarter_wrong", 1000)
    assert vreg(0.4, t) == pytest.approx(-0.15 * 1000, abs=1e-9)


@pytest.mark.parametrize("v", [0.1, 0.25, 0.37, 0.49])
def test_vreg_exact(v):
    t = fixtures.gen_named_transcript("exact", 100)
    assert vreg(v, t) == pytest.approx(-v * 100, abs=1e-9)


def test_vreg_matches_vshape_regret():
    t = random_binary(np.random.default_rng(5), 30)
    assert vreg(0.37, t) == pytest.approx(reg(VShapedRule(0.37).to_bivariate(), t), abs=1e-12)


def test_vreg_rejects_out_of_range():
    with pytest.raises(ValueError):
        vreg(1.2, random_binary(np.random.default_rng(6), 5))


def test_vcal_examples():
    r = vcal(fixtures.gen_named_transcript("quarter_wrong", 1000))
    assert r.value == pytest.approx(250.0, abs=1e-9)
    assert r.v in (0.0, 1.0)
    assert vcal(fixtures.gen_named_transcript("exact", 100)).value == pytest.approx(0.0, abs=1e-12)


def test_vcal_is_sup_of_curve():
    t = random_binary(np.random.default_rng(7), 40)
    a, b, A, B = vreg_curve(t)
    mids = 0.5 * (a + b)
    assert np.allclose(A + B * mids, [vreg(m, t) for m in mids], atol=1e-12)
    assert vcal(t).value >= np.max(A + B * mids) - 1e-12


# -- weak calibration --------------------------------------------------------


def test_weak_cal_witness():
    t = random_binary(np.random.default_rng(8), 30)
    assert weak_cal_witness(t, lambda p: np.zeros_like(p)) == 0.0
    assert weak_cal_witness(fixtures.gen_named_transcript("exact", 100)) == 0.0


# -- report ------------------------------------------------------------------


def test_report_columns():
    t = random_binary(np.random.default_rng(9), 30)
    rep = regret_report(t, rules={"v3": VShapedRule(0.3).to_bivariate()}, agents={"w": random_agent(np.random.default_rng(1), 2)}, include_lp=True, meta={"seed": 4})
    cols = rep.columns()
    assert cols[:3] == ["T", "K", "seed"]
    assert [c for c in cols if c in METRIC_ORDER] == [c for c in METRIC_ORDER if c in cols]
    assert rep.metrics["MaxAgentReg"] >= rep.metrics["VCal"] - 1e-9
    assert "Reg_v3" in cols and "AgentSwapReg_w" in cols


def test_report_multiclass():
    rep = regret_report(random_multiclass(np.random.default_rng(10), 20, 3))
    assert "Cal" in rep.metrics and "VCal" not in rep.metrics


# -- properties --------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_reg_is_linear_in_rule(seed):
    rng = np.random.default_rng(seed)
    r1, r2 = random_pl_rule(rng), random_pl_rule(rng)
    t = random_binary(rng, 30)
    both = (r1.scaled(0.5) + r2.scaled(0.5)).to_bivariate()
    assert reg(both, t) == pytest.approx(0.5 * reg(r1.to_bivariate(), t) + 0.5 * reg(r2.to_bivariate(), t), abs=1e-12)
    knots = r1.knots
    shifted = PLScoringRule(r1.breakpoints, r1.values + 0.3 * knots - 0.2)
    assert reg(shifted.to_bivariate(), t) == pytest.approx(reg(r1.to_bivariate(), t), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_cal_inequalities(seed):
    t = random_binary(np.random.default_rng(seed), 40)
    c, c2, T = cal_l1(t), cal_l2(t), t.T
    assert (c / T) ** 2 <= c2 / T + 1e-12 <= c / T + 2e-12


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(3, 5))
def test_multiclass_agent_bound(seed, K):
    rng = np.random.default_rng(seed)
    t = random_multiclass(rng, 40, K)
    u = random_agent(rng, 3, K=K)
    assert agent_reg(u, t) <= 2 * cal_l1_multiclass(t) + 1e-9


def test_vreg_at_edges():
    # with every forecast strictly inside (0, 1), forecaster and base rate
    # sit on the same side of an edge center and score identically
    rng = np.random.default_rng(11)
    for _ in range(20):
        t = random_binary(rng, 25, discrete=False)
        assert vreg(0.0, t) == pytest.approx(0.0, abs=1e-12)
        assert vreg(1.0, t) == pytest.approx(0.0, abs=1e-12)


def test_empty_transcript_rejected():
    with pytest.raises(TranscriptError):
        vreg(0.5, Transcript([], []))
