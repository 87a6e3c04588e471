import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ucal.agents import UtilityMatrix, wager_agent
from ucal.scoring import (
    PLScoringRule,
    ProperCertificate,
    ProperViolation,
    ScoringRuleError,
    VShapedRule,
    agent_to_rule,
    bivariate_from_univariate,
    brier,
    check_properness,
    multiclass_brier,
    negated_brier,
    per_outcome_rule_family,
    properness_margin,
    random_pl_rule,
    rule_from_json,
    rule_to_agent,
    separable_rule,
    v_decompose,
)

GRID = np.linspace(0, 1, 11)
FINE = np.linspace(0, 1, 101)


def brier_pl(n=100):
    return PLScoringRule.from_function(lambda p: p * (1 - p), n_segments=n)


# -- construction ------------------------------------------------------------


def test_rejects_convex_form():
    with pytest.raises(ScoringRuleError, match="not concave"):
        PLScoringRule([0.5], [0.0, -1.0, 0.0])


def test_rejects_bad_breakpoints():
    with pytest.raises(ScoringRuleError):
        PLScoringRule([0.0], [0, 0, 0])
    with pytest.raises(ScoringRuleError):
        PLScoringRule([0.6, 0.4], [0, 0, 0, 0])
    with pytest.raises(ScoringRuleError):
        PLScoringRule([0.5], [0, 0])


def test_vshape_center_range():
    with pytest.raises(ScoringRuleError):
        VShapedRule(1.5)


# -- bivariate form ----------------------------------------------------------


def test_brier_pl_matches_squares_on_grid():
    r = brier_pl(100)
    p = r.breakpoints  # the averaged slope is the central difference, exact for a quadratic
    assert np.allclose(r.bivariate(p, 0), p**2, atol=1e-12)
    assert np.allclose(r.bivariate(p, 1), (1 - p) ** 2, atol=1e-12)


def test_linear_zero_rule():
    r = PLScoringRule([], [0.0, 0.0])
    assert np.all(r.bivariate(FINE, 0) == 0) and np.all(r.bivariate(FINE, 1) == 0)


def test_vshape_hand_values():
    v = VShapedRule(0.3)
    assert v.bivariate(0.7, 0) == pytest.approx(0.3)
    assert v.bivariate(0.1, 1) == pytest.approx(0.7)
    assert v.bivariate(0.3, 0) == 0 and v.bivariate(0.3, 1) == 0


def test_vshape_pl_form_agrees_with_sign_formula():
    for v in (0.0, 0.25, 0.5, 0.9, 1.0):
        vs = VShapedRule(v)
        pl = vs.to_pl()
        # an edge center has no breakpoint, so only the point p = v itself differs
        p = FINE[FINE != v] if v in (0.0, 1.0) else FINE
        for x in (0, 1):
            assert np.allclose(pl.bivariate(p, x), vs.bivariate(p, x), atol=1e-12)


def test_breakpoint_uses_average_slope():
    r = PLScoringRule([0.5], [0.0, 0.5, 0.0])  # slopes +1, -1
    assert r.subgradient(0.5)[0] == 0.0
    assert r.bivariate(0.5, 1)[0] == pytest.approx(0.5)


# -- properness --------------------------------------------------------------


def test_brier_is_proper():
    assert isinstance(check_properness(brier(), GRID), ProperCertificate)


def test_negated_brier_counterexample():
    res = check_properness(negated_brier(), GRID)
    assert isinstance(res, ProperViolation) and not res
    # reporting 0 when the truth is 1/2 beats honesty under the negated rule
    assert properness_margin(negated_brier(), 0.5, 0.0) == pytest.approx(0.25)


def test_vshape_is_proper():
    assert check_properness(VShapedRule(0.5).to_bivariate(), GRID)


def test_multiclass_brier_is_proper():
    rng = np.random.default_rng(0)
    assert check_properness(multiclass_brier(3), rng.dirichlet(np.ones(3), size=40))


# -- decomposition -----------------------------------------------------------


def test_decompose_vshape():
    d = v_decompose(VShapedRule(0.3).to_pl())
    assert list(d.centers) == [0.3]
    assert list(d.weights) == [1.0]
    assert d.C1 == pytest.approx(0.0) and d.C0 == pytest.approx(0.0)


def test_decompose_linear():
    d = v_decompose(PLScoringRule([], [0.2, -0.4]))
    assert d.centers.size == 0 and d.total_weight == 0


def test_decompose_tent():
    r = PLScoringRule.from_slopes([1 / 3, 2 / 3], [2.0, 0.0, -2.0])
    d = v_decompose(r)
    assert np.allclose(d.weights, [1.0, 1.0]) and d.total_weight == pytest.approx(2.0)


# -- agents and rules --------------------------------------------------------


def test_wager_rule_kink_at_threshold():
    # min of two lines p - 0.1 and 0.1 - p
    rule = agent_to_rule(wager_agent())
    assert np.allclose(rule.univariate(FINE), -np.abs(FINE - 0.1), atol=1e-12)


def test_single_action_agent_rule_is_constant_per_outcome():
    rule = agent_to_rule(UtilityMatrix([[0.3, -0.2]]))
    assert np.allclose(rule(FINE, 0), -0.3) and np.allclose(rule(FINE, 1), 0.2)


def test_vshape_agent_switches_at_center():
    agent = rule_to_agent(VShapedRule(0.3).to_pl())
    rule = agent_to_rule(agent)
    assert np.allclose(rule.univariate(FINE), VShapedRule(0.3).univariate(FINE), atol=1e-12)


def test_rule_from_json():
    assert rule_from_json({"kind": "brier"})(0.2, 1) == pytest.approx(0.64)
    assert rule_from_json({"kind": "vshape", "v": 0.3})(0.7, 0) == pytest.approx(0.3)
    pl = rule_from_json(VShapedRule(0.4).to_pl().to_json())
    assert pl(0.1, 1) == pytest.approx(0.6)
    with pytest.raises(ScoringRuleError):
        rule_from_json({"kind": "log"})


def test_separable_rule_binary_and_multiclass():
    fam3 = per_outcome_rule_family(3)
    assert len(fam3) == 10
    P = np.array([[0.2, 0.3, 0.5]])
    assert fam3["v0.5"](P, 2) == pytest.approx(np.mean([VShapedRule(0.5).bivariate(p, int(i == 2)) for i, p in enumerate(P[0])]))
    s2 = separable_rule([VShapedRule(0.5).to_pl()] * 2)
    assert s2(0.3, 1) == pytest.approx(0.5 * (VShapedRule(0.5).bivariate(0.7, 0) + VShapedRule(0.5).bivariate(0.3, 1)))


# -- properties --------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_random_rules_bounded_and_monotone(seed):
    r = random_pl_rule(np.random.default_rng(seed))
    s0, s1 = r.bivariate(FINE, 0), r.bivariate(FINE, 1)
    assert np.all(np.abs(s0) <= 1 + 1e-12) and np.all(np.abs(s1) <= 1 + 1e-12)
    assert np.all(np.abs(r.slopes) <= 2 + 1e-12)
    assert np.all(np.diff(s0) >= -1e-12) and np.all(np.diff(s1) <= 1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_random_rules_are_proper(seed):
    r = random_pl_rule(np.random.default_rng(seed))
    assert check_properness(bivariate_from_univariate(r), FINE)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_decomposition_round_trip(seed):
    r = random_pl_rule(np.random.default_rng(seed))
    d = v_decompose(r)
    probe = np.union1d(FINE, np.concatenate([r.knots, 0.5 * (r.knots[1:] + r.knots[:-1])]))
    assert np.max(np.abs(d.univariate(probe) - r.univariate(probe))) <= 1e-12
    assert d.total_weight <= 2 + 1e-12
    assert np.all(d.weights >= 0)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_agent_rule_round_trip(seed):
    r = random_pl_rule(np.random.default_rng(seed))
    back = agent_to_rule(rule_to_agent(r))
    assert np.max(np.abs(back.univariate(FINE) - r.univariate(FINE))) <= 1e-12
