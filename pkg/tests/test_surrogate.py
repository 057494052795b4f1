import dataclasses
import io

import numpy as np
import pytest

from petalrisk.score2 import PatientRecord, RiskRegion, Sex, evaluate_score2
from petalrisk.surrogate import (
    CoefficientFileError,
    FACTOR_ORDER,
    GscSpec,
    NormalizedFactors,
    ScenarioKind,
    SurrogateModel,
    WhatIfScenario,
    applicable_scenarios,
    bin_index,
    bin_midpoint,
    contributions,
    default_gsc_spec,
    denormalize,
    denormalize_factor,
    dump_surrogate_models,
    fit_no_intercept,
    gsc_cell_patient,
    gsc_surrogate,
    load_surrogate_models,
    normalize,
    predict,
    quantized_surrogate,
    risk_reduction,
)
from tests.test_score2 import random_patients

MODERATE = RiskRegion.MODERATE


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def test_normalize_range_endpoints():
    young = PatientRecord(45.0, Sex.MALE, False, 100.0, 4.5, 1.5)
    old = PatientRecord(70.0, Sex.MALE, True, 180.0, 8.5, 1.5)
    z_young, z_old = normalize(young), normalize(old)
    assert z_young.age == 0.0 and z_old.age == 1.0
    assert z_young.sbp == 0.0 and z_old.sbp == 1.0
    assert z_young.nonhdl == 0.0 and z_old.nonhdl == 1.0
    assert z_young.smoking == 0.0 and z_old.smoking == 1.0


def test_normalize_sbp_midpoint():
    p = PatientRecord(50.0, Sex.FEMALE, False, 140.0, 5.0, 1.0)
    assert normalize(p).sbp == 0.5


def test_normalized_factors_invariants():
    with pytest.raises(ValueError):
        NormalizedFactors(age=-0.1, sbp=0.5, smoking=0.0, nonhdl=0.5)
    with pytest.raises(ValueError):
        NormalizedFactors(age=0.1, sbp=0.5, smoking=0.4, nonhdl=0.5)


def test_denormalize_examples():
    z = NormalizedFactors(age=1.0, sbp=0.25, smoking=0.0, nonhdl=0.5)
    raw = denormalize(z)
    assert raw["age"] == 70.0
    assert raw["sbp"] == 120.0
    assert raw["nonhdl"] == 5.0
    assert denormalize_factor("sbp", 0.25) == 120.0
    assert denormalize_factor("age", 1.0) == 70.0


def test_normalize_denormalize_roundtrip():
    rng = np.random.default_rng(8)
    for _ in range(200):
        z = NormalizedFactors(
            age=float(rng.uniform(0, 1)),
            sbp=float(rng.uniform(0, 1)),
            smoking=float(rng.integers(0, 2)),
            nonhdl=float(rng.uniform(0, 1)),
        )
        raw = denormalize(z)
        p = PatientRecord(
            age=raw["age"],
            sex=Sex.MALE,
            smoking=raw["smoking"] == 1.0,
            sbp=raw["sbp"],
            total_chol=raw["nonhdl"] + 1.2,
            hdl_chol=1.2,
        )
        back = normalize(p)
        for a, b in zip(z.as_tuple(), back.as_tuple()):
            assert a == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _random_design(rng, rows):
    z = rng.uniform(0.0, 1.0, size=(rows, 4))
    z[:, 2] = rng.integers(0, 2, size=rows)
    # ensure both smoking values appear so the column is not degenerate
    z[0, 2], z[1, 2] = 0.0, 1.0
    return z


def test_fit_recovers_exact_linear_model():
    rng = np.random.default_rng(2)
    truth = np.array([0.09, 0.05, 0.04, 0.02])
    z = _random_design(rng, 40)
    model = fit_no_intercept(z, z @ truth, Sex.MALE)
    assert model.provenance == "fitted"
    for got, want in zip(model.alphas, truth):
        assert got == pytest.approx(want, abs=1e-10)


def test_fit_matches_independent_least_squares_solver():
    rng = np.random.default_rng(4)
    z = _random_design(rng, 6)
    y = rng.uniform(0.0, 0.3, size=6)
    model = fit_no_intercept(z, y, Sex.FEMALE)
    reference, *_ = np.linalg.lstsq(z, y, rcond=None)  # SVD route
    for got, want in zip(model.alphas, reference):
        assert got == pytest.approx(want, abs=1e-10)


def test_fit_accepts_normalized_factor_rows():
    rows = [
        NormalizedFactors(0.1, 0.2, 0.0, 0.3),
        NormalizedFactors(0.9, 0.4, 1.0, 0.1),
        NormalizedFactors(0.5, 0.8, 0.0, 0.9),
        NormalizedFactors(0.3, 0.1, 1.0, 0.7),
        NormalizedFactors(0.7, 0.6, 0.0, 0.2),
    ]
    targets = [0.05, 0.15, 0.12, 0.10, 0.08]
    model = fit_no_intercept(rows, targets, Sex.MALE)
    z = np.array([r.as_tuple() for r in rows])
    reference, *_ = np.linalg.lstsq(z, np.array(targets), rcond=None)
    for got, want in zip(model.alphas, reference):
        assert got == pytest.approx(want, abs=1e-10)


def test_fit_rejects_degenerate_input():
    rng = np.random.default_rng(5)
    with pytest.raises(ValueError, match="at least 4"):
        fit_no_intercept(rng.uniform(size=(3, 4)), [0.1, 0.2, 0.3], Sex.MALE)
    rank_deficient = rng.uniform(size=(10, 4))
    rank_deficient[:, 3] = 2.0 * rank_deficient[:, 0]
    with pytest.raises(ValueError, match="rank"):
        fit_no_intercept(rank_deficient, rng.uniform(size=10), Sex.MALE)
    with pytest.raises(ValueError):
        fit_no_intercept([], [], Sex.MALE)


def test_fit_is_local_optimum():
    rng = np.random.default_rng(6)
    z = _random_design(rng, 60)
    y = z @ np.array([0.08, 0.06, 0.03, 0.02]) + rng.normal(0.0, 0.01, size=60)
    model = fit_no_intercept(z, y, Sex.MALE)
    alphas = np.array(model.alphas)
    best = float(np.sum((z @ alphas - y) ** 2))
    for i in range(4):
        for sign in (-1.0, 1.0):
            perturbed = alphas.copy()
            perturbed[i] += sign * 1e-3
            assert float(np.sum((z @ perturbed - y) ** 2)) >= best


# ---------------------------------------------------------------------------
# Prediction and contributions
# ---------------------------------------------------------------------------

def test_predict_no_intercept_zero(male_model):
    z = NormalizedFactors(0.0, 0.0, 0.0, 0.0)
    assert predict(male_model, z) == 0.0


def test_predict_published_values(male_model, female_model):
    top = NormalizedFactors(1.0, 1.0, 1.0, 1.0)
    age_only = NormalizedFactors(1.0, 0.0, 0.0, 0.0)
    assert predict(female_model, age_only) == pytest.approx(0.060, abs=1e-12)
    assert predict(male_model, top) == pytest.approx(0.204, abs=1e-12)


def test_contributions_reference_values(male_model):
    z = NormalizedFactors(0.5, 0.0, 1.0, 0.0)
    contrib = contributions(male_model, z)
    assert contrib[0] == pytest.approx(0.0435, abs=1e-12)
    assert contrib[1] == 0.0
    assert contrib[2] == pytest.approx(0.037, abs=1e-12)
    assert contrib[3] == 0.0


def test_contributions_sum_exactly_to_prediction(male_model, female_model):
    rng = np.random.default_rng(7)
    for model in (male_model, female_model):
        for _ in range(100):
            z = NormalizedFactors(
                age=float(rng.uniform(0, 1)),
                sbp=float(rng.uniform(0, 1)),
                smoking=float(rng.integers(0, 2)),
                nonhdl=float(rng.uniform(0, 1)),
            )
            assert sum(contributions(model, z)) == predict(model, z)
    assert contributions(male_model, NormalizedFactors(0, 0, 0, 0)) == (0, 0, 0, 0)


def test_quantized_surrogate_published_models(male_model, female_model):
    q_male = quantized_surrogate(male_model, 10)
    q_female = quantized_surrogate(female_model, 11)
    assert q_male.provenance == "quantized"
    for got, published in zip(q_male.alphas, (0.082, 0.061, 0.041, 0.020)):
        assert abs(got - published) < 0.0005
    for got, published in zip(q_female.alphas, (0.057, 0.034, 0.023, 0.011)):
        assert abs(got - published) < 0.0005


def test_negative_alphas_flagged():
    model = SurrogateModel(Sex.MALE, (0.1, -0.01, 0.02, 0.0), "fitted")
    assert model.has_negative_alphas


# ---------------------------------------------------------------------------
# Graphical score chart surrogate
# ---------------------------------------------------------------------------

def test_bin_edges_follow_right_open_rule():
    spec = default_gsc_spec()
    assert bin_index(spec.age_edges, 47.0) == 0
    assert bin_midpoint(spec.age_edges, 0) == 47.5
    assert bin_index(spec.sbp_edges, 140.0) == 2  # [140, 160)
    assert bin_midpoint(spec.sbp_edges, 2) == 150.0
    assert bin_index(spec.sbp_edges, 180.0) == 3  # top bin closed
    assert bin_index(spec.age_edges, 70.0) == 4
    with pytest.raises(ValueError):
        bin_index(spec.sbp_edges, 181.0)


def test_gsc_spec_must_tile_ranges():
    with pytest.raises(ValueError):
        GscSpec(
            age_edges=(45.0, 50.0, 55.0, 60.0, 65.0),  # stops short of 70
            sbp_edges=(100.0, 120.0, 140.0, 160.0, 180.0),
            nonhdl_edges=(3.0, 4.0, 5.0, 6.0, 7.0),
        )


def test_gsc_equals_score2_at_midpoint_patient(bundle):
    for p in random_patients(30, seed=13):
        got = gsc_surrogate(p, bundle, MODERATE)
        spec = default_gsc_spec()
        cell = gsc_cell_patient(
            p.sex,
            p.smoking,
            bin_midpoint(spec.age_edges, bin_index(spec.age_edges, p.age)),
            bin_midpoint(spec.sbp_edges, bin_index(spec.sbp_edges, p.sbp)),
            bin_midpoint(spec.nonhdl_edges, bin_index(spec.nonhdl_edges, p.non_hdl)),
        )
        assert got == evaluate_score2(cell, bundle, MODERATE)


def test_gsc_piecewise_constant_within_cell(bundle):
    a = PatientRecord(46.0, Sex.MALE, True, 141.0, 5.5, 1.0)  # non-HDL 4.5
    b = PatientRecord(49.9, Sex.MALE, True, 159.9, 6.9, 2.2)  # non-HDL 4.7
    assert gsc_surrogate(a, bundle, MODERATE) == gsc_surrogate(b, bundle, MODERATE)
    c = PatientRecord(50.0, Sex.MALE, True, 141.0, 5.5, 1.0)  # next age bin
    assert gsc_surrogate(c, bundle, MODERATE) != gsc_surrogate(a, bundle, MODERATE)


# ---------------------------------------------------------------------------
# What-if scenarios
# ---------------------------------------------------------------------------

def test_scenarios_high_sbp_smoker_high_chol():
    p = PatientRecord(60.0, Sex.MALE, True, 150.0, 6.0, 1.5)  # non-HDL 4.5
    kinds = [s.kind for s in applicable_scenarios(p)]
    assert kinds == [ScenarioKind.SBP_TO_130, ScenarioKind.STOP_SMOKING, ScenarioKind.NONHDL_TO_3_4]


def test_scenarios_moderate_sbp_only():
    p = PatientRecord(60.0, Sex.FEMALE, False, 125.0, 5.0, 1.2)  # non-HDL 3.8
    scenarios = applicable_scenarios(p)
    assert [s.kind for s in scenarios] == [ScenarioKind.SBP_TO_110]
    assert scenarios[0].modified_patient.sbp == 110.0


def test_scenarios_none_apply():
    p = PatientRecord(60.0, Sex.FEMALE, False, 110.0, 4.0, 0.8)  # non-HDL 3.2
    assert applicable_scenarios(p) == []


def test_scenarios_boundaries():
    at_140 = PatientRecord(60.0, Sex.MALE, False, 140.0, 5.0, 1.5)
    assert [s.kind for s in applicable_scenarios(at_140)][0] is ScenarioKind.SBP_TO_130
    at_120 = PatientRecord(60.0, Sex.MALE, False, 120.0, 5.0, 1.5)
    assert [s.kind for s in applicable_scenarios(at_120)][0] is ScenarioKind.SBP_TO_110
    just_under = PatientRecord(60.0, Sex.MALE, False, 119.9, 5.0, 1.5)
    assert all(
        s.kind not in (ScenarioKind.SBP_TO_130, ScenarioKind.SBP_TO_110)
        for s in applicable_scenarios(just_under)
    )
    nonhdl_at_4 = PatientRecord(60.0, Sex.MALE, False, 110.0, 5.5, 1.5)  # exactly 4
    assert applicable_scenarios(nonhdl_at_4) == []


def test_scenarios_change_exactly_one_factor():
    p = PatientRecord(60.0, Sex.MALE, True, 150.0, 6.0, 1.5)
    for scenario in applicable_scenarios(p):
        changed = [
            name
            for name in ("age", "sex", "smoking", "sbp", "total_chol", "hdl_chol")
            if getattr(scenario.modified_patient, name) != getattr(p, name)
        ]
        assert len(changed) == 1


def test_nonhdl_scenario_moves_total_keeps_hdl():
    p = PatientRecord(60.0, Sex.MALE, False, 110.0, 6.0, 1.5)
    scenario = applicable_scenarios(p)[0]
    assert scenario.kind is ScenarioKind.NONHDL_TO_3_4
    assert scenario.modified_patient.hdl_chol == 1.5
    assert scenario.modified_patient.non_hdl == pytest.approx(3.4, abs=1e-12)


def test_risk_reduction_stop_smoking_delta(male_model):
    p = PatientRecord(60.0, Sex.MALE, True, 110.0, 5.0, 1.5)
    scenario = [s for s in applicable_scenarios(p) if s.kind is ScenarioKind.STOP_SMOKING][0]
    change = risk_reduction(p, scenario, male_model)
    assert change.delta == pytest.approx(0.037, abs=1e-12)


def test_risk_reduction_sbp_delta_is_coefficient_times_shift(male_model):
    p = PatientRecord(60.0, Sex.MALE, False, 160.0, 5.0, 1.5)
    scenario = applicable_scenarios(p)[0]
    assert scenario.kind is ScenarioKind.SBP_TO_130
    change = risk_reduction(p, scenario, male_model)
    assert change.delta == pytest.approx(0.058 * (30.0 / 80.0), abs=1e-12)


def test_risk_reduction_identity_scenario_is_zero(male_model):
    p = PatientRecord(60.0, Sex.MALE, True, 110.0, 5.0, 1.5)
    unchanged = WhatIfScenario(ScenarioKind.STOP_SMOKING, "noop", p)
    assert risk_reduction(p, unchanged, male_model).delta == 0.0


def test_risk_reduction_through_score2(bundle):
    p = PatientRecord(60.0, Sex.FEMALE, True, 150.0, 6.0, 1.5)
    for scenario in applicable_scenarios(p):
        change = risk_reduction(p, scenario, bundle, region=MODERATE)
        assert change.delta > 0.0
        assert change.before == evaluate_score2(p, bundle, MODERATE)


def test_risk_reduction_rejects_inapplicable(male_model):
    p = PatientRecord(60.0, Sex.MALE, False, 110.0, 5.0, 1.5)
    foreign = WhatIfScenario(
        ScenarioKind.STOP_SMOKING, "stop", dataclasses.replace(p, smoking=False)
    )
    with pytest.raises(ValueError, match="apply"):
        risk_reduction(p, foreign, male_model)


def test_all_scenarios_non_negative_delta_under_non_negative_models():
    rng = np.random.default_rng(21)
    for _ in range(60):
        alphas = tuple(float(a) for a in rng.uniform(0.0, 0.1, size=4))
        model = SurrogateModel(Sex.MALE, alphas, "fitted")
        for p in random_patients(5, seed=int(rng.integers(1 << 30))):
            for scenario in applicable_scenarios(p):
                assert risk_reduction(p, scenario, model).delta >= 0.0


# ---------------------------------------------------------------------------
# Model file round-trip
# ---------------------------------------------------------------------------

def test_model_file_roundtrip(male_model, female_model):
    text = dump_surrogate_models(
        {Sex.MALE: male_model, Sex.FEMALE: female_model}, "round-trip test"
    )
    loaded = load_surrogate_models(io.BytesIO(text.encode()))
    assert loaded[Sex.MALE].alphas == male_model.alphas
    assert loaded[Sex.FEMALE].alphas == female_model.alphas
    assert loaded[Sex.MALE].provenance == "transcribed"


def test_model_file_requires_provenance(male_model):
    text = dump_surrogate_models({Sex.MALE: male_model}, "x").replace(
        'provenance = "x"\n', "", 1
    )
    with pytest.raises(CoefficientFileError, match="provenance"):
        load_surrogate_models(io.BytesIO(text.encode()))


def test_bundled_models_match_published(surrogates):
    assert surrogates[Sex.MALE].alphas == (0.087, 0.058, 0.037, 0.022)
    assert surrogates[Sex.FEMALE].alphas == (0.060, 0.037, 0.025, 0.004)
