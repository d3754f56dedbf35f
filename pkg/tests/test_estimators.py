"""
Tests for the naive and design-based (linearised) mean estimators.
"""

import numpy as np
import pandas as pd
import pytest

from bootstrap.pate import estimate_mean
from estimators.frequentist import DesignError, design_mean, linearized_variance, naive_mean
from ingestion.synthetic_population import PopulationSpec, generate_synthetic_population
from models.survey import SurveyDataset
from simulation.pps_sampling import SimulationDesign, draw_pps_two_stage


@pytest.fixture
def toy_design() -> SurveyDataset:
    return SurveyDataset.from_arrays(
        strata=["A", "A", "B", "B"],
        clusters=["a1", "a2", "b1", "b2"],
        weights=[2.0, 2.0, 1.0, 1.0],
        outcome=[1.0, 3.0, 2.0, 4.0],
        outcome_name="y",
    )


class TestDesignMean:

    def test_hajek_point_and_variance(self, toy_design):
        est = design_mean(toy_design)
        assert est.value == pytest.approx(7.0 / 3.0, abs=1e-12)
        assert est.std_error ** 2 == pytest.approx(5.0 / 9.0, abs=1e-12)
        assert est.method == "design"
        half = 1.959963984540054 * est.std_error
        assert est.ci_lower == pytest.approx(est.value - half, rel=1e-9)
        assert est.ci_upper == pytest.approx(est.value + half, rel=1e-9)

    def test_named_covariate(self, small_survey):
        est = design_mean(small_survey, "age")
        w = small_survey.weights
        expected = np.sum(w * small_survey.column("age")) / w.sum()
        assert est.value == pytest.approx(expected, abs=1e-12)
        assert est.std_error > 0

    def test_single_cluster_stratum_needs_certainty(self):
        ds = SurveyDataset.from_arrays(
            strata=["A", "A", "B"], clusters=["a1", "a2", "b1"], weights=[1.0, 1.0, 2.0],
            outcome=[1.0, 2.0, 5.0], outcome_name="y",
        )
        with pytest.raises(DesignError, match="certainty"):
            design_mean(ds)
        est = design_mean(ds, certainty=True)
        # stratum B adds nothing; stratum A: z = (-2.25, -1.25) / 4, n_h = 2
        assert est.std_error ** 2 == pytest.approx(2 * 2 * (0.25 / 2) ** 2, abs=1e-12)

    def test_constant_outcome_has_zero_variance(self, toy_design):
        ds = SurveyDataset.from_arrays(
            strata=list(toy_design.strata), clusters=list(toy_design.clusters),
            weights=list(toy_design.weights), outcome=[3.0] * 4, outcome_name="y",
        )
        assert linearized_variance(ds, ds.outcome, 3.0) == 0.0

    def test_non_numeric_column_and_missing_outcome(self):
        ds = SurveyDataset.from_arrays(
            strata=["A", "A"], clusters=["a1", "a2"], weights=[1.0, 1.0],
            covariates=pd.DataFrame({"x": ["low", "high"]}),
        )
        with pytest.raises(TypeError):
            design_mean(ds, "x")
        with pytest.raises(DesignError):
            design_mean(ds)


class TestNaiveMean:

    def test_ignores_weights_and_design(self, toy_design):
        est = naive_mean(toy_design)
        assert est.value == pytest.approx(2.5)
        assert est.std_error == pytest.approx(np.std([1, 3, 2, 4], ddof=1) / 2.0)
        assert est.method == "naive"

    def test_needs_two_observations(self):
        ds = SurveyDataset.from_arrays(strata=["A"], clusters=["a"], weights=[1.0], outcome=[1.0], outcome_name="y")
        with pytest.raises(DesignError):
            naive_mean(ds)


class TestBootstrapAgreesWithDesign:
    """On PPS samples the BB posterior sits close to the linearised estimate."""

    def test_twenty_samples(self):
        population = generate_synthetic_population(PopulationSpec(n_strata=3, clusters_per_stratum=40, seed=21))
        design = SimulationDesign(clusters_per_stratum=12, respondents_per_cluster=15)
        rng = np.random.default_rng(2024)

        close, ratios = 0, []
        for _ in range(20):
            sample = draw_pps_two_stage(population, design, rng)
            freq = design_mean(sample, "age")
            bb = estimate_mean(sample, "age", n_bb=1000, rng=rng)
            if abs(bb.mean - freq.value) <= 3 * bb.mc_standard_error():
                close += 1
            ratios.append(bb.sd / freq.std_error)

        assert close >= 19
        assert all(0.75 <= r <= 1.25 for r in ratios), ratios


class TestDesignMeanProperties:

    @pytest.mark.parametrize("seed", range(200))
    def test_weight_scale_invariance_and_range(self, seed, survey_factory):
        rng = np.random.default_rng(seed)
        ds = survey_factory(rng)
        est = design_mean(ds, "x", certainty=True)
        scaled = design_mean(ds.with_weights(ds.weights * rng.uniform(0.01, 100.0)), "x", certainty=True)
        assert scaled.value == pytest.approx(est.value, rel=1e-10, abs=1e-12)
        assert scaled.std_error == pytest.approx(est.std_error, rel=1e-8, abs=1e-12)
        x = ds.column("x")
        assert x.min() - 1e-12 <= est.value <= x.max() + 1e-12

    @pytest.mark.parametrize("seed", range(200))
    def test_one_cluster_per_unit_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 40))
        ds = SurveyDataset.from_arrays(
            strata=["A"] * n, clusters=[f"c{i}" for i in range(n)], weights=[float(rng.uniform(0.5, 9.0))] * n,
            outcome=rng.normal(size=n), outcome_name="y",
        )
        design, naive = design_mean(ds), naive_mean(ds)
        assert design.value == pytest.approx(naive.value, rel=1e-10, abs=1e-12)
        assert design.std_error == pytest.approx(naive.std_error, rel=1e-9, abs=1e-12)
