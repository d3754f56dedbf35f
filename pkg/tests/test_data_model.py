"""
Tests for survey datasets, CATE draws, CSV ingestion and synthetic populations.
"""

import numpy as np
import pandas as pd
import pytest

from ingestion.load_cate_draws import load_cate_draws, write_cate_matrix_csv
from ingestion.load_survey import (
    filter_dataset,
    load_population_csv,
    load_survey_csv,
    population_schema,
    write_population_csv,
    write_survey_csv,
)
from ingestion.synthetic_population import (
    PopulationSpec,
    SpecError,
    categorical_covariates,
    generate_synthetic_population,
    informative_spec,
)
from models.draws import AlignmentError, CateDraws, DrawsValidationError
from models.survey import SchemaError, SurveyDataset, SurveySchema, SurveyValidationError, validate_survey

SCHEMA = SurveySchema(stratum_column="stratum", cluster_column="cluster", weight_column="weight", id_column="id")


class TestSurveyDataset:

    def test_cluster_structure(self, small_survey):
        assert small_survey.n_obs == 10
        assert small_survey.n_clusters == 5
        assert small_survey.n_strata == 2
        assert small_survey.cluster_keys[0] == ("A", "a1")
        np.testing.assert_array_equal(small_survey.cluster_sizes(), [2, 2, 1, 3, 2])
        np.testing.assert_allclose(small_survey.cluster_weight_totals(), [2.5, 4.0, 3.0, 4.5, 4.5])
        np.testing.assert_array_equal(small_survey.clusters_per_stratum(), [3, 2])

    def test_cluster_crossing_strata_is_rejected(self):
        with pytest.raises(SurveyValidationError) as exc:
            SurveyDataset.from_arrays(strata=["A", "B"], clusters=["c1", "c1"], weights=[1.0, 1.0])
        assert any("crosses strata" in e for e in exc.value.report.errors)

    def test_nested_cluster_labels_are_disambiguated(self):
        ds = SurveyDataset.from_arrays(strata=["A", "B"], clusters=["c1", "c1"], weights=[1.0, 1.0],
                                       clusters_nested=True)
        assert ds.n_clusters == 2
        assert ds.cluster_keys == (("A", "c1"), ("B", "c1"))

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
    def test_weights_must_be_positive_and_finite(self, bad):
        with pytest.raises(SurveyValidationError) as exc:
            SurveyDataset.from_arrays(strata=["A", "A"], clusters=["c1", "c2"], weights=[1.0, bad])
        assert "row 2" in exc.value.report.errors[0]

    def test_missing_covariate_reported_by_row(self):
        with pytest.raises(SurveyValidationError) as exc:
            SurveyDataset.from_arrays(strata=["A", "A"], clusters=["c1", "c2"], weights=[1.0, 1.0],
                                      covariates=pd.DataFrame({"age": [20.0, np.nan]}))
        assert "row 2" in exc.value.report.errors[0]

    def test_duplicate_ids_rejected(self):
        with pytest.raises(SurveyValidationError):
            SurveyDataset.from_arrays(strata=["A", "A"], clusters=["c1", "c2"], weights=[1.0, 1.0], ids=["x", "x"])

    def test_single_cluster_stratum_is_a_warning(self):
        report = validate_survey(np.array(["A", "A", "B"], dtype=object), np.array(["a1", "a2", "b1"], dtype=object),
                                 np.ones(3), pd.DataFrame(index=range(3)))
        assert report.ok
        assert report.warnings == ["stratum 'B' has a single cluster"]
        assert report.summary["A"] == {"n_obs": 2, "n_clusters": 2}

    def test_subset_drops_empty_clusters(self, small_survey):
        sub = small_survey.subset(small_survey.column("urban") == 1.0)
        assert sub.n_obs == 5
        assert ("A", "a2") not in sub.cluster_keys
        np.testing.assert_allclose(sub.cluster_weight_totals(), [2.5, 3.0, 2.5, 4.0])

    def test_filter_dataset_by_label(self, small_survey):
        sub, mask = filter_dataset(small_survey, "segment", ["s1"])
        assert sub.n_obs == int(mask.sum()) == 5
        assert set(sub.labels("segment")) == {"s1"}
        with pytest.raises(SurveyValidationError):
            filter_dataset(small_survey, "segment", ["nope"])


class TestSurveyCsv:

    def test_round_trip_is_exact(self, small_survey, tmp_path):
        path = write_survey_csv(small_survey, tmp_path / "survey.csv", SCHEMA)
        loaded = load_survey_csv(path, SCHEMA)
        assert loaded.equals(small_survey)
        assert list(loaded.ids) == list(small_survey.ids)

    def test_missing_design_column(self, tmp_path):
        path = tmp_path / "survey.csv"
        path.write_text("id,stratum,weight\n1,A,1.0\n", encoding="utf-8")
        with pytest.raises(SchemaError, match="cluster"):
            load_survey_csv(path, SCHEMA)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_survey_csv(tmp_path / "absent.csv", SCHEMA)

    def test_outcome_column_parsed_as_real(self, tmp_path):
        path = tmp_path / "survey.csv"
        path.write_text("id,stratum,cluster,weight,y,region\n1,A,a1,2.5,0.25,north\n2,A,a2,1.5,1e-3,south\n",
                        encoding="utf-8")
        schema = SCHEMA.model_copy(update={"outcome_column": "y"})
        ds = load_survey_csv(path, schema)
        np.testing.assert_array_equal(ds.outcome, [0.25, 0.001])
        assert ds.covariates["region"].tolist() == ["north", "south"]


class TestCateDraws:

    def test_entries_outside_unit_interval_warn(self, small_survey):
        draws = CateDraws(draws=np.full((2, 10), 1.5), ids=small_survey.ids)
        assert draws.warnings == ["20 draw entries lie outside [-1, 1]"]

    def test_non_finite_entries_rejected(self, small_survey):
        matrix = np.zeros((2, 10))
        matrix[1, 3] = np.nan
        with pytest.raises(DrawsValidationError, match="observation 'o4'"):
            CateDraws(draws=matrix, ids=small_survey.ids)

    def test_column_count_must_match(self, small_survey):
        draws = CateDraws(draws=np.zeros((2, 9)), ids=small_survey.ids[:9])
        with pytest.raises(AlignmentError):
            draws.check_aligned(small_survey)

    def test_matrix_file_is_aligned_to_dataset_order(self, small_survey, tmp_path):
        rng = np.random.default_rng(3)
        draws = CateDraws(draws=rng.uniform(-1, 1, size=(4, 10)), ids=small_survey.ids)
        frame = pd.DataFrame(draws.draws, columns=list(draws.ids))
        shuffled = frame[list(reversed(frame.columns))]
        shuffled.insert(0, "draw_id", ["1", "2", "3", "4"])
        path = tmp_path / "draws.csv"
        shuffled.to_csv(path, index=False)
        loaded = load_cate_draws(path, small_survey)
        np.testing.assert_array_equal(loaded.draws, draws.draws)

        write_cate_matrix_csv(draws, tmp_path / "again.csv")
        np.testing.assert_array_equal(load_cate_draws(tmp_path / "again.csv", small_survey).draws, draws.draws)

    def test_matrix_with_unknown_ids(self, small_survey, tmp_path):
        path = tmp_path / "draws.csv"
        path.write_text("draw_id,o1,zz\n1,0.1,0.2\n", encoding="utf-8")
        with pytest.raises(AlignmentError, match="missing ids"):
            load_cate_draws(path, small_survey)

    def test_segment_file_expands_to_observations(self, small_survey, tmp_path):
        path = tmp_path / "segments.csv"
        path.write_text("segment,draw_id,value\ns1,1,0.1\ns1,2,0.2\ns2,1,-0.3\ns2,2,0.4\n", encoding="utf-8")
        loaded = load_cate_draws(path, small_survey, segment_column="segment")
        assert loaded.draws.shape == (2, 10)
        np.testing.assert_array_equal(loaded.draws[:, 0], [0.1, 0.2])
        np.testing.assert_array_equal(loaded.draws[:, 1], [-0.3, 0.4])

    def test_segment_file_needs_segment_column(self, small_survey, tmp_path):
        path = tmp_path / "segments.csv"
        path.write_text("segment,draw_id,value\ns1,1,0.1\ns2,1,0.2\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_cate_draws(path, small_survey)

    def test_segment_without_draws(self, small_survey, tmp_path):
        path = tmp_path / "segments.csv"
        path.write_text("segment,draw_id,value\ns1,1,0.1\n", encoding="utf-8")
        with pytest.raises(AlignmentError, match="s2"):
            load_cate_draws(path, small_survey, segment_column="segment")

    def test_missing_draws_file_names_path(self, small_survey, tmp_path):
        with pytest.raises(FileNotFoundError, match="absent.csv"):
            load_cate_draws(tmp_path / "absent.csv", small_survey)


class TestSyntheticPopulation:

    def test_same_seed_same_population(self):
        spec = PopulationSpec(n_strata=2, clusters_per_stratum=5, seed=11)
        a = generate_synthetic_population(spec)
        b = generate_synthetic_population(spec)
        assert a.units.equals(b.units)
        np.testing.assert_array_equal(a.measure_of_size, b.measure_of_size)

    def test_different_seed_differs(self):
        a = generate_synthetic_population(PopulationSpec(n_strata=2, clusters_per_stratum=5, seed=1))
        b = generate_synthetic_population(PopulationSpec(n_strata=2, clusters_per_stratum=5, seed=2))
        assert not a.units.equals(b.units)

    def test_row_count_is_sum_of_cluster_sizes(self):
        pop = generate_synthetic_population(PopulationSpec(n_strata=3, clusters_per_stratum=[2, 4, 6],
                                                           cluster_size_range=(5, 9), seed=4))
        sizes = pop.units.cluster_sizes()
        assert pop.n_units == int(sizes.sum())
        assert sizes.min() >= 5 and sizes.max() <= 9
        np.testing.assert_array_equal(pop.units.clusters_per_stratum(), [2, 4, 6])
        # self-weighting population: measure of size is the head count
        np.testing.assert_array_equal(pop.measure_of_size, sizes)

    def test_informative_design_departs_from_head_counts(self):
        pop = generate_synthetic_population(informative_spec(seed=5, n_strata=2, clusters_per_stratum=10))
        assert not np.allclose(pop.measure_of_size, pop.units.cluster_sizes())
        ages = pop.units.column("age")
        assert ages.min() >= 15 and ages.max() <= 49

    @pytest.mark.parametrize("bad", [{"n_strata": 0}, {"cluster_size_range": (10, 5)},
                                     {"n_strata": 2, "clusters_per_stratum": [3]}])
    def test_invalid_spec(self, bad):
        with pytest.raises(SpecError):
            generate_synthetic_population(bad)

    def test_population_csv_round_trip(self, tmp_path):
        spec = PopulationSpec(n_strata=2, clusters_per_stratum=3, seed=9)
        pop = generate_synthetic_population(spec)
        schema = population_schema(categorical_covariates(spec))
        loaded = load_population_csv(write_population_csv(pop, tmp_path / "pop.csv", schema), schema)
        assert loaded.units.equals(pop.units)
        np.testing.assert_array_equal(loaded.measure_of_size, pop.measure_of_size)
        assert loaded.mean("age") == pop.mean("age")

    def test_population_mean_is_weighted_enumeration(self):
        pop = generate_synthetic_population(PopulationSpec(n_strata=1, clusters_per_stratum=4, seed=3))
        assert pop.mean("age") == pytest.approx(pop.units.column("age").mean(), abs=1e-12)
