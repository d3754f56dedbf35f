"""
Tests for the bounded density-ratio LP, the confounder sweep and the shift bounds.
"""

import numpy as np
import pandas as pd
import pytest
from scipy.optimize import linprog

from bootstrap.pate import estimate_pate
from models.draws import CateDraws
from models.summaries import PosteriorSummary
from sensitivity.confounder import ConfounderSpec, clip_h, confounded_draws, pate_confounder_curve
from sensitivity.curves import CONFOUNDER_COLUMNS, SensitivityCurve, first_crossing
from sensitivity.distribution_shift import (
    ShiftSpec,
    SourceEffects,
    default_gamma_grid,
    load_source_effects,
    pate_shift_bounds,
)
from sensitivity.lp_bounds import SensitivityError, lp_bound_greedy, lp_bound_oracle


def _instance(rng):
    n = int(rng.integers(1, 9))
    tau = rng.normal(size=n)
    omega = rng.dirichlet(np.ones(n))
    gamma = float(rng.uniform(1.0, 6.0))
    return tau, omega, gamma


class TestClip:

    @pytest.mark.parametrize("x, expected", [(1.7, 1.0), (-3.0, -1.0), (0.25, 0.25), (1.0, 1.0)])
    def test_scalar(self, x, expected):
        assert clip_h(x) == expected

    def test_array(self):
        np.testing.assert_array_equal(clip_h(np.array([-2.0, 0.0, 2.0])), [-1.0, 0.0, 1.0])


class TestLPBounds:

    def test_greedy_matches_vertex_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            tau, omega, gamma = _instance(rng)
            for direction in ("min", "max"):
                got = lp_bound_greedy(tau, omega, gamma, direction).value
                assert got == pytest.approx(lp_bound_oracle(tau, omega, gamma, direction), abs=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_greedy_matches_linprog(self, seed):
        tau, omega, gamma = _instance(np.random.default_rng(seed))
        bounds = list(zip(omega / gamma, omega * gamma))
        res = linprog(-tau, A_eq=np.ones((1, tau.size)), b_eq=[1.0], bounds=bounds, method="highs")
        assert res.status == 0
        assert lp_bound_greedy(tau, omega, gamma, "max").value == pytest.approx(-res.fun, abs=1e-8)

    def test_solution_is_feasible(self):
        tau, omega, gamma = np.array([0.3, -0.1, 0.8, 0.5]), np.array([0.1, 0.4, 0.2, 0.3]), 2.5
        bound = lp_bound_greedy(tau, omega, gamma, "max")
        assert np.all(bound.z >= 1 / gamma - 1e-12) and np.all(bound.z <= gamma + 1e-12)
        assert np.dot(omega, bound.z) == pytest.approx(1.0, abs=1e-12)
        assert bound.value == pytest.approx(np.dot(omega * bound.z, tau), abs=1e-12)

    def test_gamma_one_is_the_weighted_average(self):
        tau, omega = np.array([0.2, 0.6, -0.4]), np.array([0.5, 0.25, 0.25])
        for direction in ("min", "max"):
            assert lp_bound_greedy(tau, omega, 1.0, direction).value == pytest.approx(np.dot(omega, tau))

    def test_top_unit_absorbs_the_free_mass(self):
        # the largest effect sits on the smallest base weight; at gamma = 1 / min(omega) its cap reaches 1
        tau, omega = np.array([2.0, 1.0, -1.0]), np.array([0.1, 0.3, 0.6])
        gamma = 1.0 / omega.min()
        bound = lp_bound_greedy(tau, omega, gamma, "max")
        np.testing.assert_allclose(bound.z[1:], 1.0 / gamma, atol=1e-12)
        floor = omega[1:] / gamma
        assert omega[0] * bound.z[0] == pytest.approx(1.0 - floor.sum(), abs=1e-12)
        assert bound.value == pytest.approx(tau[0] - np.dot(floor, tau[0] - tau[1:]), abs=1e-9)
        assert bound.value == pytest.approx(lp_bound_oracle(tau, omega, gamma, "max"), abs=1e-9)

    def test_single_unit_bound_is_its_effect(self):
        # gamma = 1 / min(omega) = 1; the one unit carries all the mass
        bound = lp_bound_greedy([0.7], [1.0], 1.0, "max")
        assert bound.value == pytest.approx(0.7, abs=1e-9)

    def test_bounds_widen_with_gamma(self):
        rng = np.random.default_rng(3)
        tau, omega = rng.normal(size=10), rng.dirichlet(np.ones(10))
        grid = default_gamma_grid()
        upper = [lp_bound_greedy(tau, omega, g, "max").value for g in grid]
        lower = [lp_bound_greedy(tau, omega, g, "min").value for g in grid]
        assert np.all(np.diff(upper) >= -1e-12)
        assert np.all(np.diff(lower) <= 1e-12)

    @pytest.mark.parametrize("tau, omega, gamma, direction", [
        ([0.1, 0.2], [0.5, 0.5], 0.5, "max"),
        ([0.1, 0.2], [0.5, 0.6], 2.0, "max"),
        ([0.1, np.nan], [0.5, 0.5], 2.0, "max"),
        ([0.1, 0.2], [0.5, 0.5], 2.0, "mid"),
        ([], [], 2.0, "max"),
    ])
    def test_invalid_inputs(self, tau, omega, gamma, direction):
        with pytest.raises(SensitivityError):
            lp_bound_greedy(tau, omega, gamma, direction)


class TestConfounderSweep:

    def test_zero_prevalence_reproduces_pate(self, small_survey):
        rng = np.random.default_rng(1)
        cate = CateDraws(draws=rng.uniform(-0.9, 0.9, (30, 10)), ids=small_survey.ids)
        curve = pate_confounder_curve(small_survey, cate, n_bb=200, rng=77)
        plain = estimate_pate(small_survey, cate, n_bb=200, rng=77)
        np.testing.assert_array_equal(curve.summaries[0].draws, plain.draws)
        np.testing.assert_array_equal(curve.baseline.draws, plain.draws)
        assert len(curve) == 11

    def test_negative_modifier_lowers_the_curve(self, small_survey):
        rng = np.random.default_rng(2)
        cate = CateDraws(draws=rng.uniform(0.0, 0.9, (30, 10)), ids=small_survey.ids)
        curve = pate_confounder_curve(small_survey, cate, n_bb=200, rng=5)
        means = np.array([s.mean for s in curve.summaries])
        assert np.all(np.diff(means) <= 1e-12)

    def test_positive_modifier_saturates_at_one(self):
        draws = np.array([[0.9, 0.5]])
        np.testing.assert_allclose(confounded_draws(draws, 1.0, 0.66, 1), [[1.0, 1.0]])
        np.testing.assert_allclose(confounded_draws(draws, 0.5, 0.66, 1), [[0.95, 0.75]])

    @pytest.mark.parametrize("spec", [{"kappa": float("nan")}, {"xi_grid": [0.0, 1.5]}, {"xi_grid": [0.5, 0.2]},
                                      {"xi_grid": []}, {"sign": 0}])
    def test_invalid_spec(self, small_survey, spec):
        cate = CateDraws(draws=np.zeros((1, 10)), ids=small_survey.ids)
        with pytest.raises(SensitivityError):
            pate_confounder_curve(small_survey, cate, spec, n_bb=10)

    def test_crossing_of_a_moderately_positive_effect(self, small_survey):
        """CATE rows constant at 0.56 + 0.14 z: the interval reaches zero near xi = 0.43."""
        z = np.clip(np.random.default_rng(2023).normal(size=1000), -3, 3)
        cate = CateDraws(draws=np.repeat((0.56 + 0.14 * z)[:, None], 10, axis=1), ids=small_survey.ids)

        curve = pate_confounder_curve(small_survey, cate, n_bb=1000, rng=1)
        np.testing.assert_allclose([s.mean for s in curve.summaries],
                                   [curve.baseline.mean - 0.66 * xi for xi in curve.parameters], atol=1e-9)
        assert 0.3 <= first_crossing(curve) <= 0.5

        fine = pate_confounder_curve(small_survey, cate, ConfounderSpec(xi_grid=np.linspace(0, 1, 101).tolist()),
                                     n_bb=1000, rng=1)
        assert 0.3 <= first_crossing(fine) <= 0.5


@pytest.fixture
def two_cell_effects():
    return SourceEffects.from_frame(pd.DataFrame({
        "cell": ["0"] * 6 + ["1"] * 6,
        "effect": [0.1, 0.4, 0.2, 0.9, 0.3, 0.5, -0.2, 0.6, 0.1, 0.3, 0.8, 0.0],
        "weight": [1.0] * 12,
    }))


class TestShiftBounds:

    def test_gamma_one_reproduces_pate(self, small_survey):
        cate = CateDraws(draws=np.random.default_rng(4).uniform(-1, 1, (20, 10)), ids=small_survey.ids)
        effects = SourceEffects.marginal([0.1, 0.5, 0.9])
        curve = pate_shift_bounds(small_survey, cate, effects, n_bb=300, rng=12)
        plain = estimate_pate(small_survey, cate, n_bb=300, rng=12)
        assert curve.parameters[0] == 1.0
        np.testing.assert_array_equal(curve.lower[0].draws, plain.draws)
        np.testing.assert_array_equal(curve.upper[0].draws, plain.draws)

    def test_bounds_are_monotone_draw_by_draw(self, small_survey, two_cell_effects):
        ds = small_survey
        cells = pd.DataFrame({"cell": [str(int(u)) for u in ds.column("urban")]})
        ds = type(ds).from_arrays(strata=ds.strata, clusters=ds.clusters, weights=ds.weights,
                                  covariates=pd.concat([ds.covariates, cells], axis=1), ids=ds.ids)
        cate = CateDraws(draws=np.random.default_rng(6).uniform(-0.5, 0.5, (40, 10)), ids=ds.ids)
        curve = pate_shift_bounds(ds, cate, two_cell_effects, ShiftSpec(cell_column="cell"), n_bb=500, rng=3)
        assert len(curve) == 15
        lower = np.vstack([s.draws for s in curve.lower])
        upper = np.vstack([s.draws for s in curve.upper])
        assert np.all(np.diff(lower, axis=0) <= 1e-12)
        assert np.all(np.diff(upper, axis=0) >= -1e-12)
        assert np.all(lower <= upper + 1e-12)

    def test_two_point_example(self, small_survey):
        cate = CateDraws(draws=np.full((5, 10), 0.5), ids=small_survey.ids)
        curve = pate_shift_bounds(small_survey, cate, SourceEffects.marginal([0.0, 1.0]),
                                  ShiftSpec(gamma_grid=[1.0, 2.0]), n_bb=50, rng=0)
        np.testing.assert_allclose(curve.lower[1].draws, 0.25, atol=1e-12)
        np.testing.assert_allclose(curve.upper[1].draws, 0.75, atol=1e-12)

    def test_cell_without_source_support(self, small_survey, two_cell_effects):
        cate = CateDraws(draws=np.zeros((2, 10)), ids=small_survey.ids)
        with pytest.raises(SensitivityError, match="s1"):
            pate_shift_bounds(small_survey, cate, two_cell_effects, ShiftSpec(cell_column="segment"), n_bb=10)

    @pytest.mark.parametrize("grid", [[0.5, 2.0], [2.0, 1.5], []])
    def test_invalid_gamma_grid(self, small_survey, grid):
        cate = CateDraws(draws=np.zeros((2, 10)), ids=small_survey.ids)
        with pytest.raises(SensitivityError):
            pate_shift_bounds(small_survey, cate, SourceEffects.marginal([0.1]), {"gamma_grid": grid}, n_bb=10)

    def test_source_effects_from_frame(self, two_cell_effects):
        tau, omega = two_cell_effects.get("1")
        assert tau.size == 6
        assert omega.sum() == pytest.approx(1.0)
        marginal = SourceEffects.from_frame(pd.DataFrame({"effect": [0.2, 0.4]}))
        assert list(marginal.cells) == ["all"]
        with pytest.raises(SensitivityError):
            SourceEffects.from_frame(pd.DataFrame({"value": [0.2]}))
        with pytest.raises(SensitivityError):
            SourceEffects.from_frame(pd.DataFrame({"effect": [0.2], "weight": [-1.0]}))

    def test_load_source_effects(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="missing.csv"):
            load_source_effects(tmp_path / "missing.csv")
        path = tmp_path / "effects.csv"
        path.write_text("cell,effect,weight\n01,0.2,1\n01,0.4,3\n", encoding="utf-8")
        tau, omega = load_source_effects(path).get("01")
        np.testing.assert_allclose(omega, [0.25, 0.75])


class TestCurves:

    @staticmethod
    def _curve(means, lowers):
        summaries = [
            PosteriorSummary(draws=np.array([m]), mean=m, sd=0.0, ci_lower=lo, ci_upper=m + 0.1)
            for m, lo in zip(means, lowers)
        ]
        return SensitivityCurve(kind="confounder", parameters=np.arange(len(means)) / 10, summaries=summaries)

    def test_first_crossing(self):
        curve = self._curve([0.5, 0.4, 0.3, 0.1], [0.2, 0.1, 0.0, -0.1])
        assert first_crossing(curve) == pytest.approx(0.2)
        assert first_crossing(curve, statistic="mean") is None

    def test_csv_has_one_row_per_grid_point(self, small_survey, tmp_path):
        cate = CateDraws(draws=np.full((3, 10), 0.4), ids=small_survey.ids)
        curve = pate_confounder_curve(small_survey, cate, {"xi_grid": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]}, n_bb=20, rng=1)
        frame = pd.read_csv(curve.to_csv(tmp_path / "curve.csv"))
        assert list(frame.columns) == CONFOUNDER_COLUMNS
        assert len(frame) == 6
        assert frame.loc[0, "mean"] == pytest.approx(0.4)

    def test_summary_count_must_match_grid(self):
        with pytest.raises(SensitivityError):
            SensitivityCurve(kind="shift", parameters=[1.0, 2.0], lower=[], upper=[])
