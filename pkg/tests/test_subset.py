import itertools

import numpy as np
import pytest

from changebench.dataset import CANONICAL_METRICS, MetricDataset, synthesize
from changebench.pfst import stage1_rank_filter
from changebench.stats import pearson
from changebench.subset import (
    CfsContext,
    GaConfig,
    cfs_merit,
    cfs_select,
    consistency_rate_of,
    consistency_select,
    dependency_degree,
    filtered_subset_select,
    genetic_select,
    rough_set_select,
)


def six_column_ds(seed):
    informative = ["CBO", "RFC", "LOC"]
    noise = ["DIT", "NOC", "NOA"]
    return synthesize(160, informative, noise, separation=1.5, seed=seed)


def exhaustive_best_merit(ds):
    """Oracle: evaluate every non-empty subset explicitly."""
    ctx = CfsContext(ds)
    n = len(ds.columns)
    best = -1.0
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            best = max(best, ctx.merit(list(combo)))
    return best


class TestCfs:
    def test_single_feature_merit_is_abs_correlation(self):
        ds = synthesize(200, ["LOC"], [], separation=1.0, seed=0)
        expected = abs(pearson(ds.column_values("LOC"), ds.labels))
        assert cfs_merit(ds, ["LOC"]) == pytest.approx(expected, abs=1e-12)

    def test_duplicate_feature_never_raises_merit(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(120)
        labels = (x + rng.standard_normal(120) > 0).astype(int)
        ds = MetricDataset("d", ("CBO", "LOC"), np.column_stack([x, x]), labels)
        assert cfs_merit(ds, ["CBO", "LOC"]) <= cfs_merit(ds, ["CBO"]) + 1e-12

    def test_empty_subset_merit_zero(self):
        ds = six_column_ds(2)
        assert CfsContext(ds).merit([]) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_best_first_matches_exhaustive(self, seed):
        ds = six_column_ds(seed)
        result = cfs_select(ds)
        assert result.merit == pytest.approx(exhaustive_best_merit(ds), abs=0.0)

    def test_merit_reevaluates(self):
        ds = six_column_ds(7)
        result = cfs_select(ds)
        assert cfs_merit(ds, result.members) == pytest.approx(result.merit, abs=1e-12)


class TestConsistency:
    def test_unique_rows_full_consistency(self):
        ds = six_column_ds(3)
        assert consistency_rate_of(ds, list(ds.columns)) == 1.0

    def test_empty_subset_majority_rate(self):
        labels = np.array([1] * 12 + [0] * 8)
        rows = np.random.default_rng(4).standard_normal((20, 2))
        ds = MetricDataset("m", ("CBO", "LOC"), rows, labels)
        assert consistency_rate_of(ds, []) == pytest.approx(0.6)

    @pytest.mark.parametrize("seed", range(5))
    def test_greedy_matches_exhaustive(self, seed):
        # consistency is monotone, so the exhaustive optimum is the full set
        ds = six_column_ds(seed + 10)
        result = consistency_select(ds)
        assert result.merit == consistency_rate_of(ds, list(ds.columns))

    def test_merit_reevaluates(self):
        ds = six_column_ds(11)
        result = consistency_select(ds)
        assert consistency_rate_of(ds, result.members) == pytest.approx(result.merit)


class TestFilteredSubset:
    def test_result_subset_of_rank_survivors(self):
        ds = six_column_ds(5)
        result = filtered_subset_select(ds)
        survivors = set(stage1_rank_filter(ds))
        if "fell back" not in (result.flag or ""):
            assert set(result.members) <= survivors

    def test_all_noise_falls_back_flagged(self):
        for seed in range(40):
            ds = synthesize(100, [], ["LOC", "DIT", "CBO"], separation=0.0, seed=seed)
            if not stage1_rank_filter(ds):
                result = filtered_subset_select(ds)
                assert result.members == ds.columns
                assert "fell back" in result.flag
                return
        pytest.fail("no all-noise seed emptied the pre-filter")

    def test_merit_close_to_unrestricted_on_planted_data(self):
        ds = six_column_ds(6)
        restricted = filtered_subset_select(ds)
        unrestricted = cfs_select(ds)
        assert restricted.merit >= 0.95 * unrestricted.merit


class TestRoughSet:
    def test_feature_identical_to_label(self):
        labels = np.array([0, 1] * 20)
        rng = np.random.default_rng(6)
        ds = MetricDataset(
            "r", ("CBO", "LOC"),
            np.column_stack([labels.astype(float), rng.standard_normal(40)]), labels)
        result = rough_set_select(ds)
        assert result.members == ("CBO",)
        assert result.merit == 1.0

    def test_empty_set_gamma_zero(self):
        ds = six_column_ds(8)
        assert dependency_degree(ds, []) == 0.0

    def test_reduct_gamma_equals_full_gamma(self):
        for seed in range(5):
            ds = six_column_ds(seed + 20)
            result = rough_set_select(ds)
            assert result.merit == dependency_degree(ds, list(ds.columns))

    def test_merit_reevaluates(self):
        ds = six_column_ds(21)
        result = rough_set_select(ds)
        assert dependency_degree(ds, result.members) == pytest.approx(result.merit)


class TestGenetic:
    def test_deterministic_for_seed(self):
        ds = six_column_ds(9)
        cfg = GaConfig(population=20, generations=15, seed=5)
        a = genetic_select(ds, cfg)
        b = genetic_select(ds, cfg)
        assert a.members == b.members
        assert a.merit == b.merit

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_exhaustive_with_generous_budget(self, seed):
        ds = six_column_ds(seed + 30)
        result = genetic_select(ds, GaConfig(seed=seed))
        assert result.merit == pytest.approx(exhaustive_best_merit(ds), abs=0.0)

    def test_merit_reevaluates(self):
        ds = six_column_ds(31)
        result = genetic_select(ds, GaConfig(population=20, generations=10, seed=1))
        assert cfs_merit(ds, result.members) == pytest.approx(result.merit, abs=1e-12)


class TestSearchProperties:
    def test_never_below_best_singleton(self):
        for seed in range(4):
            ds = six_column_ds(seed + 40)
            ctx = CfsContext(ds)
            best_single = max(ctx.merit([i]) for i in range(len(ds.columns)))
            assert cfs_select(ds).merit >= best_single - 1e-12
            assert genetic_select(ds, GaConfig(seed=seed)).merit >= best_single - 1e-12
