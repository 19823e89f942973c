import numpy as np
import pytest

from changebench.dataset import CANONICAL_METRICS, MetricDataset, synthesize
from changebench.errors import StatsError
from changebench.ranking import (
    chi_squared_rank,
    equal_frequency_codes,
    gain_ratio_rank,
    info_gain_rank,
    oner_rank,
    pca_select,
    top_k_count,
    varimax,
)


def ds_from_columns(columns: dict, labels) -> MetricDataset:
    names = tuple(columns)
    rows = np.column_stack([np.asarray(v, dtype=float) for v in columns.values()])
    return MetricDataset("t", names, rows, np.asarray(labels))


class TestDiscretization:
    def test_few_distinct_values_get_own_bins(self):
        codes = equal_frequency_codes(np.array([5.0, 1.0, 5.0, 3.0]), bins=10)
        assert codes.tolist() == [2, 0, 2, 1]

    def test_equal_frequency_binning(self):
        x = np.arange(100.0)
        codes = equal_frequency_codes(x, bins=10)
        assert codes.min() == 0 and codes.max() == 9
        assert np.bincount(codes).tolist() == [10] * 10

    def test_monotone_transform_same_codes(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(75)
        base = equal_frequency_codes(x)
        assert np.array_equal(equal_frequency_codes(np.exp(x)), base)
        assert np.array_equal(equal_frequency_codes(x**3), base)


class TestTopK:
    def test_21_metrics_select_5(self):
        assert top_k_count(21) == 5

    def test_small_counts(self):
        assert top_k_count(2) == 1
        assert top_k_count(5) == 3


class TestChiSquared:
    def test_independent_feature_zero(self):
        ds = ds_from_columns({"LOC": [0, 0, 1, 1] * 5}, [0, 1, 0, 1] * 5)
        assert chi_squared_rank(ds).scores["LOC"] == pytest.approx(0.0, abs=1e-12)

    def test_perfect_predictor_twenty(self):
        labels = [1] * 10 + [0] * 10
        ds = ds_from_columns({"LOC": labels}, labels)
        assert chi_squared_rank(ds).scores["LOC"] == pytest.approx(20.0, abs=1e-12)

    def test_k_is_five_for_21_candidates(self):
        ds = synthesize(60, ["LOC"], [m for m in CANONICAL_METRICS if m != "LOC"],
                        separation=2.0, seed=1)
        ranked = chi_squared_rank(ds)
        assert ranked.k == 5
        assert len(ranked.selected()) == 5


class TestGainRatio:
    def test_feature_identical_to_label(self):
        labels = [0, 1] * 10
        ds = ds_from_columns({"LOC": [10 * v for v in labels]}, labels)
        assert gain_ratio_rank(ds).scores["LOC"] == pytest.approx(1.0)

    def test_constant_feature_zero_flagged(self):
        ds = ds_from_columns({"LOC": [3.0] * 20}, [0, 1] * 10)
        ranked = gain_ratio_rank(ds)
        assert ranked.scores["LOC"] == 0.0
        assert any("split information" in f for f in ranked.flags)

    def test_pure_halves_ratio_one(self):
        labels = [1] * 10 + [0] * 10
        ds = ds_from_columns({"LOC": [1.0] * 10 + [2.0] * 10}, labels)
        assert gain_ratio_rank(ds).scores["LOC"] == pytest.approx(1.0)


class TestOneR:
    def test_feature_identical_to_label(self):
        labels = [0, 1] * 15
        ds = ds_from_columns({"LOC": labels}, labels)
        assert oner_rank(ds).scores["LOC"] == pytest.approx(1.0)

    def test_constant_feature_majority_rate(self):
        labels = [1] * 12 + [0] * 8
        ds = ds_from_columns({"LOC": [5.0] * 20}, labels)
        assert oner_rank(ds).scores["LOC"] == pytest.approx(0.6)

    def test_three_bin_majorities(self):
        feature = [0.0] * 10 + [1.0] * 10 + [2.0] * 10
        labels = ([1] * 8 + [0] * 2) + ([0] * 6 + [1] * 4) + ([1] * 9 + [0] * 1)
        ds = ds_from_columns({"LOC": feature}, labels)
        assert oner_rank(ds).scores["LOC"] == pytest.approx(23.0 / 30.0)


class TestInfoGain:
    def test_constant_feature_zero(self):
        ds = ds_from_columns({"LOC": [1.0] * 20}, [0, 1] * 10)
        assert info_gain_rank(ds).scores["LOC"] == pytest.approx(0.0)

    def test_feature_equals_label_one_bit(self):
        labels = [0, 1] * 10
        ds = ds_from_columns({"LOC": labels}, labels)
        assert info_gain_rank(ds).scores["LOC"] == pytest.approx(1.0)

    def test_bounded_by_label_entropy(self):
        rng = np.random.default_rng(2)
        labels = (rng.random(80) < 0.4).astype(int)
        labels[:2] = [0, 1]
        ds = ds_from_columns(
            {"LOC": rng.standard_normal(80), "DIT": rng.standard_normal(80)}, labels)
        p = labels.mean()
        h_label = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
        ranked = info_gain_rank(ds)
        for score in ranked.scores.values():
            assert 0.0 <= score <= h_label + 1e-12


class TestRankerProperties:
    def test_monotone_transform_invariance(self):
        ds = synthesize(120, ["LOC"], ["DIT", "CBO"], separation=1.5, seed=3)
        warped_rows = np.exp(ds.rows)
        warped = MetricDataset("w", ds.columns, warped_rows, ds.labels)
        for ranker in (chi_squared_rank, gain_ratio_rank, oner_rank, info_gain_rank):
            a, b = ranker(ds), ranker(warped)
            for col in ds.columns:
                assert a.scores[col] == pytest.approx(b.scores[col], abs=1e-12)

    def test_duplicate_columns_equal_scores_canonical_ties(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(60)
        labels = (rng.random(60) < 0.5).astype(int)
        labels[:2] = [0, 1]
        ds = ds_from_columns({"CBO": x, "LOC": x}, labels)
        for ranker in (chi_squared_rank, gain_ratio_rank, oner_rank, info_gain_rank):
            ranked = ranker(ds)
            assert ranked.scores["CBO"] == ranked.scores["LOC"]
            assert ranked.order == ("CBO", "LOC")  # canonical tie-break


class TestPca:
    def test_rank_one_correlation_eigenvalues(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(100)
        labels = (rng.random(100) < 0.5).astype(int)
        labels[:2] = [0, 1]
        ds = ds_from_columns({"CBO": x, "LOC": 2.0 * x + 1.0}, labels)
        _, loadings = pca_select(ds)
        assert loadings.eigenvalues[0] == pytest.approx(2.0, abs=1e-9)
        assert loadings.eigenvalues[1] == pytest.approx(0.0, abs=1e-9)

    def test_eigenvalue_sum_equals_column_count(self):
        ds = synthesize(150, ["LOC", "CBO"], ["DIT", "NOC", "RFC", "MPC"],
                        separation=1.0, seed=6)
        _, loadings = pca_select(ds)
        assert loadings.eigenvalues.sum() == pytest.approx(len(loadings.columns), abs=1e-8)

    def test_varimax_preserves_communality(self):
        rng = np.random.default_rng(7)
        raw = rng.standard_normal((12, 3))
        rotated = varimax(raw)
        before = (raw**2).sum(axis=1)
        after = (rotated**2).sum(axis=1)
        assert np.allclose(before, after, atol=1e-8)

    def test_zero_variance_column_excluded(self):
        rng = np.random.default_rng(8)
        labels = np.array([0, 1] * 30)
        ds = ds_from_columns(
            {"DIT": np.full(60, 3.0), "CBO": rng.standard_normal(60),
             "LOC": rng.standard_normal(60)}, labels)
        _, loadings = pca_select(ds)
        assert loadings.excluded == ("DIT",)
        assert "DIT" not in loadings.columns

    def test_feature_set_members_load_strongly(self):
        ds = synthesize(200, ["LOC", "CBO"], ["DIT", "NOC"], separation=1.0, seed=9)
        fs, loadings = pca_select(ds)
        assert fs.label == "FR5"
        assert set(fs.members) <= set(loadings.columns)
        for member in fs.members:
            idx = loadings.columns.index(member)
            assert np.abs(loadings.loadings[idx]).max() > 0.7

    def test_cumulative_percentage_monotone(self):
        ds = synthesize(100, ["LOC"], ["DIT", "CBO", "RFC"], separation=1.0, seed=10)
        _, loadings = pca_select(ds)
        cum = loadings.cumulative_pct
        assert np.all(np.diff(cum) >= -1e-9)
        assert cum[-1] <= 100.0 + 1e-6

    def test_too_few_rows_rejected(self):
        ds = ds_from_columns({"CBO": [1.0, 2.0], "LOC": [3.0, 1.0]}, [0, 1])
        with pytest.raises(StatsError):
            pca_select(ds)

    def test_loading_csv_layout(self, tmp_path):
        ds = synthesize(120, ["LOC"], ["DIT", "CBO", "RFC"], separation=1.0, seed=11)
        _, loadings = pca_select(ds)
        path = tmp_path / "pca.csv"
        loadings.write_csv(path, comment="test")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1].split(",")[0] == "metric"
        assert lines[-3].split(",")[0] == "Eigenvalues"
        assert lines[-2].split(",")[0] == "% variance"
        assert lines[-1].split(",")[0] == "Cumulative % variance"
        assert len(lines) == 2 + len(loadings.columns) + 3
