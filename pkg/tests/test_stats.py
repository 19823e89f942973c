import itertools
import math

import numpy as np
import pytest
import scipy.stats

from changebench import stats
from changebench.dataset import synthesize
from changebench.errors import StatsError
from changebench.stats import (
    descriptive,
    mean_ci,
    midranks,
    pairwise_bonferroni,
    pearson,
    pearson_from_matrix,
    pearson_matrix,
    rank_test,
    signed_rank_test,
    ulr_fit,
)

from oracles import (
    exact_ranksum_p,
    exact_signedrank_p,
    fd_hessian,
    pearson_sums_formula,
)


class TestMidranks:
    def test_no_ties(self):
        assert midranks(np.array([30.0, 10.0, 20.0])).tolist() == [3.0, 1.0, 2.0]

    def test_ties_share_mean_rank(self):
        assert midranks(np.array([5.0, 5.0, 1.0])).tolist() == [2.5, 2.5, 1.0]


class TestRankTest:
    def test_disjoint_groups_exact_example(self):
        # {1,2,3} vs {4,5,6}: the observed rank sum is the unique extreme of
        # all C(6,3)=20 assignments, so one-sided p=1/20 and two-sided p=0.10.
        res = rank_test([1, 2, 3], [4, 5, 6])
        assert res.method == "exact"
        assert res.p_value == pytest.approx(0.10, abs=1e-12)

    def test_identical_degenerate(self):
        res = rank_test([5, 5], [5, 5])
        assert res.p_value == 1.0
        assert not res.significant

    def test_empty_group_raises(self):
        with pytest.raises(StatsError):
            rank_test([], [1, 2])

    def test_exact_matches_enumeration_for_small_samples(self):
        rng = np.random.default_rng(0)
        for n1 in range(1, 8):
            for n2 in range(n1, 10 - n1 + 1):
                for _ in range(3):
                    a = rng.integers(0, 4, n1).astype(float)
                    b = rng.integers(0, 4, n2).astype(float)
                    if np.all(np.concatenate([a, b]) == a[0] if n1 else False):
                        continue
                    got = rank_test(a, b)
                    if got.method != "exact":
                        continue
                    assert got.p_value == exact_ranksum_p(a.tolist(), b.tolist())

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal(12)
        b = rng.standard_normal(9) + 0.5
        base = rank_test(a, b)
        assert rank_test(np.exp(a), np.exp(b)).p_value == base.p_value
        assert rank_test(a**3, b**3).p_value == base.p_value

    def test_normal_path_matches_scipy_asymptotic(self):
        rng = np.random.default_rng(2)
        a = rng.integers(0, 30, 40).astype(float)
        b = rng.integers(5, 35, 55).astype(float)
        got = rank_test(a, b)
        assert got.method == "normal"
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
        assert got.p_value == pytest.approx(ref.pvalue, abs=1e-10)

    def test_null_calibration_rejection_rate(self):
        # Same-distribution groups: p should be roughly uniform, so the
        # rejection rate at alpha=0.05 stays near 0.05.
        rng = np.random.default_rng(20240101)
        rejections = 0
        reps = 1000
        for _ in range(reps):
            a = rng.standard_normal(500)
            b = rng.standard_normal(500)
            if rank_test(a, b).p_value <= 0.05:
                rejections += 1
        assert 0.03 <= rejections / reps <= 0.07

    def test_significance_uses_leq(self):
        # contract: significant iff p <= alpha
        res = rank_test([1, 2, 3], [4, 5, 6], alpha=0.10)
        assert res.significant


class TestSignedRank:
    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(3)
        for m in range(1, 13):
            for _ in range(3):
                d = rng.integers(-3, 4, m).astype(float)
                got = signed_rank_test(d)
                assert got.p_value == exact_signedrank_p(d.tolist())

    def test_all_zero_differences(self):
        res = signed_rank_test([0.0, 0.0, 0.0])
        assert res.p_value == 1.0
        assert res.n_used == 0

    def test_normal_path_matches_scipy(self):
        rng = np.random.default_rng(4)
        d = rng.standard_normal(120) + 0.1
        got = signed_rank_test(d)
        assert got.method == "normal"
        ref = scipy.stats.wilcoxon(d, alternative="two-sided", correction=True, method="approx")
        assert got.p_value == pytest.approx(ref.pvalue, abs=1e-10)


class TestUlr:
    def test_constant_predictor(self):
        res = ulr_fit([3.0] * 10, [0, 1] * 5)
        assert res.coefficient == 0.0
        assert res.coef_p_value == 1.0
        assert res.flag == "zero-variance predictor"

    def test_anti_aligned_negative_coefficient(self):
        y = np.array([0, 1] * 10)
        x = 1.0 - y  # perfectly anti-aligned
        res = ulr_fit(x, y)
        assert res.coefficient < 0
        assert res.flag is not None  # separation

    def test_planted_signal_significant(self):
        ds = synthesize(300, ["LOC"], ["DIT"], separation=3.0, seed=8)
        res = ulr_fit(ds.column_values("LOC"), ds.labels)
        assert res.coef_p_value < 0.01
        assert res.significant

    def test_gradient_norm_small_at_optimum(self):
        ds = synthesize(200, ["LOC"], ["DIT"], separation=1.0, seed=9)
        x = ds.column_values("LOC")
        res = ulr_fit(x, ds.labels)
        grad = stats.logistic_gradient(res.intercept, res.coefficient, x, ds.labels)
        assert np.linalg.norm(grad) < 1e-6

    def test_wald_p_matches_fd_hessian_oracle(self):
        ds = synthesize(250, ["LOC"], ["DIT"], separation=0.8, seed=10)
        x = ds.column_values("LOC")
        y = ds.labels
        res = ulr_fit(x, y)

        def nll(params):
            return -stats.logistic_log_likelihood(params[0], params[1], x, y)

        info = fd_hessian(nll, np.array([res.intercept, res.coefficient]), step=1e-4)
        se = math.sqrt(np.linalg.inv(info)[1, 1])
        p_oracle = 2.0 * scipy.stats.norm.sf(abs(res.coefficient / se))
        assert res.coef_p_value == pytest.approx(p_oracle, rel=1e-3)

    def test_input_validation(self):
        with pytest.raises(StatsError):
            ulr_fit([1, 2, 3], [0, 1, 1])  # too few
        with pytest.raises(StatsError):
            ulr_fit([1, 2, 3, 4], [1, 1, 1, 1])  # single class


class TestPearson:
    def test_self_correlation_unity(self):
        x = np.array([1.0, 4.0, 2.0, 7.0])
        m = pearson_from_matrix(np.column_stack([x, x]), ("a", "b"))
        assert m.r[0, 0] == 1.0
        assert m.r[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_exact_anticorrelation(self):
        assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0, abs=1e-12)

    def test_sums_formula_oracle(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [1.0, 2.0, 3.0, 100.0]
        assert pearson(x, y) == pytest.approx(pearson_sums_formula(x, y), abs=1e-12)

    def test_affine_invariance_and_sign_flip(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(30)
        y = rng.standard_normal(30)
        base = pearson(x, y)
        assert pearson(3.0 * x + 7.0, y) == pytest.approx(base, abs=1e-12)
        assert pearson(-2.0 * x, y) == pytest.approx(-base, abs=1e-12)

    def test_zero_variance_flagged(self):
        m = pearson_from_matrix(
            np.column_stack([np.ones(5), np.arange(5.0)]), ("const", "ramp")
        )
        assert m.flagged == ("const",)
        assert m.r[0, 1] == 0.0
        assert m.r[0, 0] == 1.0

    def test_strength_bands(self):
        r = np.array([[1.0, 0.75, 0.4, 0.1]])
        m = pearson_from_matrix(
            np.random.default_rng(6).standard_normal((10, 2)), ("a", "b")
        )
        assert set(np.unique(m.strength)) <= {"strong", "weak", "none"}

    def test_dataset_interface(self):
        ds = synthesize(50, ["LOC"], ["DIT", "CBO"], 1.0, seed=12)
        m = pearson_matrix(ds)
        assert m.columns == ds.columns
        assert np.allclose(m.r, m.r.T)
        with pytest.raises(StatsError):
            pearson_matrix(ds, ["LOC"])


class TestMeanCI:
    def test_zero_variance(self):
        ci = mean_ci([5.0, 5.0, 5.0, 5.0])
        assert (ci.mean, ci.lo, ci.hi) == (5.0, 5.0, 5.0)

    def test_two_point_half_width(self):
        # t(0.975, 1) = 12.706... times std_err 0.5
        ci = mean_ci([0.0, 1.0])
        assert ci.hi - ci.mean == pytest.approx(12.7062047362 * 0.5, abs=1e-4)
        assert ci.mean - ci.lo == pytest.approx(12.7062047362 * 0.5, abs=1e-4)

    def test_separated_groups_disjoint_intervals(self):
        ds = synthesize(200, ["LOC"], [], separation=5.0, seed=13)
        changed, unchanged = ds.class_split("LOC")
        hi = mean_ci(unchanged).hi
        lo = mean_ci(changed).lo
        assert hi < lo

    def test_needs_two_values(self):
        with pytest.raises(StatsError):
            mean_ci([1.0])


class TestDescriptive:
    def test_simple_quartiles(self):
        d = descriptive([1, 2, 3, 4, 5])
        assert (d.q1, d.median, d.q3) == (2.0, 3.0, 4.0)

    def test_single_value(self):
        d = descriptive([7.0])
        assert (d.min, d.max, d.mean, d.median, d.q1, d.q3, d.std_dev) == (7.0,) * 6 + (0.0,)

    def test_two_values_mean(self):
        assert descriptive([72.85, 100.00]).mean == pytest.approx(86.425)

    def test_ordering_invariant(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            d = descriptive(rng.standard_normal(rng.integers(1, 40)))
            assert d.min <= d.q1 <= d.median <= d.q3 <= d.max
            assert d.std_dev >= 0

    def test_empty_rejected(self):
        with pytest.raises(StatsError):
            descriptive([])


class TestPairwiseBonferroni:
    def make_scores(self, m, n_obs, seed=0, identical_pair=None):
        rng = np.random.default_rng(seed)
        scores = {}
        for i in range(m):
            base = rng.standard_normal(n_obs) + i * 0.05
            scores[f"M{i:02d}"] = {f"obs{j}": float(base[j]) for j in range(n_obs)}
        if identical_pair:
            a, b = identical_pair
            scores[b] = dict(scores[a])
        return scores

    def test_21_methods_cutoff(self):
        rep = pairwise_bonferroni(self.make_scores(21, 10))
        assert rep.n_pairs == 210
        assert rep.cutoff == 0.05 / 210
        assert abs(rep.cutoff - 0.0002381) < 5e-8

    def test_12_methods_cutoff(self):
        rep = pairwise_bonferroni(self.make_scores(12, 10))
        assert rep.n_pairs == 66
        assert rep.cutoff == 0.05 / 66
        assert abs(rep.cutoff - 0.0007575) < 1e-7

    def test_identical_methods_not_significant(self):
        rep = pairwise_bonferroni(self.make_scores(3, 15, identical_pair=("M00", "M02")))
        i, j = rep.methods.index("M00"), rep.methods.index("M02")
        assert rep.p_values[i, j] == 1.0
        assert not rep.significant[i, j]
        assert rep.mean_difference[i, j] == 0.0

    def test_mean_difference_antisymmetric(self):
        rep = pairwise_bonferroni(self.make_scores(6, 12, seed=3))
        md = rep.mean_difference
        assert np.array_equal(md, -md.T)
        assert np.all(np.diag(md) == 0.0)

    def test_mismatched_keys_rejected(self):
        scores = self.make_scores(3, 5)
        del scores["M01"]["obs0"]
        with pytest.raises(StatsError, match="mismatched"):
            pairwise_bonferroni(scores)

    def test_too_few_methods(self):
        with pytest.raises(StatsError):
            pairwise_bonferroni({"only": {"a": 1.0}})

    def test_json_round_trip(self):
        rep = pairwise_bonferroni(self.make_scores(4, 8, seed=9), measure="accuracy")
        back = stats.pairwise_report_from_json(rep.to_json())
        assert back.methods == rep.methods
        assert np.array_equal(back.p_values, rep.p_values)
        assert np.array_equal(back.mean_difference, rep.mean_difference)
        assert back.cutoff == rep.cutoff
