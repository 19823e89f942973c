import numpy as np
import pytest

from changebench.cv import make_folds
from changebench.errors import DatasetError


def labels_with(n, n_pos, seed=0):
    rng = np.random.default_rng(seed)
    y = np.zeros(n, dtype=int)
    y[:n_pos] = 1
    rng.shuffle(y)
    return y


class TestFoldSizes:
    def test_even_split(self):
        plan = make_folds(labels_with(10, 5), k=5, seed=0)
        sizes = np.bincount(plan.assignments, minlength=5)
        assert sizes.tolist() == [2] * 5

    def test_remainder_split(self):
        plan = make_folds(labels_with(11, 6), k=5, seed=0)
        sizes = sorted(np.bincount(plan.assignments, minlength=5).tolist())
        assert sizes == [2, 2, 2, 2, 3]

    def test_sizes_differ_by_at_most_one(self):
        for seed in range(30):
            n = int(np.random.default_rng(seed).integers(10, 120))
            n_pos = int(np.random.default_rng(seed + 1).integers(3, n - 3))
            plan = make_folds(labels_with(n, n_pos, seed), k=5, seed=seed)
            sizes = np.bincount(plan.assignments, minlength=5)
            assert sizes.max() - sizes.min() <= 1


class TestStratification:
    def test_balanced_positives_per_fold(self):
        labels = labels_with(100, 60)
        plan = make_folds(labels, k=5, seed=3)
        for fold in range(5):
            assert labels[plan.test_indices(fold)].sum() == 12

    def test_positive_rate_within_one_row(self):
        for seed in range(20):
            labels = labels_with(83, 38, seed)
            plan = make_folds(labels, k=5, seed=seed)
            rate = labels.mean()
            for fold in range(5):
                idx = plan.test_indices(fold)
                assert abs(labels[idx].sum() - idx.size * rate) <= 1.0


class TestPartitionProperties:
    def test_union_everything_intersection_empty(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(10, 200))
            n_pos = int(rng.integers(2, n - 2))
            seed = int(rng.integers(0, 10_000))
            k = int(rng.integers(2, min(8, n)))
            labels = labels_with(n, n_pos, seed)
            plan = make_folds(labels, k=k, seed=seed)
            seen = np.concatenate([plan.test_indices(f) for f in range(k)])
            assert sorted(seen.tolist()) == list(range(n))
            for fold in range(k):
                train = set(plan.train_indices(fold).tolist())
                test = set(plan.test_indices(fold).tolist())
                assert not train & test

    def test_deterministic(self):
        labels = labels_with(57, 23, seed=1)
        a = make_folds(labels, k=5, seed=9)
        b = make_folds(labels, k=5, seed=9)
        assert np.array_equal(a.assignments, b.assignments)


class TestValidation:
    def test_too_many_folds(self):
        with pytest.raises(DatasetError):
            make_folds(labels_with(4, 2), k=5, seed=0)

    def test_too_few_folds(self):
        with pytest.raises(DatasetError):
            make_folds(labels_with(10, 5), k=1, seed=0)

    def test_small_class_warns(self):
        labels = np.array([1, 1, 0, 0, 0, 0, 0, 0, 0, 0])
        plan = make_folds(labels, k=5, seed=0)
        assert any("degraded" in w for w in plan.warnings)
