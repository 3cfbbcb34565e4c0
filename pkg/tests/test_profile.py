import numpy as np
import pytest

from framesel.data import Dataset, SyntheticSpec, Task, generate_synthetic
from framesel.preprocess import fit_transform
from framesel.profile import (ProfileError, average_path_length, isolation_forest_outliers,
                              isolation_forest_scores, max_abs_correlation, profile_dataset,
                              skewness)


def test_skewness_values():
    assert skewness([-1, 0, 1]) == 0.0
    assert skewness([3, 3, 3]) == 0.0
    v = np.array([0, 0, 0, 1.0])
    d = v - v.mean()
    assert skewness(v) == pytest.approx(np.mean(d ** 3) / np.mean(d ** 2) ** 1.5, abs=1e-12)
    assert skewness(v) == pytest.approx(1.1547, abs=1e-4)


def test_skewness_sign_flip(rng):
    v = rng.exponential(size=100)
    assert skewness(-v) == pytest.approx(-skewness(v), abs=1e-12)


def test_correlation():
    x = np.arange(10.0)
    assert max_abs_correlation(np.column_stack([x, 2 * x])) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    assert max_abs_correlation(rng.normal(size=(10000, 2))) < 0.05
    with pytest.raises(ProfileError):
        max_abs_correlation(x[:, None])


def test_sampled_correlation_finds_planted_pair(rng):
    X = rng.normal(size=(50, 600))
    X[:, 7] = -X[:, 400]
    assert max_abs_correlation(X, exact=True) == pytest.approx(1.0)


def test_average_path_length():
    assert average_path_length(1) == 0.0
    assert average_path_length(2) == pytest.approx(1.0)
    # c(n) = 2 H(n-1) - 2 (n-1)/n
    assert average_path_length(256) == pytest.approx(
        2 * sum(1 / i for i in range(1, 256)) - 2 * 255 / 256)


def test_isolation_forest_flags_far_point(rng):
    X = rng.normal(size=(200, 2))
    X[0] = [12.0, 12.0]
    scores = isolation_forest_scores(X, seed=1)
    assert scores[0] == scores.max() and scores[0] > 0.6
    assert np.median(scores) < 0.6


def test_isolation_forest_identical_points():
    scores, frac = isolation_forest_outliers(np.ones((20, 3)), seed=0)
    assert np.all(scores == scores[0])
    assert frac in (0.0, 1.0)


def test_isolation_forest_deterministic_and_permutation_invariant(rng):
    X = rng.normal(size=(60, 3))
    a = isolation_forest_scores(X, n_trees=20, seed=3)
    np.testing.assert_array_equal(a, isolation_forest_scores(X, n_trees=20, seed=3))
    # with the full sample in every tree the row order cannot matter
    perm = rng.permutation(60)
    full = isolation_forest_scores(X, n_trees=20, subsample=60, seed=3)
    shuffled = isolation_forest_scores(X[perm], n_trees=20, subsample=60, seed=3)
    np.testing.assert_allclose(shuffled, full[perm], rtol=1e-12)


def test_profile_fields():
    ds = generate_synthetic(SyntheticSpec(n_samples=100, n_features=30, n_informative=4, seed=2))
    prof = profile_dataset(ds)
    assert sum(prof.class_distribution.values()) == pytest.approx(100.0, abs=0.1)
    assert 0 <= prof.max_feature_correlation <= 1
    assert 0 <= prof.outlier_fraction <= 1
    assert prof.dimensionality_ratio == pytest.approx(0.3)
    assert len(prof.row()) == len(prof.COLUMNS)
    assert prof.markdown().count("\n") == 2


def test_profile_standardized_variance_is_one():
    ds = generate_synthetic(SyntheticSpec(n_samples=80, n_features=10, n_informative=3, seed=2))
    std, _ = fit_transform(ds)
    assert profile_dataset(std).avg_variance == pytest.approx(1.0, abs=1e-9)


def test_profile_single_column_marks_correlation_absent(rng):
    ds = Dataset(rng.normal(size=(20, 1)), rng.normal(size=20), ("a",), Task.REGRESSION)
    prof = profile_dataset(ds)
    assert prof.max_feature_correlation is None and prof.class_distribution is None
    assert prof.row()[3] == "n/a"
