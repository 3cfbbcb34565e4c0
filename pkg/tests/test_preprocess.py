from pathlib import Path

import numpy as np
import pytest

from framesel.data import Dataset, Task, load_csv
from framesel.preprocess import (PreprocessError, apply_categories, encode_categoricals,
                                 fit_categories, fit_transform, impute_mean, standardize,
                                 transform, undersample)

STUDENT = Path(__file__).resolve().parents[1] / "data" / "student-por.csv"


def _clf(counts, d=2, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(len(counts)), counts)
    return Dataset(rng.normal(size=(y.size, d)), y, tuple(f"f{j}" for j in range(d)),
                   Task.BINARY if len(counts) == 2 else Task.MULTICLASS)


def test_category_codes():
    m = fit_categories(["yes", "no", "yes"])
    np.testing.assert_array_equal(apply_categories(["yes", "no", "yes"], m), [0, 1, 0])
    assert apply_categories(["maybe"], m)[0] == 2


def test_encode_reuses_training_maps():
    coded, maps = encode_categoricals({0: ("a", "b", None)})
    assert np.isnan(coded[0][2])
    again, _ = encode_categoricals({0: ("b", "c")}, maps)
    np.testing.assert_array_equal(again[0], [1, 2])


def test_impute_mean():
    X = np.array([[1.0], [np.nan], [3.0]])
    out, means = impute_mean(X, np.isnan(X))
    np.testing.assert_array_equal(out[:, 0], [1, 2, 3])
    clean = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(impute_mean(clean, np.zeros_like(clean, bool))[0], clean)


def test_impute_is_idempotent():
    X = np.array([[1.0, np.nan], [np.nan, 4.0], [3.0, 5.0]])
    once, _ = impute_mean(X, np.isnan(X))
    twice, _ = impute_mean(once, np.isnan(once))
    np.testing.assert_array_equal(once, twice)


def test_impute_all_missing_column():
    X = np.array([[np.nan], [np.nan]])
    with pytest.raises(PreprocessError):
        impute_mean(X, np.isnan(X))


def test_standardize(rng):
    X = np.column_stack([rng.normal(3, 2, 50), np.full(50, 5.0), rng.exponential(size=50)])
    Z, mu, sd = standardize(X)
    np.testing.assert_array_equal(Z[:, 1], 0.0)
    assert np.abs(Z.mean(axis=0)).max() < 1e-12
    assert np.abs(Z[:, [0, 2]].var(axis=0) - 1).max() < 1e-9
    back = Z * np.where(sd > 0, sd, 1.0) + mu
    np.testing.assert_allclose(back, X, atol=1e-9)


def test_fit_transform_uses_only_training_statistics(rng):
    train = Dataset(rng.normal(size=(30, 3)), rng.normal(size=30), ("a", "b", "c"),
                    Task.REGRESSION)
    test = Dataset(rng.normal(10, 5, size=(10, 3)), rng.normal(size=10), ("a", "b", "c"),
                   Task.REGRESSION)
    out, state = fit_transform(train)
    assert state.fitted_on == 30
    np.testing.assert_allclose(state.scale_mean, train.features.mean(axis=0))
    moved = transform(test, state)
    np.testing.assert_allclose(moved.features,
                               (test.features - state.scale_mean) / state.scale_std)


def test_pipeline_with_categories_and_missing(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("s,x,y\nGP,1,3\nMS,?,4\nGP,3,5\nMS,5,1\n", encoding="utf-8")
    ds = load_csv(p, target_column="y", task="regression")
    out, state = fit_transform(ds)
    assert not np.isnan(out.features).any()
    assert state.category_maps == {0: {"GP": 0, "MS": 1}}
    assert state.impute_means[1] == pytest.approx(3.0)


def test_undersample():
    out = undersample(_clf([90, 10]), seed=1)
    assert np.bincount(out.target).tolist() == [10, 10]
    same = undersample(_clf([50, 50]), seed=1)
    assert np.bincount(same.target).tolist() == [50, 50]
    three = undersample(_clf([564, 49, 1]), seed=1)
    assert np.bincount(three.target).tolist() == [1, 1, 1]


def test_undersample_regression_rejected(rng):
    ds = Dataset(rng.normal(size=(5, 1)), rng.normal(size=5), ("a",), Task.REGRESSION)
    with pytest.raises(PreprocessError):
        undersample(ds, 0)


@pytest.mark.skipif(not STUDENT.exists(), reason="student-por.csv not downloaded")
def test_student_school_column_has_two_codes():
    ds = load_csv(STUDENT, delimiter=";", target_column="G3")
    assert ds.n_samples == 649 and ds.task is Task.REGRESSION
    j = ds.feature_names.index("school")
    _, state = fit_transform(ds)
    text = STUDENT.read_text(encoding="utf-8").splitlines()[1:]
    distinct = {line.split(";")[0].strip('"') for line in text if line}
    assert len(state.category_maps[j]) == len(distinct) == 2
