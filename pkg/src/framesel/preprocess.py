"""Train-fitted preprocessing: label encoding, mean imputation, scaling, undersampling.

Statistics are always learned from the training split and re-used as-is on
any other split.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .data import Dataset, DataError


class PreprocessError(DataError):
    pass


@dataclass(frozen=True)
class PreprocessState:
    category_maps: dict[int, dict[str, int]] = field(default_factory=dict)
    impute_means: np.ndarray | None = None
    scale_mean: np.ndarray | None = None
    scale_std: np.ndarray | None = None
    constant_columns: tuple[int, ...] = ()
    fitted_on: int = 0


def fit_categories(values: Sequence[str | None]) -> dict[str, int]:
    """Codes in first-appearance order; ``None`` (missing) is skipped."""
    mapping: dict[str, int] = {}
    for v in values:
        if v is not None and v not in mapping:
            mapping[v] = len(mapping)
    return mapping


def apply_categories(values: Sequence[str | None], mapping: dict[str, int]) -> np.ndarray:
    """Unseen strings get the reserved code ``len(mapping)``; missing cells become NaN."""
    unseen = len(mapping)
    return np.array([np.nan if v is None else mapping.get(v, unseen) for v in values],
                    dtype=np.float64)


def encode_categoricals(raw_columns: dict[int, Sequence[str | None]],
                        maps: dict[int, dict[str, int]] | None = None):
    """Integer-code every raw string column.

    Returns ``(coded, maps)`` where ``coded`` maps column index to a float
    code vector. Pass previously fitted ``maps`` to transform new data.
    """
    if maps is None:
        maps = {j: fit_categories(col) for j, col in raw_columns.items()}
    coded = {j: apply_categories(col, maps[j]) for j, col in raw_columns.items()}
    return coded, maps


def impute_mean(X: np.ndarray, mask: np.ndarray, means: np.ndarray | None = None):
    """Replace masked cells with the column mean of observed training cells."""
    X = np.array(X, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if means is None:
        observed = (~mask).sum(axis=0)
        if np.any(observed == 0):
            j = int(np.flatnonzero(observed == 0)[0])
            raise PreprocessError(f"column {j} has no observed values to impute from")
        means = np.where(mask, 0.0, np.nan_to_num(X)).sum(axis=0) / observed
    X[mask] = np.broadcast_to(means, X.shape)[mask]
    return X, means


def standardize(X: np.ndarray, mean: np.ndarray | None = None,
                std: np.ndarray | None = None):
    """``(x - mean) / std`` with population std; zero-std columns are only centered.

    Returns ``(Z, mean, std)``; ``std`` keeps its raw zeros so constant
    columns can be identified later.
    """
    X = np.asarray(X, dtype=np.float64)
    if np.isnan(X).any():
        raise PreprocessError("standardize needs imputed data (found NaN)")
    if mean is None:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return (X - mean) / scale, mean, std


def fit_transform(train: Dataset, encode: bool = True, impute: bool = True,
                  scale: bool = True) -> tuple[Dataset, PreprocessState]:
    """Fit the encode -> impute -> scale chain on ``train`` and apply it."""
    X = np.array(train.features)
    maps = {}
    if train.categorical:
        if not encode:
            raise PreprocessError("dataset has string columns but encoding is disabled")
        coded, maps = encode_categoricals(train.categorical)
        for j, col in coded.items():
            X[:, j] = col
    means = None
    mask = train.missing_mask | np.isnan(X)
    if impute:
        X, means = impute_mean(X, mask)
    elif mask.any():
        raise PreprocessError("dataset has missing values but imputation is disabled")
    mu = sd = None
    constant: tuple[int, ...] = ()
    if scale:
        X, mu, sd = standardize(X)
        constant = tuple(int(j) for j in np.flatnonzero(sd == 0))
    state = PreprocessState(category_maps=maps, impute_means=means, scale_mean=mu,
                            scale_std=sd, constant_columns=constant,
                            fitted_on=train.n_samples)
    out = replace(train, features=X, missing_mask=np.zeros(X.shape, dtype=bool),
                  categorical={})
    return out, state


def transform(data: Dataset, state: PreprocessState) -> Dataset:
    """Apply a fitted chain; no statistics of ``data`` are used."""
    X = np.array(data.features)
    if data.categorical:
        coded, _ = encode_categoricals(data.categorical, state.category_maps)
        for j, col in coded.items():
            X[:, j] = col
    mask = data.missing_mask | np.isnan(X)
    if mask.any():
        if state.impute_means is None:
            raise PreprocessError("missing values present but the chain was fit without imputation")
        X, _ = impute_mean(X, mask, state.impute_means)
    if state.scale_mean is not None:
        X, _, _ = standardize(X, state.scale_mean, state.scale_std)
    return replace(data, features=X, missing_mask=np.zeros(X.shape, dtype=bool),
                   categorical={})


def undersample(data: Dataset, seed: int) -> Dataset:
    """Down-sample every class to the minority count, then shuffle rows."""
    if not data.task.is_classification:
        raise PreprocessError("undersampling needs a classification target")
    rng = np.random.default_rng(seed)
    counts = np.bincount(data.target, minlength=data.n_classes)
    present = np.flatnonzero(counts)
    m = int(counts[present].min())
    keep = np.concatenate([rng.choice(np.flatnonzero(data.target == c), size=m, replace=False)
                           for c in present])
    return data.take_rows(rng.permutation(np.sort(keep)))
