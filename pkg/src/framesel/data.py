"""Dataset container, CSV ingestion, synthetic generation and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_MISSING_TOKENS = ("", "?", "NA", "nan")
AUTO_CLASS_LEVELS = 20


class Task(str, Enum):
    REGRESSION = "regression"
    BINARY = "binary"
    MULTICLASS = "multiclass"

    @property
    def is_classification(self) -> bool:
        return self is not Task.REGRESSION


class DataError(ValueError):
    """Base class for every data-module failure."""


class UnreadableFileError(DataError):
    pass


class MissingTargetError(DataError):
    pass


class RaggedRowError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass


class SyntheticSpecError(DataError):
    pass


class SplitError(DataError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus target and the bookkeeping every stage needs.

    ``categorical`` maps a column index to its raw string cells; those
    columns hold NaN in ``features`` until they are encoded.
    """

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    task: Task
    missing_mask: np.ndarray | None = None
    informative_truth: frozenset[int] | None = None
    categorical: dict[int, tuple[str | None, ...]] = field(default_factory=dict)
    name: str = "dataset"
    classes: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        y = np.asarray(self.target)
        y = y.astype(np.float64) if self.task is Task.REGRESSION else y.astype(np.intp)
        if y.shape != (X.shape[0],):
            raise DataError(f"target length {y.shape[0]} != {X.shape[0]} feature rows")
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match column count")
        mask = (np.zeros(X.shape, dtype=bool) if self.missing_mask is None
                else np.asarray(self.missing_mask, dtype=bool))
        if mask.shape != X.shape:
            raise DataError("missing_mask shape does not match features")
        if self.task.is_classification:
            codes = np.unique(y)
            if self.classes == 0:
                # fresh construction: the code set itself must be 0..C-1
                if codes.size < 2 or codes[0] != 0 or codes[-1] != codes.size - 1:
                    raise DataError("classification target must use contiguous codes 0..C-1, C >= 2")
                object.__setattr__(self, "classes", int(codes.size))
            elif codes.size and (codes[0] < 0 or codes[-1] >= self.classes):
                raise DataError(f"class codes outside 0..{self.classes - 1}")
            if task_for_codes(self.classes) is not self.task:
                raise DataError(f"task {self.task.value} does not match {self.classes} classes")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "target", _frozen(y))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "missing_mask", _frozen(mask))
        if self.informative_truth is not None:
            object.__setattr__(self, "informative_truth",
                               frozenset(int(i) for i in self.informative_truth))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.classes

    def take_rows(self, rows: np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        cat = {j: tuple(col[i] for i in rows) for j, col in self.categorical.items()}
        return replace(self, features=self.features[rows], target=self.target[rows],
                       missing_mask=self.missing_mask[rows], categorical=cat)

    def take_columns(self, cols: Sequence[int]) -> "Dataset":
        cols = [int(c) for c in cols]
        pos = {c: i for i, c in enumerate(cols)}
        truth = None
        if self.informative_truth is not None:
            truth = frozenset(pos[c] for c in self.informative_truth if c in pos)
        cat = {pos[j]: v for j, v in self.categorical.items() if j in pos}
        return replace(self, features=self.features[:, cols],
                       feature_names=tuple(self.feature_names[c] for c in cols),
                       missing_mask=self.missing_mask[:, cols],
                       informative_truth=truth, categorical=cat)


def task_for_codes(n_classes: int) -> Task:
    return Task.BINARY if n_classes == 2 else Task.MULTICLASS


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def _detect_task(values: list[str], numeric: list[float | None]) -> Task:
    if any(v is None for v in numeric):
        levels = len(set(values))
        return task_for_codes(levels)
    arr = np.array(numeric, dtype=np.float64)
    if np.all(arr == np.round(arr)):
        levels = np.unique(arr)
        # gaps in the level set suggest a numeric score rather than class codes
        contiguous = levels[-1] - levels[0] + 1 == levels.size
        if 2 <= levels.size <= AUTO_CLASS_LEVELS and contiguous:
            return task_for_codes(levels.size)
    return Task.REGRESSION


def load_csv(path, delimiter: str = ",", target_column: str | int = -1,
             missing_tokens: Sequence[str] = DEFAULT_MISSING_TOKENS,
             task: Task | str = "auto", name: str | None = None) -> Dataset:
    """Read a headered CSV file into a :class:`Dataset`.

    Numeric columns become floats, anything else is kept as raw strings
    for later encoding. Cells equal to one of ``missing_tokens`` are
    flagged in ``missing_mask``. With ``task="auto"`` a target with at most
    20 distinct, gap-free integer levels (or any non-numeric target) is
    treated as classification.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    return parse_rows(rows, target_column=target_column, missing_tokens=missing_tokens,
                      task=task, name=name or path.stem, source=str(path))


def parse_rows(rows: list[list[str]], target_column: str | int = -1,
               missing_tokens: Sequence[str] = DEFAULT_MISSING_TOKENS,
               task: Task | str = "auto", name: str = "dataset",
               source: str = "<memory>") -> Dataset:
    if not rows:
        raise EmptyDatasetError(f"{source}: file is empty (no header row)")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if len(body) < 2:
        raise EmptyDatasetError(f"{source}: need at least 2 data rows, found {len(body)}")
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise RaggedRowError(f"{source}: row {i + 2} has {len(r)} fields, "
                                 f"header has {len(header)}")
    if isinstance(target_column, int):
        t = target_column if target_column >= 0 else len(header) + target_column
        if not 0 <= t < len(header):
            raise MissingTargetError(f"{source}: target column index {target_column} out of range")
    else:
        if target_column not in header:
            raise MissingTargetError(f"{source}: target column {target_column!r} not in header")
        t = header.index(target_column)

    missing = set(missing_tokens)
    y_raw = [r[t].strip() for r in body]
    for i, v in enumerate(y_raw):
        if v in missing:
            raise MissingTargetError(f"{source}: row {i + 2} has a missing target value")
    y_num = [_parse_float(v) for v in y_raw]
    task = _detect_task(y_raw, y_num) if task == "auto" else Task(task)
    if task.is_classification:
        if all(v is not None for v in y_num):
            levels = sorted(set(y_num))
            y = np.array([levels.index(v) for v in y_num], dtype=np.intp)
        else:
            levels = sorted(set(y_raw))
            y = np.array([levels.index(v) for v in y_raw], dtype=np.intp)
        task = task_for_codes(len(levels))
    else:
        bad = [i for i, v in enumerate(y_num) if v is None]
        if bad:
            raise DataError(f"{source}: row {bad[0] + 2} target {y_raw[bad[0]]!r} is not numeric")
        y = np.array(y_num, dtype=np.float64)

    cols = [j for j in range(len(header)) if j != t]
    n = len(body)
    X = np.full((n, len(cols)), np.nan)
    mask = np.zeros((n, len(cols)), dtype=bool)
    categorical = {}
    for out_j, j in enumerate(cols):
        cells = [r[j].strip() for r in body]
        miss = np.array([c in missing for c in cells])
        parsed = [None if m else _parse_float(c) for c, m in zip(cells, miss)]
        mask[:, out_j] = miss
        if all(p is not None for p, m in zip(parsed, miss) if not m):
            X[:, out_j] = [np.nan if p is None else p for p in parsed]
        else:
            categorical[out_j] = tuple(None if m else c for c, m in zip(cells, miss))
    return Dataset(features=X, target=y, feature_names=tuple(header[j] for j in cols),
                   task=task, missing_mask=mask, categorical=categorical, name=name)


def save_csv(data: Dataset, path, delimiter: str = ",", target_name: str = "target") -> None:
    """Write ``data`` as a headered CSV with the target as the last column.

    Floats use ``repr`` so a reload reproduces them exactly; missing cells
    are written empty.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(list(data.feature_names) + [target_name])
        for i in range(data.n_samples):
            row = []
            for j in range(data.n_features):
                if data.missing_mask[i, j]:
                    row.append("")
                elif j in data.categorical:
                    row.append(data.categorical[j][i])
                else:
                    row.append(repr(float(data.features[i, j])))
            t = data.target[i]
            row.append(repr(float(t)) if data.task is Task.REGRESSION else str(int(t)))
            w.writerow(row)


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 500
    n_features: int = 2000
    n_informative: int = 20
    n_redundant: int = 0
    sparsity: float = 0.0
    noise_sigma: float = 0.0
    label_flip: float = 0.0
    class_sep: float = 1.0
    n_classes: int = 2
    seed: int = 0

    def validate(self) -> None:
        if self.n_samples < 1 or self.n_features < 1 or self.n_informative < 1:
            raise SyntheticSpecError("n_samples, n_features and n_informative must be positive")
        if self.n_redundant < 0:
            raise SyntheticSpecError("n_redundant must be non-negative")
        if self.n_informative + self.n_redundant > self.n_features:
            raise SyntheticSpecError("n_informative + n_redundant exceeds n_features")
        if not 0.0 <= self.sparsity <= 1.0:
            raise SyntheticSpecError("sparsity must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise SyntheticSpecError("noise_sigma must be non-negative")
        if not 0.0 <= self.label_flip < 1.0:
            raise SyntheticSpecError("label_flip must lie in [0, 1)")
        if not self.class_sep > 0:
            raise SyntheticSpecError("class_sep must be positive")
        if self.n_classes < 2:
            raise SyntheticSpecError("n_classes must be at least 2")
        if self.n_informative < 64 and self.n_classes > 2 ** self.n_informative:
            raise SyntheticSpecError("n_classes exceeds the 2**n_informative hypercube vertices")
        if not 0 <= self.seed < 2 ** 64:
            raise SyntheticSpecError("seed must be an unsigned 64-bit integer")


def _centroids(rng: np.random.Generator, n_classes: int, n_inf: int) -> np.ndarray:
    first = rng.choice([-1.0, 1.0], size=n_inf)
    # antipodal second vertex: every informative coordinate separates some pair of classes
    verts = [first, -first]
    seen = {tuple(first), tuple(-first)}
    while len(verts) < n_classes:
        v = rng.choice([-1.0, 1.0], size=n_inf)
        if tuple(v) not in seen:
            seen.add(tuple(v))
            verts.append(v)
    return np.array(verts[:n_classes])


def generate_synthetic(spec: SyntheticSpec, name: str = "synthetic") -> Dataset:
    """Planted classification problem with controlled sparsity, redundancy and noise.

    Informative columns are unit-variance Gaussian clusters around class
    centroids at vertices of a hypercube with side ``class_sep`` (so two
    adjacent vertices are ``class_sep`` apart); redundant columns are
    random linear mixes of them; the rest is standard normal. Columns are
    shuffled (``informative_truth`` holds the shuffled positions), then
    feature noise, zeroing and label flips are applied in that order.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, d, k, r, C = (spec.n_samples, spec.n_features, spec.n_informative,
                     spec.n_redundant, spec.n_classes)
    centroids = _centroids(rng, C, k) * (spec.class_sep / 2.0)
    y = np.repeat(np.arange(C), [n // C + (c < n % C) for c in range(C)])
    informative = centroids[y] + rng.standard_normal((n, k))
    mix = rng.uniform(-1.0, 1.0, size=(k, r))
    noise_cols = rng.standard_normal((n, d - k - r))
    X = np.hstack([informative, informative @ mix, noise_cols])
    perm = rng.permutation(d)
    X = X[:, perm]
    truth = frozenset(int(j) for j in np.flatnonzero(perm < k))
    rows = rng.permutation(n)
    X, y = X[rows], y[rows]
    if spec.noise_sigma > 0:
        X = X + spec.noise_sigma * rng.standard_normal((n, d))
    if spec.sparsity > 0:
        X[rng.random((n, d)) < spec.sparsity] = 0.0
    if spec.label_flip > 0:
        flip = rng.random(n) < spec.label_flip
        y = y.copy()
        y[flip] = (y[flip] + rng.integers(1, C, size=int(flip.sum()))) % C
    names = tuple(f"x{j}" for j in range(d))
    return Dataset(features=X, target=y, feature_names=names, task=task_for_codes(C),
                   informative_truth=truth, name=name)


def split_indices(data: Dataset, test_fraction: float, seed: int,
                  stratify: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices; see :func:`train_test_split`."""
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction {test_fraction} outside (0, 1)")
    n = data.n_samples
    if n < 4:
        raise SplitError(f"need at least 4 rows to split, got {n}")
    n_test = int(math.floor(test_fraction * n + 0.5))
    rng = np.random.default_rng(seed)
    if stratify and data.task.is_classification:
        counts = np.bincount(data.target, minlength=data.n_classes)
        if np.any((counts > 0) & (counts < 2)):
            c = int(np.flatnonzero((counts > 0) & (counts < 2))[0])
            raise SplitError(f"class {c} has a single member; cannot stratify")
        ideal = test_fraction * counts
        per_class = np.floor(ideal).astype(int)
        rest = n_test - per_class.sum()
        frac = ideal - per_class
        for c in sorted(range(len(counts)), key=lambda c: (-frac[c], c))[:max(rest, 0)]:
            per_class[c] += 1
        test = []
        for c in range(len(counts)):
            members = np.flatnonzero(data.target == c)
            test.append(rng.permutation(members)[:per_class[c]])
        test = np.sort(np.concatenate(test))
    else:
        test = np.sort(rng.permutation(n)[:n_test])
    train = np.setdiff1d(np.arange(n), test)
    return train, test


def train_test_split(data: Dataset, test_fraction: float = 0.3, seed: int = 42,
                     stratify: bool = True) -> tuple[Dataset, Dataset]:
    train, test = split_indices(data, test_fraction, seed, stratify)
    return data.take_rows(train), data.take_rows(test)
