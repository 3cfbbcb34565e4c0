"""Run the dataset x selector x model matrix and collect one record per cell."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from ..data import DEFAULT_MISSING_TOKENS, Dataset, generate_synthetic, load_csv, train_test_split
from ..estimators import fit
from ..metrics import evaluate
from ..preprocess import fit_transform, transform, undersample
from ..selectors import run_selector
from .config import BenchConfig, DatasetConfig, ModelConfig


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from any sequence of printable parts."""
    text = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big") >> 1


@dataclass(frozen=True)
class BenchRecord:
    dataset: str
    selector: str
    model: str
    task: str
    n_selected: int
    selection_seconds: float
    train_seconds: float
    metrics: dict = field(default_factory=dict)   # metric name -> value, absent ones omitted
    repeat: int = 0
    seed: int = 0
    params: str = ""
    selected: tuple = ()
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def primary_name(self) -> str:
        return "r2" if self.task == "regression" else "accuracy"

    @property
    def primary(self) -> float | None:
        return self.metrics.get(self.primary_name)

    def comparable(self) -> tuple:
        """Every field except wall-clock timings."""
        return (self.dataset, self.selector, self.model, self.task, self.n_selected,
                tuple(sorted(self.metrics.items())), self.repeat, self.seed, self.params,
                self.selected, self.error)


@dataclass
class _Prepared:
    train: Dataset | None = None
    test: Dataset | None = None
    error: str | None = None


def _load(cfg: DatasetConfig) -> Dataset:
    if cfg.is_synthetic:
        return generate_synthetic(cfg.source, cfg.name)
    src = cfg.source
    tokens = DEFAULT_MISSING_TOKENS if src.missing_tokens is None else src.missing_tokens
    data = load_csv(src.path, src.delimiter, src.target, tokens, src.task, cfg.name)
    if src.drop_columns:
        unknown = set(src.drop_columns) - set(data.feature_names)
        if unknown:
            raise ValueError(f"drop_columns not in {src.path}: {sorted(unknown)}")
        keep = [j for j, n in enumerate(data.feature_names) if n not in src.drop_columns]
        data = data.take_columns(keep)
    return data


def prepare_dataset(cfg: DatasetConfig, config: BenchConfig) -> tuple[Dataset, Dataset]:
    """Load or generate, split, fit preprocessing on train, apply it to test."""
    data = _load(cfg)
    sp = config.split
    train, test = train_test_split(data, sp.test_fraction, sp.seed, sp.stratify)
    train, state = fit_transform(train, cfg.encode, cfg.impute, cfg.scale)
    test = transform(test, state)
    if cfg.undersample:
        train = undersample(train, derive_seed(config.master_seed, cfg.name, "undersample"))
    return train, test


def _err(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


def _run_selection_cell(config, dcfg, prep, scfg, repeat) -> list[BenchRecord]:
    """Selector once, then every model on its output.

    The selector seed leaves out the model name so one selection serves all
    models of the cell group; model seeds include it.
    """
    models = config.models_for(dcfg)
    task = prep.train.task.value if prep.train is not None else "unknown"
    sel_seed = derive_seed(config.master_seed, dcfg.name, scfg.label, repeat)
    sel_cfg = replace(scfg, seed=sel_seed)

    def record(m: ModelConfig, **kw) -> BenchRecord:
        cell_seed = derive_seed(config.master_seed, dcfg.name, scfg.label, m.name, repeat)
        spec = m.spec.with_seed(cell_seed)
        params = (f"selector[{sel_cfg.echo()}] model[{spec.echo()}] "
                  f"split[test_fraction={config.split.test_fraction};stratify={config.split.stratify};"
                  f"seed={config.split.seed}] preprocess[encode={dcfg.encode};impute={dcfg.impute};"
                  f"scale={dcfg.scale};undersample={dcfg.undersample}]")
        base = dict(dataset=dcfg.name, selector=scfg.label, model=m.name, task=task,
                    repeat=repeat, seed=cell_seed, params=params)
        base.update(kw)
        return BenchRecord(**base)

    if prep.error is not None:
        return [record(m, n_selected=0, selection_seconds=0.0, train_seconds=0.0,
                       error=prep.error) for m in models]
    train, test = prep.train, prep.test
    t0 = time.perf_counter()
    try:
        result = run_selector(sel_cfg, train.features, train.target, train.task)
    except Exception as exc:  # a failed cell becomes an error record
        dt = time.perf_counter() - t0
        return [record(m, n_selected=0, selection_seconds=dt, train_seconds=0.0,
                       error=_err(exc)) for m in models]
    sel_seconds = time.perf_counter() - t0
    cols = list(result.selected)
    Xtr = np.ascontiguousarray(train.features[:, cols])
    Xte = np.ascontiguousarray(test.features[:, cols])
    out = []
    for m in models:
        cell_seed = derive_seed(config.master_seed, dcfg.name, scfg.label, m.name, repeat)
        t1 = time.perf_counter()
        try:
            model = fit(m.spec.with_seed(cell_seed), Xtr, train.target, train.task)
            train_seconds = time.perf_counter() - t1
            report = evaluate(train.task, test.target, model.predict(Xte), train.n_classes,
                              model.classes)
            metrics = {k: float(v) for k, v in report.as_dict().items() if v is not None}
            out.append(record(m, n_selected=len(cols), selection_seconds=sel_seconds,
                              train_seconds=train_seconds, metrics=metrics,
                              selected=tuple(int(c) for c in cols)))
        except Exception as exc:
            out.append(record(m, n_selected=len(cols), selection_seconds=sel_seconds,
                              train_seconds=time.perf_counter() - t1, error=_err(exc),
                              selected=tuple(int(c) for c in cols)))
    return out


def run_benchmark(config: BenchConfig, threads: int = 1,
                  progress: Callable[[str], None] | None = None) -> list[BenchRecord]:
    """Evaluate every (dataset, selector, model, repeat) cell.

    Failures inside a cell yield an error record instead of aborting. The
    returned list is in config order regardless of ``threads``.
    """
    threads = max(1, int(threads))
    prepared: dict[str, _Prepared] = {}

    def prep(dcfg):
        try:
            train, test = prepare_dataset(dcfg, config)
            return dcfg.name, _Prepared(train, test)
        except Exception as exc:
            return dcfg.name, _Prepared(error=_err(exc))

    jobs = [(d, s, r) for d in config.datasets for s in config.selectors
            for r in range(config.repeats)]

    def cell(job):
        d, s, r = job
        recs = _run_selection_cell(config, d, prepared[d.name], s, r)
        if progress is not None:
            progress(f"{d.name} / {s.label} / repeat {r}: {len(recs)} records")
        return recs

    if threads == 1:
        prepared.update(prep(d) for d in config.datasets)
        groups = [cell(j) for j in jobs]
    else:
        with ThreadPoolExecutor(threads) as pool:
            prepared.update(pool.map(prep, config.datasets))
            groups = list(pool.map(cell, jobs))
    return sort_records([rec for g in groups for rec in g], config)


def sort_records(records, config: BenchConfig | None = None) -> list[BenchRecord]:
    """Config order when a config is given, else lexicographic by name."""
    if config is None:
        return sorted(records, key=lambda r: (r.dataset, r.selector, r.model, r.repeat))
    di = {d.name: i for i, d in enumerate(config.datasets)}
    si = {s.label: i for i, s in enumerate(config.selectors)}
    mi = {m.name: i for i, m in enumerate(config.models)}
    return sorted(records, key=lambda r: (di[r.dataset], si[r.selector], mi[r.model], r.repeat))
