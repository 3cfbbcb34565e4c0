"""Benchmark configuration: JSON documents describing datasets, selectors and models."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from ..data import SyntheticSpec, SyntheticSpecError, Task
from ..estimators import EstimatorError, EstimatorSpec
from ..selectors import SelectionError, SelectorConfig

OUTPUT_DIR_ENV = "FRAMESEL_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "framesel_output"
BUILTIN_DIR = Path(__file__).parent / "configs"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CsvSource:
    path: str
    delimiter: str = ","
    target: str | int = -1
    missing_tokens: tuple[str, ...] | None = None
    task: str = "auto"
    drop_columns: tuple[str, ...] = ()


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    source: CsvSource | SyntheticSpec
    encode: bool = True
    impute: bool = True
    scale: bool = True
    undersample: bool = False
    models: tuple[str, ...] | None = None   # restrict the model list for this dataset

    @property
    def is_synthetic(self) -> bool:
        return isinstance(self.source, SyntheticSpec)


@dataclass(frozen=True)
class ModelConfig:
    name: str
    spec: EstimatorSpec


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.3
    stratify: bool = True
    seed: int = 42


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple[DatasetConfig, ...]
    selectors: tuple[SelectorConfig, ...]
    models: tuple[ModelConfig, ...]
    split: SplitConfig = SplitConfig()
    repeats: int = 1
    output_dir: str | None = None
    master_seed: int = 0
    name: str = "bench"

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)

    def models_for(self, dataset: DatasetConfig) -> tuple[ModelConfig, ...]:
        if dataset.models is None:
            return self.models
        return tuple(m for m in self.models if m.name in dataset.models)

    def without_dataset(self, name: str) -> "BenchConfig":
        kept = tuple(d for d in self.datasets if d.name != name)
        return BenchConfig(kept, self.selectors, self.models, self.split, self.repeats,
                           self.output_dir, self.master_seed, self.name)


def _take(doc: dict, where: str, allowed: set[str]) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return doc


def _estimator(doc: Any, where: str) -> EstimatorSpec:
    doc = _take(doc, where, {"algorithm", "params"})
    if "algorithm" not in doc:
        raise ConfigError(f"{where}: missing 'algorithm'")
    try:
        return EstimatorSpec(doc["algorithm"], dict(doc.get("params", {})))
    except EstimatorError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _dataset(doc: Any, i: int, base: Path) -> DatasetConfig:
    where = f"datasets[{i}]"
    doc = _take(doc, where, {"name", "csv", "synthetic", "preprocess", "undersample", "models"})
    if "name" not in doc:
        raise ConfigError(f"{where}: missing 'name'")
    where = f"dataset {doc['name']!r}"
    if ("csv" in doc) == ("synthetic" in doc):
        raise ConfigError(f"{where}: give exactly one of 'csv' or 'synthetic'")
    if "csv" in doc:
        c = _take(doc["csv"], f"{where}.csv",
                  {"path", "delimiter", "target", "missing_tokens", "task", "drop_columns"})
        if "path" not in c:
            raise ConfigError(f"{where}.csv: missing 'path'")
        path = Path(c["path"])
        if not path.is_absolute():
            path = base / path
        task = c.get("task", "auto")
        if task != "auto" and task not in {t.value for t in Task}:
            raise ConfigError(f"{where}.csv: unknown task {task!r}")
        tokens = c.get("missing_tokens")
        source = CsvSource(str(path), c.get("delimiter", ","), c.get("target", -1),
                           None if tokens is None else tuple(tokens), task,
                           tuple(c.get("drop_columns", ())))
    else:
        names = {f.name for f in fields(SyntheticSpec)}
        s = _take(doc["synthetic"], f"{where}.synthetic", names)
        try:
            source = SyntheticSpec(**s)
            source.validate()
        except (TypeError, SyntheticSpecError) as exc:
            raise ConfigError(f"{where}.synthetic: {exc}") from exc
    pre = _take(doc.get("preprocess", {}), f"{where}.preprocess", {"encode", "impute", "scale"})
    models = doc.get("models")
    return DatasetConfig(doc["name"], source, bool(pre.get("encode", True)),
                         bool(pre.get("impute", True)), bool(pre.get("scale", True)),
                         bool(doc.get("undersample", False)),
                         None if models is None else tuple(models))


_SELECTOR_KEYS = {"name", "method", "k", "score_fn", "threshold", "estimator",
                  "rfe_step_fraction", "frame_pool", "epsilon", "cv_folds", "seed"}


def _selector(doc: Any, i: int) -> SelectorConfig:
    where = f"selectors[{i}]"
    doc = dict(_take(doc, where, _SELECTOR_KEYS))
    if "method" not in doc:
        raise ConfigError(f"{where}: missing 'method'")
    if "estimator" in doc:
        doc["estimator"] = _estimator(doc["estimator"], f"{where}.estimator")
    try:
        return SelectorConfig(**doc)
    except SelectionError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _model(doc: Any, i: int) -> ModelConfig:
    where = f"models[{i}]"
    doc = _take(doc, where, {"name", "algorithm", "params"})
    spec = _estimator({k: v for k, v in doc.items() if k != "name"}, where)
    return ModelConfig(doc.get("name", spec.algorithm), spec)


def _unique(names, what):
    seen = set()
    for n in names:
        if n in seen:
            raise ConfigError(f"duplicate {what} name {n!r}")
        seen.add(n)


def parse_config(doc: Any, base_dir: str | Path = ".") -> BenchConfig:
    """Validate a decoded JSON document; relative CSV paths resolve against ``base_dir``."""
    doc = _take(doc, "config", {"name", "datasets", "selectors", "models", "split", "repeats",
                                "output_dir", "master_seed"})
    for key in ("datasets", "selectors", "models"):
        if not isinstance(doc.get(key), list) or not doc[key]:
            raise ConfigError(f"config needs a non-empty '{key}' list")
    base = Path(base_dir)
    datasets = tuple(_dataset(d, i, base) for i, d in enumerate(doc["datasets"]))
    selectors = tuple(_selector(s, i) for i, s in enumerate(doc["selectors"]))
    models = tuple(_model(m, i) for i, m in enumerate(doc["models"]))
    _unique([d.name for d in datasets], "dataset")
    _unique([s.label for s in selectors], "selector")
    _unique([m.name for m in models], "model")
    model_names = {m.name for m in models}
    for d in datasets:
        missing = set(d.models or ()) - model_names
        if missing:
            raise ConfigError(f"dataset {d.name!r} lists unknown models {sorted(missing)}")
    sp = _take(doc.get("split", {}), "split", {"test_fraction", "stratify", "seed"})
    split = SplitConfig(float(sp.get("test_fraction", 0.3)), bool(sp.get("stratify", True)),
                        int(sp.get("seed", 42)))
    if not 0.0 < split.test_fraction < 1.0:
        raise ConfigError("split.test_fraction must lie in (0, 1)")
    repeats = doc.get("repeats", 1)
    if not isinstance(repeats, int) or repeats < 1:
        raise ConfigError("repeats must be an integer >= 1")
    master_seed = doc.get("master_seed", 0)
    if not isinstance(master_seed, int) or master_seed < 0:
        raise ConfigError("master_seed must be a non-negative integer")
    return BenchConfig(datasets, selectors, models, split, repeats, doc.get("output_dir"),
                       master_seed, doc.get("name", "bench"))


def builtin_configs() -> list[str]:
    return sorted(p.name for p in BUILTIN_DIR.glob("*.cfg"))


def resolve_config_path(path: str | Path) -> Path:
    """``path`` itself if it exists, else a built-in config of that file name."""
    p = Path(path)
    if p.exists():
        return p
    builtin = BUILTIN_DIR / p.name
    if p.parent == Path(".") and builtin.exists():
        return builtin
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str | Path) -> BenchConfig:
    p = resolve_config_path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    # built-in configs resolve data paths against the working directory
    base = Path.cwd() if p.parent == BUILTIN_DIR else p.parent
    return parse_config(doc, base)
