"""Config-driven benchmark matrix and its reports."""

from .config import (BenchConfig, ConfigError, CsvSource, DatasetConfig, ModelConfig,
                     OUTPUT_DIR_ENV, SplitConfig, builtin_configs, load_config, parse_config,
                     resolve_config_path)
from .report import (CSV_HEADER, ReportError, emit_report, markdown_report, read_records_csv,
                     svg_bar_chart, write_records_csv)
from .runner import BenchRecord, derive_seed, prepare_dataset, run_benchmark, sort_records

__all__ = [
    "BenchConfig", "BenchRecord", "ConfigError", "CsvSource", "DatasetConfig", "ModelConfig",
    "OUTPUT_DIR_ENV", "SplitConfig", "CSV_HEADER", "ReportError", "builtin_configs",
    "derive_seed", "emit_report", "load_config", "markdown_report", "parse_config",
    "prepare_dataset", "read_records_csv", "resolve_config_path", "run_benchmark",
    "sort_records", "svg_bar_chart", "write_records_csv",
]
