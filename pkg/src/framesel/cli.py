"""Command-line entry point: ``framesel {generate,profile,select,bench,report}``.

Exit codes: 0 success, 1 invalid input (flags, config, data), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .bench import (ConfigError, ReportError, emit_report, load_config, read_records_csv,
                    run_benchmark)
from .bench.config import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV
from .bench.report import FORMATS
from .data import DataError, SyntheticSpec, generate_synthetic, load_csv, save_csv
from .estimators import ALGORITHMS, EstimatorError, EstimatorSpec
from .preprocess import fit_transform
from .profile import ProfileError, profile_dataset
from .selectors import (METHODS, SCORE_FUNCTIONS, EmptySelectionError, SelectionError,
                        SelectorConfig, StratificationError, run_selector)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


def _formats(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = set(parts) - set(FORMATS)
    if bad or not parts:
        raise argparse.ArgumentTypeError(f"formats must be a comma list from {FORMATS}")
    return parts


def _target(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _add_input(p):
    p.add_argument("--input", required=True, help="headered CSV file")
    p.add_argument("--target", type=_target, default=-1,
                   help="target column name or index (default: last column)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--task", default="auto", choices=("auto", "regression", "binary", "multiclass"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="framesel", description="Feature selection toolkit and benchmark runner.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    d = SyntheticSpec()
    g.add_argument("--n-samples", type=int, default=d.n_samples)
    g.add_argument("--n-features", type=int, default=d.n_features)
    g.add_argument("--n-informative", type=int, default=d.n_informative)
    g.add_argument("--n-redundant", type=int, default=d.n_redundant)
    g.add_argument("--sparsity", type=float, default=d.sparsity)
    g.add_argument("--noise-sigma", type=float, default=d.noise_sigma)
    g.add_argument("--label-flip", type=float, default=d.label_flip)
    g.add_argument("--class-sep", type=float, default=d.class_sep)
    g.add_argument("--n-classes", type=int, default=d.n_classes)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--output", help="CSV path (default: stdout)")
    g.add_argument("--truth", help="also write the informative column names here, one per line")

    p = sub.add_parser("profile", help="print the statistical profile of a CSV dataset")
    _add_input(p)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact-correlation", action="store_true",
                   help="exhaustive pair search even above 500 columns")

    s = sub.add_parser("select", help="run one selector on a CSV dataset")
    _add_input(s)
    s.add_argument("--method", required=True, choices=METHODS)
    s.add_argument("--k", type=int)
    s.add_argument("--estimator", choices=ALGORITHMS,
                   help="engine for rfe/forward/frame/model_select (default gbt)")
    s.add_argument("--pool", default="auto", help="FRAME pool size or 'auto'")
    s.add_argument("--epsilon", type=float, default=1e-4)
    s.add_argument("--cv-folds", type=int, default=3)
    s.add_argument("--score-fn", choices=SCORE_FUNCTIONS)
    s.add_argument("--threshold", type=float)
    s.add_argument("--step-fraction", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1, help="parallel candidate evaluations")
    s.add_argument("--trace", help="stage-trace CSV path (default: <output dir>/selection_trace.csv)")

    b = sub.add_parser("bench", help="run a benchmark config and write reports")
    b.add_argument("--config", required=True,
                   help="JSON config file, or the name of a built-in config")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--output-dir", help=f"overrides the config and ${OUTPUT_DIR_ENV}")
    b.add_argument("--formats", type=_formats, default=FORMATS)
    b.add_argument("--quiet", action="store_true")

    r = sub.add_parser("report", help="re-render reports from a records CSV")
    r.add_argument("--from", dest="source", required=True, help="records.csv from a bench run")
    r.add_argument("--output-dir")
    r.add_argument("--formats", type=_formats, default=("markdown", "svg"))
    return parser


def _cmd_generate(args, out) -> int:
    spec = SyntheticSpec(args.n_samples, args.n_features, args.n_informative, args.n_redundant,
                         args.sparsity, args.noise_sigma, args.label_flip, args.class_sep,
                         args.n_classes, args.seed)
    data = generate_synthetic(spec)
    if args.output:
        save_csv(data, args.output)
    else:
        _write_stream(data, out)
    if args.truth:
        names = [data.feature_names[j] for j in sorted(data.informative_truth)]
        Path(args.truth).write_text("\n".join(names) + "\n", encoding="utf-8")
    return EXIT_OK


def _write_stream(data, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(list(data.feature_names) + ["target"])
    for i in range(data.n_samples):
        w.writerow([repr(float(v)) for v in data.features[i]] + [str(int(data.target[i]))])


def _load(args):
    return load_csv(args.input, args.delimiter, args.target, task=args.task)


def _cmd_profile(args, out) -> int:
    data = _load(args)
    prof = profile_dataset(data, seed=args.seed, exact_correlation=args.exact_correlation or None)
    if args.format == "markdown":
        out.write(prof.markdown(header=True) + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(prof.COLUMNS)
        w.writerow(prof.row())
    return EXIT_OK


def _cmd_select(args, out) -> int:
    data = _load(args)
    data, _ = fit_transform(data)
    pool = args.pool if args.pool == "auto" else _int_arg(args.pool, "--pool")
    estimator = EstimatorSpec(args.estimator) if args.estimator else None
    if args.method == "model_select" and estimator is None:
        estimator = EstimatorSpec("gbt")
    cfg = SelectorConfig(method=args.method, k=args.k, score_fn=args.score_fn,
                         threshold=args.threshold, estimator=estimator,
                         rfe_step_fraction=args.step_fraction, frame_pool=pool,
                         epsilon=args.epsilon, cv_folds=args.cv_folds, seed=args.seed)
    res = run_selector(cfg, data.features, data.target, data.task, n_jobs=args.threads)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["method", "n_selected", "selected_indices", "selected_names", "elapsed_seconds"])
    w.writerow([res.method, res.n_selected, " ".join(str(i) for i in res.selected),
                " ".join(data.feature_names[i] for i in res.selected),
                f"{res.elapsed_seconds:.6f}"])
    trace = Path(args.trace) if args.trace else Path(_default_output_dir()) / "selection_trace.csv"
    trace.parent.mkdir(parents=True, exist_ok=True)
    with trace.open("w", newline="", encoding="utf-8") as fh:
        tw = csv.writer(fh)
        tw.writerow(["round", "stage", "size", "score"])
        for i, st in enumerate(res.stage_trace, start=1):
            tw.writerow([i, st.stage, st.size, repr(st.score)])
    return EXIT_OK


def _int_arg(text, flag):
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{flag} expects an integer or 'auto', got {text!r}") from None


def _settings(config) -> list[str]:
    lines = [f"split: test_fraction={config.split.test_fraction}, stratify={config.split.stratify}, "
             f"seed={config.split.seed}; master_seed={config.master_seed}; repeats={config.repeats}"]
    lines += [f"selector {s.label}: {s.echo()}" for s in config.selectors]
    lines += [f"model {m.name}: {m.spec.echo()}" for m in config.models]
    return lines


def _cmd_bench(args, out, err) -> int:
    config = load_config(args.config)
    out_dir = Path(args.output_dir) if args.output_dir else config.resolved_output_dir()
    progress = None if args.quiet else (lambda msg: print(msg, file=err, flush=True))
    records = run_benchmark(config, threads=args.threads, progress=progress)
    paths = emit_report(records, out_dir, args.formats, title=config.name,
                        settings=_settings(config))
    n_err = sum(not r.ok for r in records)
    out.write(f"{len(records)} records ({n_err} failed) written to {out_dir}\n")
    for p in paths:
        out.write(f"  {p}\n")
    return EXIT_OK


def _cmd_report(args, out) -> int:
    src = Path(args.source)
    if not src.exists():
        raise UsageError(f"records file not found: {src}")
    records = read_records_csv(src)
    if not records:
        raise UsageError(f"{src} holds no records")
    out_dir = Path(args.output_dir) if args.output_dir else src.parent
    paths = emit_report(records, out_dir, args.formats, title=src.stem)
    for p in paths:
        out.write(f"{p}\n")
    return EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return _cmd_generate(args, out)
        if args.command == "profile":
            return _cmd_profile(args, out)
        if args.command == "select":
            return _cmd_select(args, out)
        if args.command == "bench":
            return _cmd_bench(args, out, err)
        return _cmd_report(args, out)
    except (EmptySelectionError, StratificationError, ReportError) as exc:
        print(f"framesel {args.command}: {exc}", file=err)
        return EXIT_RUNTIME
    except (UsageError, ConfigError, DataError, SelectionError, EstimatorError,
            ProfileError, ValueError) as exc:
        print(f"framesel {args.command}: {exc}", file=err)
        return EXIT_INVALID
    except Exception as exc:
        print(f"framesel {args.command}: runtime error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
