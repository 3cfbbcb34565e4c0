"""Report emitters: long-form CSV, markdown tables and SVG bar charts."""

from __future__ import annotations

import csv
import json
import math
import re
from collections import OrderedDict
from pathlib import Path
from xml.sax.saxutils import escape

from .runner import BenchRecord

CSV_HEADER = ("dataset", "selector", "model", "task", "n_selected", "sel_seconds",
              "train_seconds", "metric_name", "metric_value")
FORMATS = ("csv", "markdown", "svg")
ERROR_METRIC = "error"

CLASSIFICATION_COLUMNS = (("accuracy", "Accuracy"), ("precision", "Precision"),
                          ("recall", "Recall"), ("f1", "F1 Score"), ("auc_roc", "AUC-ROC"))
REGRESSION_COLUMNS = (("r2", "R²"), ("mse", "MSE"), ("rmse", "RMSE"), ("mae", "MAE"),
                      ("msle", "MSLE"), ("mape_percent", "MAPE (%)"))

PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1",
           "#ff9da7", "#9c755f", "#bab0ac")


class ReportError(OSError):
    pass


# -- csv -------------------------------------------------------------------

def write_records_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            head = [r.dataset, r.selector, r.model, r.task, r.n_selected,
                    repr(float(r.selection_seconds)), repr(float(r.train_seconds))]
            if r.error is not None:
                w.writerow(head + [ERROR_METRIC, r.error])
                continue
            for name, value in r.metrics.items():
                w.writerow(head + [name, repr(float(value))])
    return path


def read_records_csv(path) -> list[BenchRecord]:
    """Inverse of :func:`write_records_csv` for the fields the CSV carries.

    Consecutive rows with the same cell key form one record; a metric name
    seen twice starts the next record (a further repeat of the same cell).
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ReportError(f"cannot read records from {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: header must be {','.join(CSV_HEADER)}")
    records: list[BenchRecord] = []
    cur = None
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"{path}: row {i} has {len(row)} fields")
        key = tuple(row[:7])
        name, value = row[7], row[8]
        if cur is None or cur["key"] != key or name in cur["metrics"] or cur["error"] is not None:
            cur = {"key": key, "metrics": {}, "error": None}
            records.append(cur)
        if name == ERROR_METRIC:
            cur["error"] = value
        else:
            cur["metrics"][name] = float(value)
    out = []
    repeat_of: dict = {}
    for c in records:
        d, s, m, task, n, ts, tt = c["key"]
        rep = repeat_of.get((d, s, m), -1) + 1
        repeat_of[(d, s, m)] = rep
        out.append(BenchRecord(d, s, m, task, int(n), float(ts), float(tt), c["metrics"],
                               repeat=rep, error=c["error"]))
    return out


def write_meta(records, path) -> Path:
    """One JSON line per record with seeds, hyperparameters and selected columns."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({"dataset": r.dataset, "selector": r.selector, "model": r.model,
                                 "repeat": r.repeat, "seed": r.seed, "params": r.params,
                                 "selected": list(r.selected), "error": r.error}) + "\n")
    return path


# -- markdown --------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return "–"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.4f}"
    return str(v)


def _by_dataset(records) -> "OrderedDict[str, list[BenchRecord]]":
    groups: OrderedDict[str, list] = OrderedDict()
    for r in records:
        groups.setdefault(r.dataset, []).append(r)
    return groups


def _ranked(recs):
    ok = [r for r in recs if r.ok and r.primary is not None]
    return sorted(ok, key=lambda r: (-r.primary, r.selector, r.model, r.repeat))


def markdown_report(records, title: str = "Benchmark results", settings=None) -> str:
    """Per-dataset tables sorted by the primary metric, best first."""
    lines = [f"# {title}", ""]
    for name, recs in _by_dataset(records).items():
        task = recs[0].task
        cols = REGRESSION_COLUMNS if task == "regression" else CLASSIFICATION_COLUMNS
        lines += [f"## {name} ({task})", ""]
        header = ["Feature Selection Method", "Model"] + [c[1] for c in cols] + \
                 ["Time Taken (seconds)", "Features Selected"]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join("---" for _ in header) + "|")
        for r in _ranked(recs):
            cells = [r.selector, r.model] + [_fmt(r.metrics.get(k)) for k, _ in cols] + \
                    [f"{r.selection_seconds:.4f}", str(r.n_selected)]
            lines.append("| " + " | ".join(cells) + " |")
        failed = [r for r in recs if not r.ok]
        if failed:
            lines += ["", "Failed cells:", ""]
            lines += [f"- {r.selector} / {r.model} (repeat {r.repeat}): {r.error}" for r in failed]
        lines.append("")
    if settings:
        lines += ["## Settings", ""]
        lines += [f"- {s}" for s in settings]
        lines.append("")
    return "\n".join(lines)


# -- svg -------------------------------------------------------------------

def svg_bar_chart(records, title: str) -> str:
    """Grouped bars: one group per selector, one bar per model, height = primary metric.

    Bars are ``<rect class="bar">`` elements carrying ``data-value``; their
    heights are ``value / y_max`` of the plot height (negative values draw
    as zero-height bars).
    """
    ok = [r for r in records if r.ok and r.primary is not None]
    selectors = list(OrderedDict.fromkeys(r.selector for r in records))
    models = list(OrderedDict.fromkeys(r.model for r in records))
    metric = records[0].primary_name if records else "metric"
    # the mean over repeats is drawn for each (selector, model) pair
    vals: dict = {}
    for r in ok:
        vals.setdefault((r.selector, r.model), []).append(r.primary)
    means = {k: sum(v) / len(v) for k, v in vals.items()}
    y_max = max([1.0] + list(means.values()))
    W, H = 720, 420
    left, right, top, bottom = 70, 170, 50, 80
    pw, ph = W - left - right, H - top - bottom
    group_w = pw / max(1, len(selectors))
    bar_w = group_w * 0.8 / max(1, len(models))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<title>{escape(title)}</title>',
           f'<rect class="background" x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>']
    # axes and gridlines
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    for i in range(6):
        v = y_max * i / 5
        y = top + ph - ph * i / 5
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.2f}</text>')
    for gi, sel in enumerate(selectors):
        x0 = left + gi * group_w + group_w * 0.1
        for mi, mod in enumerate(models):
            if (sel, mod) not in means:
                continue
            v = means[(sel, mod)]
            h = ph * max(v, 0.0) / y_max
            x = x0 + mi * bar_w
            out.append(f'<rect class="bar" x="{x:.3f}" y="{top + ph - h:.6f}" '
                       f'width="{bar_w * 0.95:.3f}" height="{h:.6f}" '
                       f'fill="{PALETTE[mi % len(PALETTE)]}" data-selector="{escape(sel)}" '
                       f'data-model="{escape(mod)}" data-value="{v!r}">'
                       f'<title>{escape(sel)} / {escape(mod)}: {v:.4f}</title></rect>')
        cx = left + gi * group_w + group_w / 2
        out.append(f'<text x="{cx:.2f}" y="{top + ph + 18}" text-anchor="middle">'
                   f'{escape(sel)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 20}" text-anchor="middle">'
               f'Feature selection method</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(metric)}</text>')
    # legend
    lx = left + pw + 20
    for mi, mod in enumerate(models):
        ly = top + 10 + mi * 22
        out.append(f'<rect class="legend" x="{lx}" y="{ly}" width="14" height="14" '
                   f'fill="{PALETTE[mi % len(PALETTE)]}"/>')
        out.append(f'<text x="{lx + 20}" y="{ly + 12}">{escape(mod)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "dataset"


def emit_report(records, output_dir, formats=FORMATS, title: str = "Benchmark results",
                settings=None) -> list[Path]:
    """Write the requested formats into ``output_dir``; returns the written paths."""
    records = list(records)
    if not records:
        raise ValueError("no records to report")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            written.append(write_records_csv(records, out / "records.csv"))
            if any(r.params for r in records):
                written.append(write_meta(records, out / "records_meta.jsonl"))
        if "markdown" in formats:
            p = out / "report.md"
            p.write_text(markdown_report(records, title, settings), encoding="utf-8")
            written.append(p)
        if "svg" in formats:
            for name, recs in _by_dataset(records).items():
                p = out / f"chart_{_slug(name)}.svg"
                p.write_text(svg_bar_chart(recs, name), encoding="utf-8")
                written.append(p)
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return written
