"""Plain-text tables and the CSV/JSON report files.

Output formats are part of the package contract: the same inputs must
render to the same bytes so reports can be diffed across runs.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .records import EvalRecord, TransferReport

CSV_REPORT_COLUMNS = ("source_model", "method", "target_model", "input_mode",
                      "n", "accuracy", "f1", "f1_averaging")
CSV_EXAMPLE_COLUMNS = ("image_id", "true", "pred", "p_true", "p_pred")
CSV_HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "count")


def render_metrics_table(columns, rows, title=None) -> str:
    """Fixed-width text table: header, dashed rule, one line per row.

    Cells are preformatted strings; each column is left-justified to the
    widest entry, columns are separated by two spaces, lines carry no
    trailing whitespace, and the result ends with a newline.
    """
    columns = [str(c) for c in columns]
    rows = [[str(c) for c in row] for row in rows]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row {row} has {len(row)} cells for "
                             f"{len(columns)} columns")
    widths = [max(len(columns[j]), *(len(r[j]) for r in rows))
              if rows else len(columns[j]) for j in range(len(columns))]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip())
    lines.append("-" * len(lines[-1]))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def render_method_table(method, model_labels, acc_cells, f1_cells) -> str:
    """Two-row method summary in the published layout: one accuracy row and
    one F1 row, with an (I) and an (F) column per model."""
    n = len(model_labels)
    if len(acc_cells) != 2 * n or len(f1_cells) != 2 * n:
        raise ValueError(f"expected {2 * n} accuracy and F1 cells for "
                         f"{n} models")
    header = ["Exp.", "Metric"]
    for label in model_labels:
        header += [f"{label} (I)", f"{label} (F)"]
    rows = [[method, "accuracy"] + list(acc_cells),
            ["", "F1"] + list(f1_cells)]
    return render_metrics_table(header, rows)


def render_report_table(report: TransferReport) -> str:
    """Render a TransferReport in the two-row published layout."""
    targets = report.target_ids()
    acc, f1 = [], []
    for target in targets:
        for mode in ("I", "F"):
            rec = report.record(target, mode)
            acc.append(f"{100.0 * rec.accuracy:.2f}%")
            f1.append(f"{rec.f1:.2f}")
    return render_method_table(report.method, targets, acc, f1)


def _write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue())
    return path


def write_report_csv(report: TransferReport, path) -> Path:
    rows = []
    for rec in report.records:
        rows.append((rec.source_model_id or "", rec.method or "",
                     rec.target_model_id, rec.input_mode, rec.n,
                     f"{rec.accuracy:.6f}", f"{rec.f1:.6f}",
                     rec.f1_averaging))
    return _write_csv(path, CSV_REPORT_COLUMNS, rows)


def write_per_example_csv(record: EvalRecord, path) -> Path:
    rows = [(r.image_id, r.true_label, r.predicted_label,
             f"{r.p_true:.6f}", f"{r.p_pred:.6f}") for r in record.rows]
    return _write_csv(path, CSV_EXAMPLE_COLUMNS, rows)


def write_histogram_csv(histogram, path) -> Path:
    rows = [(f"{left:.6f}", f"{right:.6f}", count)
            for (left, right), count in zip(histogram.edges(),
                                            histogram.counts)]
    return _write_csv(path, CSV_HISTOGRAM_COLUMNS, rows)


def write_report_json(report: TransferReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                    + "\n")
    return path
