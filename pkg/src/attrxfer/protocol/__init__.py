from .evaluate import evaluate
from .metrics import (Histogram, accuracy, confusion_matrix, f1_score,
                      histogram_counts)
from .records import (EvalRecord, ExampleRow, TransferReport,
                      probability_histogram)
from .rendering import (render_metrics_table, render_method_table,
                        render_report_table, write_histogram_csv,
                        write_per_example_csv, write_report_csv,
                        write_report_json)
from .runner import run_transfer_protocol, write_report_files

__all__ = [
    "EvalRecord", "ExampleRow", "Histogram", "TransferReport", "accuracy",
    "confusion_matrix", "evaluate", "f1_score", "histogram_counts",
    "probability_histogram", "render_metrics_table", "render_method_table",
    "render_report_table", "run_transfer_protocol", "write_histogram_csv",
    "write_per_example_csv", "write_report_csv", "write_report_files",
    "write_report_json",
]
