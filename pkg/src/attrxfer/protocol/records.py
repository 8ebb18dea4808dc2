"""Evaluation result containers for the transfer protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exceptions import ReportError
from .metrics import F1_AVERAGINGS, Histogram, histogram_counts

INPUT_MODES = ("I", "F")


@dataclass(frozen=True)
class ExampleRow:
    """One evaluated example: p_true is the probability assigned to the
    ground-truth class, p_pred the probability of the predicted class."""

    image_id: str
    true_label: int
    predicted_label: int
    p_true: float
    p_pred: float

    def __post_init__(self):
        if not (0.0 <= self.p_true <= 1.0 and 0.0 <= self.p_pred <= 1.0):
            raise ValueError(f"{self.image_id}: probabilities outside [0, 1]")
        # the predicted class is the argmax, so its probability dominates
        if self.p_pred < self.p_true:
            raise ValueError(f"{self.image_id}: p_pred {self.p_pred} < "
                             f"p_true {self.p_true}")


@dataclass(frozen=True)
class EvalRecord:
    """Metrics for one (target model, input mode) cell.

    ``source_model_id`` and ``method`` are None in image mode; in feature
    mode they identify whose attributions produced the inputs.
    """

    target_model_id: str
    input_mode: str
    source_model_id: object
    method: object
    n: int
    accuracy: float
    f1: float
    f1_averaging: str
    rows: tuple

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be I or F, "
                             f"got {self.input_mode!r}")
        if self.f1_averaging not in F1_AVERAGINGS:
            raise ValueError(f"unknown f1_averaging {self.f1_averaging!r}")
        object.__setattr__(self, "rows", tuple(self.rows))
        if len(self.rows) != self.n:
            raise ValueError(f"{len(self.rows)} rows but n={self.n}")

    def same_results(self, other: "EvalRecord") -> bool:
        """Field-for-field equality of everything measured, ignoring the
        labels that say how the inputs were produced."""
        return (self.target_model_id == other.target_model_id
                and self.n == other.n
                and self.accuracy == other.accuracy
                and self.f1 == other.f1
                and self.f1_averaging == other.f1_averaging
                and self.rows == other.rows)

    def to_dict(self) -> dict:
        return {
            "target_model_id": self.target_model_id,
            "input_mode": self.input_mode,
            "source_model_id": self.source_model_id,
            "method": self.method,
            "n": self.n,
            "accuracy": self.accuracy,
            "f1": self.f1,
            "f1_averaging": self.f1_averaging,
            "rows": [{"image_id": r.image_id, "true": r.true_label,
                      "pred": r.predicted_label, "p_true": r.p_true,
                      "p_pred": r.p_pred} for r in self.rows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalRecord":
        rows = tuple(ExampleRow(image_id=r["image_id"], true_label=r["true"],
                                predicted_label=r["pred"], p_true=r["p_true"],
                                p_pred=r["p_pred"]) for r in doc["rows"])
        return cls(target_model_id=doc["target_model_id"],
                   input_mode=doc["input_mode"],
                   source_model_id=doc["source_model_id"],
                   method=doc["method"], n=doc["n"],
                   accuracy=doc["accuracy"], f1=doc["f1"],
                   f1_averaging=doc["f1_averaging"], rows=rows)


def probability_histogram(record: EvalRecord, which="p_pred",
                          bins=10) -> Histogram:
    """Histogram of a record's per-example probabilities."""
    if which not in ("p_true", "p_pred"):
        raise ValueError(f"which must be p_true or p_pred, got {which!r}")
    values = [getattr(row, which) for row in record.rows]
    return histogram_counts(values, bins=bins)


@dataclass(frozen=True)
class TransferReport:
    """All records of one protocol run plus the config that produced it.

    ``histograms`` maps (target_model_id, input_mode, which) to Histogram;
    every feature-mode record must come with the image-mode record for the
    same target, so the I-vs-F comparison is always well defined.
    """

    source_model_id: str
    method: str
    config_hash: str
    dataset_tag: str
    records: tuple
    histograms: dict = field(default_factory=dict)
    config_snapshot: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        modes = {}
        for rec in self.records:
            key = (rec.target_model_id, rec.input_mode)
            if key in modes:
                raise ReportError(f"duplicate record for {key}")
            modes[key] = rec
        for target, mode in modes:
            if mode == "F" and (target, "I") not in modes:
                raise ReportError(f"feature record for {target} has no "
                                  "matching image record")

    def record(self, target_model_id: str, input_mode: str) -> EvalRecord:
        for rec in self.records:
            if (rec.target_model_id, rec.input_mode) == (target_model_id,
                                                         input_mode):
                return rec
        raise KeyError((target_model_id, input_mode))

    def target_ids(self) -> list:
        seen = []
        for rec in self.records:
            if rec.target_model_id not in seen:
                seen.append(rec.target_model_id)
        return seen

    def to_dict(self) -> dict:
        return {
            "source_model_id": self.source_model_id,
            "method": self.method,
            "config_hash": self.config_hash,
            "dataset_tag": self.dataset_tag,
            "records": [rec.to_dict() for rec in self.records],
            "histograms": [
                {"target_model_id": t, "input_mode": m, "which": w,
                 "bins": h.bins, "counts": list(h.counts)}
                for (t, m, w), h in sorted(self.histograms.items())],
            "config_snapshot": self.config_snapshot,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TransferReport":
        hists = {(h["target_model_id"], h["input_mode"], h["which"]):
                 Histogram(counts=tuple(h["counts"]), bins=h["bins"])
                 for h in doc.get("histograms", [])}
        return cls(source_model_id=doc["source_model_id"],
                   method=doc["method"], config_hash=doc["config_hash"],
                   dataset_tag=doc["dataset_tag"],
                   records=tuple(EvalRecord.from_dict(r)
                                 for r in doc["records"]),
                   histograms=hists,
                   config_snapshot=doc.get("config_snapshot", {}))
