"""Classification metrics and histogram counting.

Own implementations (a few lines each) so the numbers the reports carry
are auditable; the test suite cross-checks them against scikit-learn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..validation import check_consistent_length, check_labels

F1_AVERAGINGS = ("macro", "weighted")


def accuracy(preds, truths) -> float:
    preds = check_labels(preds, name="preds")
    truths = check_labels(truths, name="truths")
    check_consistent_length(preds, truths, names=("preds", "truths"))
    if len(preds) == 0:
        raise ValueError("accuracy of an empty prediction list is undefined")
    return float((preds == truths).sum() / len(preds))


def confusion_matrix(truths, preds, num_classes=None) -> np.ndarray:
    """Counts[i, j] = examples with true label i predicted as j."""
    preds = check_labels(preds, name="preds")
    truths = check_labels(truths, name="truths")
    check_consistent_length(preds, truths, names=("truths", "preds"))
    if num_classes is None:
        num_classes = int(max(preds.max(initial=0), truths.max(initial=0))) + 1
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (truths, preds), 1)
    return cm


def f1_score(preds, truths, averaging="macro", num_classes=None) -> float:
    """Per-class F1 = 2PR/(P+R), taken as 0 where P+R = 0.

    macro averages classes equally; weighted averages by true support.
    """
    if averaging not in F1_AVERAGINGS:
        raise ValueError(f"averaging must be one of {F1_AVERAGINGS}, "
                         f"got {averaging!r}")
    cm = confusion_matrix(truths, preds, num_classes=num_classes)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)      # true count per class
    predicted = cm.sum(axis=0).astype(np.float64)    # predicted count
    denom = support + predicted                       # = (TP+FN) + (TP+FP)
    f1 = np.divide(2.0 * tp, denom, out=np.zeros_like(tp),
                   where=denom > 0)
    if averaging == "macro":
        return float(f1.mean())
    if support.sum() == 0:
        raise ValueError("weighted F1 needs at least one example")
    return float((f1 * support).sum() / support.sum())


@dataclass(frozen=True)
class Histogram:
    """Equal-width counts on [0, 1]; the last bin is closed on the right."""

    counts: tuple
    bins: int

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.counts) != self.bins:
            raise ValueError(f"{len(self.counts)} counts for {self.bins} bins")

    @property
    def n(self) -> int:
        return sum(self.counts)

    def edges(self):
        return [(i / self.bins, (i + 1) / self.bins)
                for i in range(self.bins)]


def histogram_counts(values, bins=10) -> Histogram:
    """Bin values from [0, 1]; bin i covers [i/bins, (i+1)/bins), except the
    last which also includes 1.0, so every value lands in exactly one bin."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    v = np.asarray(values, dtype=np.float64)
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise ValueError("histogram values must lie in [0, 1]")
    idx = np.minimum((v * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return Histogram(counts=tuple(int(c) for c in counts), bins=bins)
