"""Evaluate one classifier on image-only or feature-only inputs."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..exceptions import MissingFeatureError
from ..preprocess import preprocess
from .metrics import accuracy, f1_score
from .records import EvalRecord, ExampleRow


def evaluate(target, dataset: Dataset, mode="I", features=None,
             f1_averaging="macro", chunk_size=256) -> EvalRecord:
    """Run the target on every example and fill an EvalRecord.

    Image mode consumes the raw dataset images; feature mode consumes
    ``features[image_id].data`` instead, and fails listing ids when any
    example has no feature input. Both modes share the exact same
    preprocessing and forward path, so an identity mask reproduces the
    image-mode record bit for bit.
    """
    if mode not in ("I", "F"):
        raise ValueError(f"mode must be I or F, got {mode!r}")
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if mode == "F":
        features = features or {}
        missing = [ex.id for ex in dataset.examples if ex.id not in features]
        if missing:
            raise MissingFeatureError(missing)
        raws = [features[ex.id].data for ex in dataset.examples]
        prov = {(features[ex.id].provenance) for ex in dataset.examples}
        if len(prov) > 1:
            raise ValueError(f"features mix provenances: {sorted(prov)}")
        source_model_id, method, _ = next(iter(prov))
    else:
        raws = [ex.image for ex in dataset.examples]
        source_model_id = method = None

    spec = target.input_spec
    batch = np.stack([preprocess(img, spec, normalize=False) for img in raws])
    probs = target.predict_proba(batch, chunk_size=chunk_size)
    preds = probs.argmax(axis=1)
    truths = dataset.labels()
    rows = tuple(
        ExampleRow(image_id=ex.id, true_label=int(truths[i]),
                   predicted_label=int(preds[i]),
                   p_true=float(probs[i, truths[i]]),
                   p_pred=float(probs[i, preds[i]]))
        for i, ex in enumerate(dataset.examples))
    return EvalRecord(
        target_model_id=target.model_id, input_mode=mode,
        source_model_id=source_model_id, method=method, n=len(dataset),
        accuracy=accuracy(preds, truths),
        f1=f1_score(preds, truths, averaging=f1_averaging,
                    num_classes=target.num_classes),
        f1_averaging=f1_averaging, rows=rows)
