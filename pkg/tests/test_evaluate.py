import numpy as np
import pytest

from attrxfer import (FeatureExtractor, MissingFeatureError, evaluate,
                      extract_features)
from attrxfer.attribution.maps import AttributionMap


def _identity_maps(dataset, config_hash="ones"):
    return {ex.id: AttributionMap(data=np.ones(ex.image.shape[-2:],
                                               np.float32),
                                  image_id=ex.id, source_model_id="cnn_small",
                                  method="SS", config_hash=config_hash)
            for ex in dataset}


def test_image_mode_record_shape(small_model, micro_test):
    rec = evaluate(small_model, micro_test, "I")
    assert rec.target_model_id == small_model.model_id
    assert rec.input_mode == "I"
    assert rec.source_model_id is None and rec.method is None
    assert rec.n == len(micro_test) == len(rec.rows)
    assert 0.0 <= rec.accuracy <= 1.0
    assert rec.rows[0].image_id == micro_test[0].id


def test_accuracy_agrees_with_row_majority(small_model, micro_test):
    rec = evaluate(small_model, micro_test, "I")
    frac = np.mean([r.predicted_label == r.true_label for r in rec.rows])
    assert rec.accuracy == pytest.approx(frac)


def test_evaluation_is_deterministic(small_model, micro_test):
    a = evaluate(small_model, micro_test, "I")
    b = evaluate(small_model, micro_test, "I")
    assert a.same_results(b)
    assert a.rows == b.rows


def test_chunking_does_not_change_decisions(small_model, micro_test):
    # chunked batches may differ in float low bits, never in decisions
    whole = evaluate(small_model, micro_test, "I", chunk_size=1024)
    pieces = evaluate(small_model, micro_test, "I", chunk_size=7)
    assert whole.accuracy == pieces.accuracy
    for a, b in zip(whole.rows, pieces.rows):
        assert a.predicted_label == b.predicted_label
        assert a.p_pred == pytest.approx(b.p_pred, abs=1e-6)


def test_identity_mask_features_reproduce_image_record(small_model, micro_test):
    feats = FeatureExtractor().transform(micro_test, _identity_maps(micro_test))
    image_rec = evaluate(small_model, micro_test, "I")
    feature_rec = evaluate(small_model, micro_test, "F", features=feats)
    assert feature_rec.input_mode == "F"
    assert feature_rec.source_model_id == "cnn_small"
    assert feature_rec.method == "SS"
    assert image_rec.same_results(feature_rec)


def test_feature_mode_requires_every_id(small_model, micro_test):
    feats = FeatureExtractor().transform(micro_test, _identity_maps(micro_test))
    dropped = micro_test[0].id
    del feats[dropped]
    with pytest.raises(MissingFeatureError, match=dropped):
        evaluate(small_model, micro_test, "F", features=feats)


def test_feature_mode_rejects_mixed_provenance(small_model, micro_test):
    feats = FeatureExtractor().transform(micro_test, _identity_maps(micro_test))
    ex = micro_test[0]
    other = AttributionMap(data=np.ones(ex.image.shape[-2:], np.float32),
                           image_id=ex.id, source_model_id="cnn_large",
                           method="GC", config_hash="zzz")
    feats[ex.id] = extract_features(ex.image, other)
    with pytest.raises(ValueError, match="provenance"):
        evaluate(small_model, micro_test, "F", features=feats)


def test_rejects_unknown_mode_and_empty_dataset(small_model, micro_test):
    with pytest.raises(ValueError, match="mode"):
        evaluate(small_model, micro_test, "X")
    empty = micro_test.with_split((), "test")
    with pytest.raises(ValueError, match="empty"):
        evaluate(small_model, empty, "I")


def test_f1_averaging_is_recorded_and_used(small_model, micro_test):
    macro = evaluate(small_model, micro_test, "I", f1_averaging="macro")
    weighted = evaluate(small_model, micro_test, "I", f1_averaging="weighted")
    assert macro.f1_averaging == "macro"
    assert weighted.f1_averaging == "weighted"
    assert macro.accuracy == weighted.accuracy
