"""Masked feature inputs: the image restricted to its attributed regions.

A feature input is the elementwise product of the raw [0, 1] image with its
attribution map (zero fill outside the mask), computed before any model
normalization. Each consumer then applies its own preprocessing to the
masked image, exactly as it would to an unmasked one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attribution.maps import AttributionMap
from .data import Dataset
from .exceptions import MissingFeatureError
from .validation import check_image, check_open_unit_interval

try:
    from sklearn.base import BaseEstimator, TransformerMixin
except ImportError:  # pragma: no cover
    BaseEstimator = object
    TransformerMixin = object


@dataclass(frozen=True)
class FeatureInput:
    """A masked image plus the provenance of the mask that produced it."""

    data: np.ndarray
    image_id: str
    provenance: tuple  # (source_model_id, method, config_hash)
    binarized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        check_image(arr, name="data")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "provenance", tuple(self.provenance))


def extract_features(x, amap: AttributionMap, binarize=False,
                     threshold=0.5) -> FeatureInput:
    """Apply a mask channelwise: output channel c is ``m * x_c``.

    With ``binarize`` the mask is hardened to 1[M >= threshold] first.
    The mask and image spatial shapes must already agree.
    """
    x = check_image(np.asarray(x, dtype=np.float32), name="x")
    if amap.data.shape != x.shape[-2:]:
        raise ValueError(f"map shape {amap.data.shape} does not match image "
                         f"spatial size {x.shape[-2:]}")
    if binarize:
        check_open_unit_interval(threshold, name="threshold", closed=True)
        m = (amap.data >= threshold).astype(np.float32)
    else:
        m = amap.data
    return FeatureInput(data=m[None] * x, image_id=amap.image_id,
                        provenance=(amap.source_model_id, amap.method,
                                    amap.config_hash),
                        binarized=bool(binarize))


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Dataset-wide feature extraction against a map lookup.

    ``transform(dataset, maps)`` returns ``{image_id: FeatureInput}`` and
    fails up front, listing ids, when any example lacks a map.
    """

    def __init__(self, binarize=False, threshold=0.5):
        self.binarize = binarize
        self.threshold = threshold

    def fit(self, X=None, y=None):
        return self

    def transform(self, dataset: Dataset, maps: dict) -> dict:
        missing = [ex.id for ex in dataset.examples if ex.id not in maps]
        if missing:
            raise MissingFeatureError(missing)
        return {ex.id: extract_features(ex.image, maps[ex.id],
                                        binarize=self.binarize,
                                        threshold=self.threshold)
                for ex in dataset.examples}


def export_features(features: dict, out_dir) -> list:
    """Write each feature input as a PNG for visual inspection."""
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for image_id in sorted(features):
        arr = features[image_id].data
        px = np.clip(arr * 255.0 + 0.5, 0, 255).astype(np.uint8)
        px = px[0] if px.shape[0] == 1 else px.transpose(1, 2, 0)
        path = out_dir / f"{_safe_name(image_id)}.png"
        Image.fromarray(px).save(path)
        written.append(path)
    return written


def _safe_name(image_id: str) -> str:
    import urllib.parse
    return urllib.parse.quote(image_id, safe="")
