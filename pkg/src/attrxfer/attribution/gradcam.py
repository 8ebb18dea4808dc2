"""Class-activation mapping from spatial activation gradients."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..preprocess import bilinear_resize, preprocess
from .maps import AttributionMap, config_digest


def grad_cam(model, image, class_index, layer=None) -> np.ndarray:
    """Raw map: channel weights are the spatial mean of d(logit)/d(act),
    combined as ReLU(sum_c w_c * A_c), bilinearly upsampled to image size,
    then min-max normalized. A map with zero range stays all zero.
    """
    x = preprocess(image, model.input_spec, normalize=False)
    acts, grads = model.activation_gradients(
        x[None], layer, "class_score", class_index=int(class_index))
    weights = grads[0].mean(axis=(1, 2))              # (C,)
    cam = np.maximum((weights[:, None, None] * acts[0]).sum(axis=0), 0.0)
    cam = bilinear_resize(cam.astype(np.float32), x.shape[-2:])
    lo, hi = float(cam.min()), float(cam.max())
    if hi - lo <= 0.0:
        return np.zeros_like(cam, dtype=np.float32)
    return ((cam - lo) / (hi - lo)).astype(np.float32)


class GradCam(BaseEstimator):
    """Grad-CAM attribution engine.

    ``layer`` names a published spatial layer of the source model; None
    uses the model's default (its last one). ``target`` picks the class
    whose logit is explained: "predicted" (the model's argmax on the
    image) or "label" (the example's ground truth).
    """

    method = "GC"

    def __init__(self, layer=None, target="predicted"):
        self.layer = layer
        self.target = target

    def config_digest(self) -> str:
        return config_digest(self.method, self.get_params())

    def attribute(self, model, example) -> AttributionMap:
        if self.target not in ("predicted", "label"):
            raise ValueError(f"target must be 'predicted' or 'label', "
                             f"got {self.target!r}")
        if not model.supports_activation_capture:
            raise ValueError(f"{model.model_id} does not expose activations")
        x = preprocess(example.image, model.input_spec, normalize=False)
        if self.target == "label":
            cls = int(example.label)
        else:
            cls = int(model.predict(x[None])[0])
        data = grad_cam(model, example.image, cls, layer=self.layer)
        return AttributionMap(data=data, image_id=example.id,
                              source_model_id=model.model_id,
                              method=self.method,
                              config_hash=self.config_digest())

    def attribute_batch(self, model, examples, baselines=None) -> list:
        # baselines accepted and ignored so engines share a call shape
        return [self.attribute(model, ex) for ex in examples]
