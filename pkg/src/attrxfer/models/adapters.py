"""Uniform classifier contract over torch modules.

A TorchClassifier consumes raw images in [0, 1] at its input resolution and
applies its own affine normalization internally, so masks and composites
always live in raw image space. It exposes probability forward passes,
analytic gradients of published scalars, and named spatial activation
capture.
"""

import copy
from dataclasses import dataclass

import numpy as np
import torch

from ..preprocess import InputSpec
from ..validation import check_batch


@dataclass(frozen=True)
class SpatialLayer:
    """Published activation layer: a module path plus how to read its output
    spatially ("spatial" conv maps, or "tokens" reshaped onto `grid`)."""

    path: str
    kind: str = "spatial"
    grid: tuple = None


@dataclass(frozen=True)
class ActivationHandle:
    layer_name: str
    shape: tuple          # (channels, h, w) or (tokens, dim) for token layers
    spatial_shape: tuple  # always (channels, h, w)


def _entropy_from_logits(logits):
    p = torch.softmax(logits, dim=1)
    return -(p * torch.log(p.clamp_min(1e-30))).sum()


class TorchClassifier:
    """Wrap a torch module as a classifier with a stable contract."""

    supports_input_gradients = True
    supports_activation_capture = True

    def __init__(self, module, model_id, input_spec, num_classes, *,
                 spatial_layers=None, default_layer=None, seed=None,
                 builder=None, dataset_tag=None):
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        module.eval()
        self.module = module
        self.model_id = model_id
        self.input_spec = input_spec
        self.num_classes = int(num_classes)
        self.spatial_layers = dict(spatial_layers or {})
        if default_layer is not None and default_layer not in self.spatial_layers:
            raise ValueError(f"default layer {default_layer!r} not in published layers")
        self.default_layer = default_layer
        self.seed = seed
        self.builder = builder
        self.dataset_tag = dataset_tag
        self.history_ = None
        self._dtype = torch.float32

    # -- basic introspection ------------------------------------------------

    def layer_names(self):
        return sorted(self.spatial_layers)

    def activation_handle(self, layer_name=None):
        layer_name = self._check_layer(layer_name)
        acts = self.capture_activations(self._probe_batch(), layer_name)
        spec = self.spatial_layers[layer_name]
        spatial_shape = tuple(acts.shape[1:])
        if spec.kind == "tokens":
            shape = (spatial_shape[1] * spatial_shape[2], spatial_shape[0])
        else:
            shape = spatial_shape
        return ActivationHandle(layer_name=layer_name, shape=shape,
                                spatial_shape=spatial_shape)

    def get_params(self, deep=True):
        return {"model_id": self.model_id, "num_classes": self.num_classes,
                "input_spec": self.input_spec.to_dict(), "seed": self.seed,
                "builder": dict(self.builder) if self.builder else None}

    def _probe_batch(self):
        spec = self.input_spec
        return np.zeros((1, spec.channels, spec.height, spec.width), np.float32)

    def _check_layer(self, layer_name):
        if layer_name is None:
            layer_name = self.default_layer
        if isinstance(layer_name, ActivationHandle):
            layer_name = layer_name.layer_name
        if layer_name not in self.spatial_layers:
            raise ValueError(
                f"unknown activation layer {layer_name!r}; published layers: "
                f"{', '.join(self.layer_names())}")
        return layer_name

    def _module_at(self, path):
        mods = dict(self.module.named_modules())
        if path not in mods:
            raise ValueError(f"module path {path!r} missing from {self.model_id}")
        return mods[path]

    # -- forward ------------------------------------------------------------

    def _normalize(self, t):
        spec = self.input_spec
        if not spec.normalizes():
            return t
        mean = torch.as_tensor(spec.mean or (0.0,) * spec.channels,
                               dtype=t.dtype).view(1, -1, 1, 1)
        scale = torch.as_tensor(spec.scale or (1.0,) * spec.channels,
                                dtype=t.dtype).view(1, -1, 1, 1)
        return (t - mean) / scale

    def forward_tensor(self, t):
        """Differentiable logits from a raw-space image tensor."""
        return self.module(self._normalize(t))

    def _to_tensor(self, batch, requires_grad=False):
        batch = check_batch(batch)
        t = torch.from_numpy(batch).to(self._dtype)
        if requires_grad:
            t.requires_grad_(True)
        return t

    def predict_proba(self, batch, chunk_size=256):
        """Per-example probability rows (softmax over classes)."""
        batch = check_batch(batch)
        outs = []
        with torch.no_grad():
            for i in range(0, len(batch), chunk_size):
                t = torch.from_numpy(batch[i:i + chunk_size]).to(self._dtype)
                outs.append(torch.softmax(self.forward_tensor(t), dim=1))
        return torch.cat(outs).to(torch.float32).numpy()

    def predict(self, batch, chunk_size=256):
        return self.predict_proba(batch, chunk_size=chunk_size).argmax(axis=1)

    # -- gradients and activation capture ------------------------------------

    def _scalar_from_logits(self, logits, scalar, class_index):
        if scalar == "class_score":
            if class_index is None:
                raise ValueError("class_score selector needs class_index")
            if not 0 <= int(class_index) < self.num_classes:
                raise ValueError(f"class_index {class_index} outside "
                                 f"[0, {self.num_classes})")
            return logits[:, int(class_index)].sum()
        if scalar == "entropy":
            return _entropy_from_logits(logits)
        raise ValueError(f"unknown scalar selector {scalar!r}; "
                         "use 'class_score' or 'entropy'")

    def _spatialize(self, tensor, spec):
        # token activations (N, T, D) are published on their patch grid
        if spec.kind == "tokens":
            gh, gw = spec.grid
            n, t, d = tensor.shape
            if t != gh * gw:
                raise RuntimeError(f"token count {t} does not match grid {spec.grid}")
            return tensor.transpose(1, 2).reshape(n, d, gh, gw)
        return tensor

    def gradient_of_scalar(self, batch, scalar, wrt="input", class_index=None):
        """Exact gradient of a published scalar (summed over the batch).

        `wrt` is "input" or a published layer name; returns an array shaped
        like the input batch or like the layer's spatial activations.
        """
        if wrt == "input":
            t = self._to_tensor(batch, requires_grad=True)
            value = self._scalar_from_logits(self.forward_tensor(t), scalar,
                                             class_index)
            (grad,) = torch.autograd.grad(value, t, allow_unused=True)
            grad = torch.zeros_like(t) if grad is None else grad
            return grad.detach().numpy()
        _, grads = self.activation_gradients(batch, wrt, scalar, class_index)
        return grads

    def capture_activations(self, batch, layer_name=None):
        """Spatial activations (N, C, h, w) at a published layer."""
        layer_name = self._check_layer(layer_name)
        spec = self.spatial_layers[layer_name]
        captured = {}

        def hook(_mod, _inp, out):
            captured["out"] = out

        handle = self._module_at(spec.path).register_forward_hook(hook)
        try:
            with torch.no_grad():
                self.forward_tensor(self._to_tensor(batch))
        finally:
            handle.remove()
        return self._spatialize(captured["out"], spec).numpy()

    def activation_gradients(self, batch, layer_name, scalar, class_index=None):
        """Spatial activations and the scalar's gradient at them, both
        (N, C, h, w)."""
        layer_name = self._check_layer(layer_name)
        spec = self.spatial_layers[layer_name]
        captured = {}

        def hook(_mod, _inp, out):
            captured["out"] = out
            return out

        handle = self._module_at(spec.path).register_forward_hook(hook)
        try:
            logits = self.forward_tensor(self._to_tensor(batch))
        finally:
            handle.remove()
        acts = captured["out"]
        value = self._scalar_from_logits(logits, scalar, class_index)
        (grad,) = torch.autograd.grad(value, acts, allow_unused=True)
        grad = torch.zeros_like(acts) if grad is None else grad
        return (self._spatialize(acts.detach(), spec).numpy(),
                self._spatialize(grad.detach(), spec).numpy())

    # -- lifecycle ------------------------------------------------------------

    def fit(self, train_dataset, config=None):
        """Train in place on a dataset; history lands in `history_`."""
        from .training import TrainConfig, train
        train(self, train_dataset, config or TrainConfig())
        return self

    def clone(self):
        """Independent copy for concurrent evaluation streams."""
        return copy.deepcopy(self)

    def astype(self, dtype):
        """Copy of this adapter running at a different float precision."""
        if not isinstance(dtype, torch.dtype):
            key = np.dtype(dtype).name
            table = {"float32": torch.float32, "float64": torch.float64}
            if key not in table:
                raise ValueError(f"unsupported dtype {dtype!r}")
            dtype = table[key]
        out = copy.deepcopy(self)
        out.module.to(dtype)
        out._dtype = dtype
        return out

    def save(self, path):
        from .weights import save_weights
        return save_weights(self, path)

    def __repr__(self):
        return (f"TorchClassifier(model_id={self.model_id!r}, "
                f"num_classes={self.num_classes}, "
                f"input={self.input_spec.channels}x{self.input_spec.height}"
                f"x{self.input_spec.width})")


def gradient_of_scalar(adapter, batch, scalar, wrt="input", class_index=None):
    """Module-level alias of the adapter gradient primitive."""
    if wrt == "input" and not adapter.supports_input_gradients:
        raise ValueError(f"{adapter.model_id} does not support input gradients")
    if wrt != "input" and not adapter.supports_activation_capture:
        raise ValueError(f"{adapter.model_id} does not support activation capture")
    return adapter.gradient_of_scalar(batch, scalar, wrt=wrt,
                                      class_index=class_index)


# -- registry ----------------------------------------------------------------

_REGISTRY = {}


def register_model(model_id, builder):
    """Register a builder callable (model_id, input_spec, num_classes, seed)
    so external classifiers can join the zoo."""
    _REGISTRY[model_id] = builder


def available_models():
    from .zoo import CNN_WIDTHS
    builtin = [f"cnn_{v}" for v in CNN_WIDTHS] + ["vit_tiny"]
    return sorted(set(builtin) | set(_REGISTRY))


def resolve_model(model_id, input_spec=None, num_classes=3, seed=0):
    """Deterministically build the classifier registered under `model_id`."""
    from .zoo import builtin_builder
    if model_id in _REGISTRY:
        return _REGISTRY[model_id](model_id, input_spec, num_classes, seed)
    if model_id in available_models():
        return builtin_builder(model_id, input_spec, num_classes, seed)
    raise ValueError(f"unknown model id {model_id!r}; known ids: "
                     f"{', '.join(available_models())}")
