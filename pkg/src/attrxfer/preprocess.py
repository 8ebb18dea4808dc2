"""Per-model input specs and preprocessing.

The bilinear kernel here is the single resize used everywhere in the
pipeline (input preprocessing and attribution-map upsampling), so shapes and
interpolation artifacts always agree.
"""

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F


@dataclass(frozen=True)
class InputSpec:
    """Target (C, H, W) of a classifier plus optional per-channel affine
    normalization applied as (x - mean) / scale."""

    channels: int
    height: int
    width: int
    mean: tuple = None
    scale: tuple = None

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.height < 1 or self.width < 1:
            raise ValueError("height and width must be positive")
        for name in ("mean", "scale"):
            v = getattr(self, name)
            if v is not None:
                v = tuple(float(x) for x in v)
                if len(v) != self.channels:
                    raise ValueError(f"{name} must have {self.channels} entries")
                object.__setattr__(self, name, v)

    @property
    def size(self):
        return (self.height, self.width)

    def normalizes(self):
        return self.mean is not None or self.scale is not None

    def to_dict(self):
        return {"channels": self.channels, "height": self.height,
                "width": self.width,
                "mean": list(self.mean) if self.mean else None,
                "scale": list(self.scale) if self.scale else None}

    @classmethod
    def from_dict(cls, d):
        return cls(channels=int(d["channels"]), height=int(d["height"]),
                   width=int(d["width"]),
                   mean=tuple(d["mean"]) if d.get("mean") else None,
                   scale=tuple(d["scale"]) if d.get("scale") else None)


def bilinear_resize(x, size):
    """Bilinear resize of (H, W), (C, H, W) or (N, C, H, W) arrays.

    Same-size inputs are returned as bit-exact copies.
    """
    x = np.asarray(x)
    size = (int(size[0]), int(size[1]))
    squeeze = []
    if x.ndim == 2:
        x, squeeze = x[None, None], [0, 0]
    elif x.ndim == 3:
        x, squeeze = x[None], [0]
    elif x.ndim != 4:
        raise ValueError(f"expected 2-D, 3-D or 4-D array, got shape {x.shape}")
    if x.shape[-2:] == size:
        out = x.copy()
    else:
        t = torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32))
        out = F.interpolate(t, size=size, mode="bilinear",
                            align_corners=False).numpy()
    for _ in squeeze:
        out = out[0]
    return out


def convert_channels(x, channels):
    """1<->3 channel conversion; 3->1 averages, 1->3 replicates."""
    x = np.asarray(x, dtype=np.float32)
    have = x.shape[0]
    if have == channels:
        return x
    if have == 3 and channels == 1:
        return x.mean(axis=0, keepdims=True)
    if have == 1 and channels == 3:
        return np.repeat(x, 3, axis=0)
    raise ValueError(f"cannot convert {have}-channel image to {channels} channels")


def preprocess(x, spec, normalize=True):
    """Resize and (optionally) normalize a copy of `x` to match `spec`.

    The original array is never modified. Pipelines that mask images in raw
    [0, 1] space call this with normalize=False and leave the affine
    normalization to the classifier adapter itself.
    """
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ValueError(f"image must be (C, H, W), got shape {x.shape}")
    out = convert_channels(x, spec.channels)
    out = bilinear_resize(out, spec.size)
    if normalize and spec.normalizes():
        mean = np.asarray(spec.mean if spec.mean else [0.0] * spec.channels,
                          dtype=np.float32).reshape(-1, 1, 1)
        scale = np.asarray(spec.scale if spec.scale else [1.0] * spec.channels,
                           dtype=np.float32).reshape(-1, 1, 1)
        out = (out - mean) / scale
    return out


def preprocess_batch(batch, spec, normalize=True):
    return np.stack([preprocess(x, spec, normalize=normalize) for x in batch])
