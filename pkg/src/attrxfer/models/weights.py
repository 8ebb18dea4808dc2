"""Single-file weight containers.

A container is a .npz archive holding every state-dict array under its own
name plus a `__manifest__` entry: UTF-8 JSON bytes recording format version,
model identity, builder recipe, input spec, class count, seed, and the tag of
the dataset the weights were trained on.
"""

import json
from pathlib import Path

import numpy as np
import torch

from ..exceptions import WeightFormatError
from ..preprocess import InputSpec

FORMAT_VERSION = 1
MANIFEST_KEY = "__manifest__"


def save_weights(adapter, path):
    """Write the adapter's weights and manifest to a single .npz file."""
    if adapter.builder is None:
        raise ValueError(
            f"{adapter.model_id} has no builder recipe; register a builder "
            "to make it persistable")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_id": adapter.model_id,
        "builder": adapter.builder,
        "input_spec": adapter.input_spec.to_dict(),
        "num_classes": adapter.num_classes,
        "seed": adapter.seed,
        "dataset_tag": adapter.dataset_tag,
    }
    arrays = {k: v.detach().cpu().numpy()
              for k, v in adapter.module.state_dict().items()}
    payload = np.frombuffer(json.dumps(manifest).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **{MANIFEST_KEY: payload}, **arrays)
    return path


def _rebuild(manifest):
    from .zoo import build_toy_cnn, build_toy_vit
    builder = manifest.get("builder") or {}
    kind = builder.get("kind")
    spec = InputSpec.from_dict(manifest["input_spec"])
    num_classes = int(manifest["num_classes"])
    seed = manifest.get("seed") or 0
    if kind == "toy_cnn":
        return build_toy_cnn(builder["variant"], spec, num_classes, seed=seed,
                             model_id=manifest["model_id"])
    if kind == "tiny_vit":
        return build_toy_vit(spec, num_classes, patch=builder["patch"],
                             seed=seed, model_id=manifest["model_id"],
                             dim=builder.get("dim", 64),
                             depth=builder.get("depth", 3),
                             heads=builder.get("heads", 4),
                             mlp_dim=builder.get("mlp_dim", 128))
    if kind == "registered":
        from .adapters import resolve_model
        return resolve_model(manifest["model_id"], spec, num_classes, seed)
    raise WeightFormatError(f"unknown builder kind {kind!r} in manifest")


def load_weights(path):
    """Rebuild a classifier from a container; predictions round-trip
    bit-identically."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"weight file not found: {path}")
    with np.load(path) as archive:
        if MANIFEST_KEY not in archive:
            raise WeightFormatError(f"{path} has no manifest entry")
        manifest = json.loads(bytes(archive[MANIFEST_KEY].tobytes()).decode("utf-8"))
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise WeightFormatError(
                f"{path}: unsupported format version {version!r} "
                f"(expected {FORMAT_VERSION})")
        arrays = {k: archive[k] for k in archive.files if k != MANIFEST_KEY}

    adapter = _rebuild(manifest)
    state = {}
    expected = adapter.module.state_dict()
    for key, ref in expected.items():
        if key not in arrays:
            raise WeightFormatError(f"{path}: missing array {key!r}")
        arr = arrays[key]
        if tuple(arr.shape) != tuple(ref.shape):
            raise WeightFormatError(
                f"{path}: array {key!r} has shape {tuple(arr.shape)}, "
                f"model expects {tuple(ref.shape)}")
        state[key] = torch.from_numpy(arr.copy())
    extra = set(arrays) - set(expected)
    if extra:
        raise WeightFormatError(f"{path}: unexpected arrays {sorted(extra)}")
    adapter.module.load_state_dict(state)
    adapter.module.eval()
    adapter.dataset_tag = manifest.get("dataset_tag")
    return adapter
