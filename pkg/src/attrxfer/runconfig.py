"""Declarative run configuration: one YAML file drives every command.

The file is a nested mapping; unknown keys are rejected up front so typos
fail fast. Scalar keys can be overridden on the command line with
``--set dotted.path=value`` (values parsed as YAML scalars). Parsing and
serialization round-trip losslessly.
"""

from __future__ import annotations

import copy
from pathlib import Path

import yaml

DEFAULT_CONFIG = {
    "seed": 0,
    "dataset": {
        "kind": "shapes",          # "shapes" or "folder"
        "n": 7200,
        "num_classes": 3,
        "side": 32,
        "channels": 3,
        "train_fraction": 0.8333333333333334,
        "path": None,              # folder root when kind == "folder"
    },
    "models": {
        "source": "cnn_small",
        "targets": ["cnn_large", "vit_tiny"],
        "weights_dir": None,       # defaults to <output.dir>/weights
    },
    "train": {
        "epochs": 20,
        "batch_size": 64,
        "step_size": 0.05,
        "optimizer": "sgd",
        "momentum": 0.9,
    },
    "attribution": {
        "method": "SS",            # SS | GC | RANDOM
        "batch_size": 32,
        "ss": {
            "steps": 300,
            "step_size": 30.0,
            "baselines_per_step": 8,
            "sparsity_weight": 2.0,
            "tv_weight": 0.0,
            "objective_mode": "label-ce",
            "mask_init": 0.5,
            "mask_grid": [8, 8],
        },
        "gc": {
            "layer": None,
            "target": "predicted",
        },
    },
    "evaluation": {
        "binarize": True,
        "threshold": 0.45,
        "f1_averaging": "macro",
        "bins": 10,
        "identity_mask": False,    # debug: replace every map with ones
    },
    "output": {
        "dir": "runs/default",
        "cache": None,             # default <dir>/cache; env var overrides
    },
}


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def load_config(path) -> dict:
    """Parse a YAML config and fill unset keys with defaults."""
    path = Path(path)
    doc = yaml.safe_load(path.read_text())
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a mapping, "
                         f"got {type(doc).__name__}")
    return merge_config(default_config(), doc, source=str(path))


def save_config(config: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config, sort_keys=True,
                                   default_flow_style=False))
    return path


def merge_config(base: dict, override: dict, source="config",
                 prefix="") -> dict:
    """Recursively overlay `override` onto `base`, rejecting unknown keys."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ValueError(f"{source}: unknown config key {dotted!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = merge_config(base[key], value, source=source,
                                    prefix=f"{dotted}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_overrides(config: dict, assignments) -> dict:
    """Apply `--set a.b.c=value` style overrides; values parse as YAML."""
    out = copy.deepcopy(config)
    for assignment in assignments:
        if "=" not in assignment:
            raise ValueError(f"override {assignment!r} is not of the form "
                             "key.path=value")
        dotted, raw = assignment.split("=", 1)
        keys = dotted.strip().split(".")
        node = out
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise ValueError(f"override targets unknown key {dotted!r}")
            node = node[key]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ValueError(f"override targets unknown key {dotted!r}")
        if isinstance(node[leaf], dict):
            raise ValueError(f"override {dotted!r} targets a section, "
                             "not a scalar")
        node[leaf] = _parse_scalar(raw)
    return out


def _parse_scalar(raw: str):
    value = yaml.safe_load(raw)
    if isinstance(value, str):
        # YAML 1.1 misses "1e-2"-style floats; accept them anyway
        try:
            return float(value)
        except ValueError:
            return value
    return value


def config_value(config: dict, dotted: str):
    node = config
    for key in dotted.split("."):
        node = node[key]
    return node
