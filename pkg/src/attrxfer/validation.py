"""Input validation helpers shared across the package.

Each helper returns the value coerced to its canonical form (contiguous
float32/int64 numpy arrays) so callers can validate and normalize in one step,
in the spirit of sklearn's check_array.
"""

import numpy as np


def check_image(x, channels=None, name="image"):
    """Validate a (C, H, W) image with finite values in [0, 1], C in {1, 3}."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3:
        raise ValueError(f"{name} must be 3-D (C, H, W), got shape {x.shape}")
    if x.shape[0] not in (1, 3):
        raise ValueError(f"{name} must have 1 or 3 channels, got {x.shape[0]}")
    if channels is not None and x.shape[0] != channels:
        raise ValueError(f"{name} must have {channels} channels, got {x.shape[0]}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1], got range "
                         f"[{x.min():.4g}, {x.max():.4g}]")
    return np.ascontiguousarray(x)


def check_batch(x, name="batch"):
    """Validate a (N, C, H, W) stack of images; no range requirement."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4:
        raise ValueError(f"{name} must be 4-D (N, C, H, W), got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(x)


def check_mask(m, shape=None, name="mask"):
    """Validate a 2-D (H, W) map with finite values in [0, 1]."""
    m = np.asarray(m, dtype=np.float32)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D (H, W), got shape {m.shape}")
    if shape is not None and tuple(m.shape) != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite values")
    if m.min() < 0.0 or m.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return np.ascontiguousarray(m)


def check_probability_vector(p, tol=1e-5, name="p"):
    """Validate a 1-D probability vector on the simplex within tol."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.isfinite(p).all():
        raise ValueError(f"{name} contains non-finite values")
    if p.min() < -tol:
        raise ValueError(f"{name} has negative entries (min {p.min():.3g})")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 within {tol:g}, sums to {total:.6f}")
    return p


def check_labels(labels, num_classes=None, name="labels"):
    """Validate an integer label vector, optionally bounded by num_classes."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        as_int = labels.astype(np.int64)
        if not np.array_equal(as_int, labels):
            raise ValueError(f"{name} must be integers")
        labels = as_int
    labels = labels.astype(np.int64)
    if labels.size and labels.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    if num_classes is not None and labels.size and labels.max() >= num_classes:
        raise ValueError(f"{name} contain class {labels.max()} outside "
                         f"[0, {num_classes})")
    return labels


def check_consistent_length(a, b, names=("first", "second")):
    if len(a) != len(b):
        raise ValueError(f"{names[0]} and {names[1]} have different lengths: "
                         f"{len(a)} != {len(b)}")


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_open_unit_interval(value, name, closed=False):
    value = float(value)
    if closed:
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    elif not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value}")
    return value
