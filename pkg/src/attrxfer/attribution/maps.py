"""Attribution map container and its on-disk binary format."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..validation import check_mask

MAGIC = b"ATTRMAP\x01"
_HEADER = struct.Struct("<II")  # height, width after magic


@dataclass(frozen=True)
class AttributionMap:
    """A per-pixel relevance mask in [0, 1] tied to its provenance.

    ``config_hash`` identifies the method configuration that produced the
    map, so maps from different settings never get mixed up in a cache.
    """

    data: np.ndarray
    image_id: str
    source_model_id: str
    method: str
    config_hash: str

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        check_mask(arr, name="data")
        object.__setattr__(self, "data", arr)
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if not self.method:
            raise ValueError("method must be non-empty")

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def mean_mass(self) -> float:
        return float(self.data.mean())


def config_digest(method: str, params: dict) -> str:
    """Short stable digest of a method name plus its parameter dict.

    Canonical form is sorted-key JSON; any JSON-representable parameter
    values hash the same regardless of insertion order.
    """
    payload = json.dumps({"method": method, "params": params},
                         sort_keys=True, separators=(",", ":"),
                         default=_jsonable)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"parameter of type {type(value).__name__} is not hashable "
                    "into a config digest")


def write_map_array(arr: np.ndarray, path) -> None:
    """Serialize a 2-D float32 map: magic, two uint32 dims, raw pixels.

    All integers and floats are little-endian; pixels are row-major.
    """
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {arr.shape}")
    h, w = arr.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(h, w))
        fh.write(arr.astype("<f4", copy=False).tobytes())


def read_map_array(path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise ValueError(f"{path} is not an attribution map file "
                         f"(bad magic {blob[:8]!r})")
    h, w = _HEADER.unpack_from(blob, len(MAGIC))
    offset = len(MAGIC) + _HEADER.size
    expected = offset + 4 * h * w
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for a "
                         f"{h}x{w} map, found {len(blob)}")
    arr = np.frombuffer(blob, dtype="<f4", count=h * w, offset=offset)
    return arr.reshape(h, w).astype(np.float32, copy=True)
