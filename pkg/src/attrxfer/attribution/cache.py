"""On-disk store for attribution maps.

Layout: ``<root>/<source_model_id>/<method>/<config_hash>/<image_id>.attr``
with one ``manifest.json`` per config directory describing the parameters
that produced the maps. Image ids are percent-encoded in filenames so
arbitrary ids stay collision-free and reversible.
"""

from __future__ import annotations

import json
import logging
import urllib.parse
from pathlib import Path

from ..exceptions import CacheError
from .maps import AttributionMap, read_map_array, write_map_array

log = logging.getLogger(__name__)

_SUFFIX = ".attr"


def _encode_id(image_id: str) -> str:
    return urllib.parse.quote(image_id, safe="") + _SUFFIX


def _decode_id(filename: str) -> str:
    return urllib.parse.unquote(filename[:-len(_SUFFIX)])


class AttributionCache:
    """Content-addressed map store keyed by (model, method, config, image)."""

    def __init__(self, root):
        self.root = Path(root)

    def _dir(self, source_model_id, method, config_hash) -> Path:
        for part, name in ((source_model_id, "source_model_id"),
                           (method, "method"), (config_hash, "config_hash")):
            if not part or "/" in part or part in (".", ".."):
                raise CacheError(f"invalid {name}: {part!r}")
        return self.root / source_model_id / method / config_hash

    def _path(self, source_model_id, method, config_hash, image_id) -> Path:
        return self._dir(source_model_id, method,
                         config_hash) / _encode_id(image_id)

    def put(self, amap: AttributionMap) -> Path:
        path = self._path(amap.source_model_id, amap.method,
                          amap.config_hash, amap.image_id)
        if path.exists():
            log.info("overwriting cached map %s/%s/%s/%s",
                     amap.source_model_id, amap.method, amap.config_hash,
                     amap.image_id)
        write_map_array(amap.data, path)
        return path

    def put_many(self, maps) -> None:
        for amap in maps:
            self.put(amap)

    def get(self, source_model_id, method, config_hash,
            image_id) -> AttributionMap:
        path = self._path(source_model_id, method, config_hash, image_id)
        if not path.exists():
            raise CacheError(
                f"no cached map for {source_model_id}/{method}/"
                f"{config_hash}/{image_id}")
        try:
            data = read_map_array(path)
        except ValueError as exc:
            raise CacheError(
                f"corrupt cached map {source_model_id}/{method}/"
                f"{config_hash}/{image_id}: {exc}") from exc
        return AttributionMap(data=data, image_id=image_id,
                              source_model_id=source_model_id,
                              method=method, config_hash=config_hash)

    def contains(self, source_model_id, method, config_hash,
                 image_id) -> bool:
        return self._path(source_model_id, method, config_hash,
                          image_id).exists()

    def image_ids(self, source_model_id, method, config_hash) -> list:
        d = self._dir(source_model_id, method, config_hash)
        if not d.is_dir():
            return []
        return sorted(_decode_id(p.name) for p in d.iterdir()
                      if p.name.endswith(_SUFFIX))

    def write_manifest(self, source_model_id, method, config_hash,
                       params: dict) -> Path:
        d = self._dir(source_model_id, method, config_hash)
        d.mkdir(parents=True, exist_ok=True)
        path = d / "manifest.json"
        doc = {"source_model_id": source_model_id, "method": method,
               "config_hash": config_hash, "params": params}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True,
                                   default=str) + "\n")
        return path

    def read_manifest(self, source_model_id, method, config_hash) -> dict:
        path = self._dir(source_model_id, method, config_hash) / "manifest.json"
        if not path.exists():
            raise CacheError(f"no manifest under {path.parent}")
        return json.loads(path.read_text())
