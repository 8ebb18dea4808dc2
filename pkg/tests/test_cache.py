import numpy as np
import pytest

from attrxfer import AttributionCache, CacheError
from attrxfer.attribution.maps import AttributionMap


@pytest.fixture()
def cache(tmp_path):
    return AttributionCache(tmp_path / "cache")


def _amap(rng, image_id="img-001", model="cnn_small", method="SS",
          config_hash="cafe01"):
    return AttributionMap(data=rng.random((32, 32)).astype(np.float32),
                          image_id=image_id, source_model_id=model,
                          method=method, config_hash=config_hash)


def test_round_trip_preserves_everything(cache, rng):
    amap = _amap(rng)
    cache.put(amap)
    back = cache.get("cnn_small", "SS", "cafe01", "img-001")
    np.testing.assert_array_equal(back.data, amap.data)
    assert back.image_id == amap.image_id
    assert back.source_model_id == amap.source_model_id
    assert back.method == amap.method
    assert back.config_hash == amap.config_hash


def test_layout_on_disk(cache, rng, tmp_path):
    cache.put(_amap(rng))
    expect = tmp_path / "cache" / "cnn_small" / "SS" / "cafe01" / "img-001.attr"
    assert expect.is_file()


def test_missing_map_error_names_the_key(cache):
    with pytest.raises(CacheError,
                       match="cnn_small/SS/cafe01/img-404"):
        cache.get("cnn_small", "SS", "cafe01", "img-404")


def test_corrupt_file_error_names_the_key(cache, rng):
    amap = _amap(rng)
    path = cache.put(amap)
    path.write_bytes(b"not an attribution map")
    with pytest.raises(CacheError, match="corrupt.*img-001"):
        cache.get("cnn_small", "SS", "cafe01", "img-001")


def test_contains_and_listing(cache, rng):
    assert not cache.contains("cnn_small", "SS", "cafe01", "a")
    cache.put_many([_amap(rng, image_id="b"), _amap(rng, image_id="a")])
    assert cache.contains("cnn_small", "SS", "cafe01", "a")
    assert cache.image_ids("cnn_small", "SS", "cafe01") == ["a", "b"]
    assert cache.image_ids("cnn_small", "SS", "unknown") == []


def test_awkward_image_ids_stay_reversible(cache, rng):
    weird = "shapes/s0 #7?x=1&y=2"
    cache.put(_amap(rng, image_id=weird))
    assert cache.image_ids("cnn_small", "SS", "cafe01") == [weird]
    assert cache.get("cnn_small", "SS", "cafe01", weird).image_id == weird


def test_overwrite_replaces_payload(cache, rng):
    first = _amap(rng)
    cache.put(first)
    second = _amap(rng)
    cache.put(second)
    back = cache.get("cnn_small", "SS", "cafe01", "img-001")
    np.testing.assert_array_equal(back.data, second.data)


def test_path_components_are_validated(cache):
    for bad in ("", "a/b", ".", ".."):
        with pytest.raises(CacheError, match="invalid"):
            cache.get(bad, "SS", "cafe01", "x")
        with pytest.raises(CacheError, match="invalid"):
            cache.get("cnn_small", "SS", bad, "x")


def test_manifest_round_trip(cache):
    params = {"steps": 300, "mode": "label-ce"}
    cache.write_manifest("cnn_small", "SS", "cafe01", params)
    doc = cache.read_manifest("cnn_small", "SS", "cafe01")
    assert doc["params"] == params
    assert doc["config_hash"] == "cafe01"
    with pytest.raises(CacheError, match="manifest"):
        cache.read_manifest("cnn_small", "SS", "ffffff")
