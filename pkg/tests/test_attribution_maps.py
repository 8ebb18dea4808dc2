import numpy as np
import pytest

from attrxfer.attribution.maps import (MAGIC, AttributionMap, config_digest,
                                       read_map_array, write_map_array)


def _map(data, **kw):
    defaults = dict(image_id="img-1", source_model_id="cnn_small",
                    method="SS", config_hash="abc123")
    defaults.update(kw)
    return AttributionMap(data=data, **defaults)


def test_map_validates_range():
    _map(np.full((4, 4), 0.5, np.float32))
    with pytest.raises(ValueError):
        _map(np.full((4, 4), 1.5, np.float32))
    with pytest.raises(ValueError):
        _map(np.zeros((3, 4, 4), np.float32))


def test_map_requires_identity_fields():
    with pytest.raises(ValueError):
        _map(np.zeros((4, 4), np.float32), image_id="")
    with pytest.raises(ValueError):
        _map(np.zeros((4, 4), np.float32), method="")


def test_mean_mass():
    m = _map(np.concatenate([np.zeros((2, 4)), np.ones((2, 4))]
                            ).astype(np.float32))
    assert m.mean_mass() == 0.5


def test_file_round_trip_exact(tmp_path):
    arr = np.random.default_rng(0).random((13, 7)).astype(np.float32)
    path = tmp_path / "m.attr"
    write_map_array(arr, path)
    back = read_map_array(path)
    assert back.dtype == np.float32
    assert (back == arr).all()


def test_file_layout(tmp_path):
    arr = np.arange(6, dtype=np.float32).reshape(2, 3) / 10.0
    path = tmp_path / "m.attr"
    write_map_array(arr, path)
    blob = path.read_bytes()
    assert blob[:8] == MAGIC == b"ATTRMAP\x01"
    assert int.from_bytes(blob[8:12], "little") == 2
    assert int.from_bytes(blob[12:16], "little") == 3
    assert len(blob) == 8 + 8 + 4 * 6
    assert np.frombuffer(blob, "<f4", offset=16).tolist() == \
        pytest.approx(arr.flatten().tolist())


def test_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.attr"
    path.write_bytes(b"NOTAMAP!" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_map_array(path)


def test_read_rejects_truncated_payload(tmp_path):
    arr = np.zeros((4, 4), np.float32)
    path = tmp_path / "t.attr"
    write_map_array(arr, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(ValueError, match="bytes"):
        read_map_array(path)


def test_config_digest_is_order_insensitive():
    a = config_digest("SS", {"steps": 100, "sparsity_weight": 0.5})
    b = config_digest("SS", {"sparsity_weight": 0.5, "steps": 100})
    assert a == b and len(a) == 12


def test_config_digest_separates_params_and_methods():
    base = config_digest("SS", {"steps": 100})
    assert config_digest("SS", {"steps": 101}) != base
    assert config_digest("GC", {"steps": 100}) != base


def test_config_digest_rejects_unhashable_values():
    with pytest.raises(TypeError):
        config_digest("SS", {"arr": np.zeros(3)})
